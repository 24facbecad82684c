"""Spectrum-analyzer trace container and its CSV representation.

File format: leading ``# key=value`` comment lines carry metadata, then a
``frequency_hz,power_db`` header, then one row per point. Mandatory
metadata: ``kind`` (squeezed | antisqueezed | shot | dark), ``rbw_hz``,
``vbw_hz``. Optional: ``lo_power_mw``, ``pump_power_mw``,
``dark_subtracted`` (true/false), ``axis`` (``frequency_hz`` default, or
``time_s`` for zero-span traces where the first column is time), plus
free-form provenance keys such as ``rng`` and ``seed``.

Floats are written with ``repr`` so a write/read/write cycle is
byte-identical.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TraceFormatError


class TraceKind(enum.Enum):
    SQUEEZED = "squeezed"
    ANTISQUEEZED = "antisqueezed"
    SHOT = "shot"
    DARK = "dark"


_MANDATORY_KEYS = ("kind", "rbw_hz", "vbw_hz")
_OPTIONAL_FLOAT_KEYS = ("lo_power_mw", "pump_power_mw")


@dataclass
class TraceData:
    """One spectrum-analyzer trace, in dB relative to shot noise.

    ``frequencies_hz`` is the sample axis; for zero-span traces it holds
    time in seconds and ``axis`` is ``"time_s"``.
    """

    frequencies_hz: np.ndarray
    power_db: np.ndarray
    kind: TraceKind
    rbw_hz: float
    vbw_hz: float
    lo_power_mw: float | None = None
    pump_power_mw: float | None = None
    dark_subtracted: bool = False
    axis: str = "frequency_hz"
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies_hz = np.asarray(self.frequencies_hz, dtype=float)
        self.power_db = np.asarray(self.power_db, dtype=float)
        if self.frequencies_hz.ndim != 1 or self.power_db.ndim != 1:
            raise TraceFormatError("trace arrays must be one-dimensional")
        if len(self.frequencies_hz) != len(self.power_db):
            raise TraceFormatError("axis and power arrays differ in length")
        if len(self.frequencies_hz) == 0:
            raise TraceFormatError("trace is empty")
        if np.any(np.diff(self.frequencies_hz) <= 0.0):
            raise TraceFormatError("sample axis must be strictly increasing")
        if not np.all(np.isfinite(self.power_db)):
            raise TraceFormatError("power values must be finite")
        if self.rbw_hz <= 0.0 or self.vbw_hz <= 0.0:
            raise TraceFormatError("rbw_hz and vbw_hz must be positive")
        if (
            self.kind is TraceKind.SQUEEZED
            and self.dark_subtracted
            and self.axis == "frequency_hz"
        ):
            if np.max(self.power_db) >= 1.0:
                raise TraceFormatError(
                    "corrected squeezed trace exceeds +1 dB relative to shot noise"
                )

    def __len__(self) -> int:
        return len(self.frequencies_hz)

    def replace_points(self, freqs: np.ndarray, powers: np.ndarray) -> "TraceData":
        """Copy of this trace with a different set of sample points."""
        return TraceData(
            frequencies_hz=freqs,
            power_db=powers,
            kind=self.kind,
            rbw_hz=self.rbw_hz,
            vbw_hz=self.vbw_hz,
            lo_power_mw=self.lo_power_mw,
            pump_power_mw=self.pump_power_mw,
            dark_subtracted=self.dark_subtracted,
            axis=self.axis,
            extra=dict(self.extra),
        )


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace_csv(trace: TraceData, path: str | Path) -> None:
    """Write a trace in the metadata-header CSV format."""
    lines = [f"# kind={trace.kind.value}"]
    lines.append(f"# rbw_hz={_fmt(trace.rbw_hz)}")
    lines.append(f"# vbw_hz={_fmt(trace.vbw_hz)}")
    if trace.lo_power_mw is not None:
        lines.append(f"# lo_power_mw={_fmt(trace.lo_power_mw)}")
    if trace.pump_power_mw is not None:
        lines.append(f"# pump_power_mw={_fmt(trace.pump_power_mw)}")
    lines.append(f"# dark_subtracted={'true' if trace.dark_subtracted else 'false'}")
    if trace.axis != "frequency_hz":
        lines.append(f"# axis={trace.axis}")
    for key in sorted(trace.extra):
        lines.append(f"# {key}={trace.extra[key]}")
    lines.append("frequency_hz,power_db")
    for x, p in zip(trace.frequencies_hz, trace.power_db):
        lines.append(f"{_fmt(x)},{_fmt(p)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_trace_csv(path: str | Path) -> TraceData:
    """Read a trace CSV, validating format and invariants strictly."""
    path = Path(path)
    if not path.exists():
        raise TraceFormatError(f"no such trace file: {path}")
    meta: dict[str, str] = {}
    freqs: list[float] = []
    powers: list[float] = []
    header_seen = False
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header_seen:
                raise TraceFormatError(
                    f"{path}:{lineno}: metadata after the header line"
                )
            body = line[1:].strip()
            if "=" not in body:
                raise TraceFormatError(f"{path}:{lineno}: malformed metadata line")
            key, _, value = body.partition("=")
            meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line != "frequency_hz,power_db":
                raise TraceFormatError(
                    f"{path}:{lineno}: expected header 'frequency_hz,power_db', "
                    f"got {line!r}"
                )
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceFormatError(f"{path}:{lineno}: expected two columns")
        try:
            x = float(parts[0])
            p = float(parts[1])
        except ValueError:
            raise TraceFormatError(f"{path}:{lineno}: non-numeric value") from None
        if freqs and x <= freqs[-1]:
            raise TraceFormatError(
                f"{path}:{lineno}: sample axis not strictly increasing "
                f"({parts[0]} after {_fmt(freqs[-1])})"
            )
        freqs.append(x)
        powers.append(p)
    if not header_seen:
        raise TraceFormatError(f"{path}: missing 'frequency_hz,power_db' header")
    for key in _MANDATORY_KEYS:
        if key not in meta:
            raise TraceFormatError(f"{path}: missing mandatory metadata '{key}'")
    try:
        kind = TraceKind(meta.pop("kind"))
    except ValueError:
        raise TraceFormatError(f"{path}: unknown trace kind") from None

    def _pop_float(key: str) -> float | None:
        if key not in meta:
            return None
        try:
            return float(meta.pop(key))
        except ValueError:
            raise TraceFormatError(f"{path}: metadata '{key}' is not numeric") from None

    rbw = _pop_float("rbw_hz")
    vbw = _pop_float("vbw_hz")
    lo = _pop_float("lo_power_mw")
    pump = _pop_float("pump_power_mw")
    subtracted = meta.pop("dark_subtracted", "false").lower() == "true"
    axis = meta.pop("axis", "frequency_hz")
    try:
        return TraceData(
            frequencies_hz=np.array(freqs),
            power_db=np.array(powers),
            kind=kind,
            rbw_hz=rbw,
            vbw_hz=vbw,
            lo_power_mw=lo,
            pump_power_mw=pump,
            dark_subtracted=subtracted,
            axis=axis,
            extra=meta,
        )
    except TraceFormatError as exc:
        raise TraceFormatError(f"{path}: {exc}") from None
