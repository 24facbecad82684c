"""Refractive-index models supplied as configuration data.

The co-resonance solver never hardcodes material data; it reads a
coefficient file in a strict ``key = value`` text format. Two forms are
supported:

``sellmeier_thermo``
    n25(L)^2 = A + B/(1 - C/L^2) [+ D/(1 - E/L^2)] - F*L^2 with L the
    wavelength in um, plus a thermo-optic correction
    dn = (a0 + a1*L + a2*L^2 + a3*L^3)*(T-Tref)*1e-6
       + (b0 + b1*L + b2*L^2 + b3*L^3)*(T-Tref)^2*1e-6.

``per_wavelength_poly``
    The index at exactly two design wavelengths (fundamental and
    harmonic), each a polynomial in (T - Tref):
    n = c0 + c1*(T-Tref) + c2*(T-Tref)^2. Used for artificial test
    dispersions with analytically known behavior.

Both forms declare validity ranges and a linear thermal-expansion
coefficient for the crystal length. Unknown keys are rejected.

See ``data/ktp_dispersion_example.cfg`` for a complete example file
(literature-style placeholder values, intended for demos only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DispersionRangeError, DomainError

_SELLMEIER_KEYS = {
    "sellmeier_a",
    "sellmeier_b",
    "sellmeier_c_um2",
    "sellmeier_d",
    "sellmeier_e_um2",
    "sellmeier_f_per_um2",
    "thermo_a0",
    "thermo_a1",
    "thermo_a2",
    "thermo_a3",
    "thermo_b0",
    "thermo_b1",
    "thermo_b2",
    "thermo_b3",
    "wavelength_min_nm",
    "wavelength_max_nm",
}
_POLY_KEYS = {
    "n_fund_c0",
    "n_fund_c1",
    "n_fund_c2",
    "n_harm_c0",
    "n_harm_c1",
    "n_harm_c2",
}
_COMMON_KEYS = {
    "form",
    "fundamental_nm",
    "harmonic_nm",
    "t_ref_c",
    "temperature_min_c",
    "temperature_max_c",
    "expansion_per_k",
}


@dataclass(frozen=True)
class DispersionModel:
    """Temperature- and wavelength-dependent refractive index."""

    form: str
    coeffs: dict[str, float] = field(default_factory=dict)
    fundamental_m: float = 1550e-9
    harmonic_m: float = 775e-9
    t_ref_c: float = 25.0
    temperature_min_c: float = -50.0
    temperature_max_c: float = 200.0
    expansion_per_k: float = 0.0
    wavelength_min_m: float = 300e-9
    wavelength_max_m: float = 4000e-9

    def __post_init__(self):
        if self.form not in ("sellmeier_thermo", "per_wavelength_poly"):
            raise DomainError(f"unknown dispersion form {self.form!r}")
        if self.temperature_min_c >= self.temperature_max_c:
            raise DomainError("empty temperature validity range")

    def _check_t(self, t_c: float) -> None:
        if not self.temperature_min_c <= t_c <= self.temperature_max_c:
            raise DispersionRangeError(
                f"temperature {t_c} C outside validity "
                f"[{self.temperature_min_c}, {self.temperature_max_c}] C"
            )

    def n(self, wavelength_m: float, t_c: float) -> float:
        """Refractive index; raises outside the declared validity range."""
        self._check_t(t_c)
        if self.form == "per_wavelength_poly":
            if _close(wavelength_m, self.fundamental_m):
                pfx = "n_fund"
            elif _close(wavelength_m, self.harmonic_m):
                pfx = "n_harm"
            else:
                raise DispersionRangeError(
                    f"per-wavelength model only supports "
                    f"{self.fundamental_m * 1e9:.6g} nm and "
                    f"{self.harmonic_m * 1e9:.6g} nm, got {wavelength_m * 1e9:.6g} nm"
                )
            dt = t_c - self.t_ref_c
            c = self.coeffs
            value = c[f"{pfx}_c0"] + c[f"{pfx}_c1"] * dt + c[f"{pfx}_c2"] * dt * dt
        else:
            if not self.wavelength_min_m <= wavelength_m <= self.wavelength_max_m:
                raise DispersionRangeError(
                    f"wavelength {wavelength_m * 1e9:.6g} nm outside validity range"
                )
            lum = wavelength_m * 1e6
            c = self.coeffs
            n2 = c["sellmeier_a"] + c["sellmeier_b"] / (
                1.0 - c["sellmeier_c_um2"] / lum**2
            )
            if c.get("sellmeier_d", 0.0) != 0.0:
                n2 += c["sellmeier_d"] / (1.0 - c["sellmeier_e_um2"] / lum**2)
            n2 -= c["sellmeier_f_per_um2"] * lum**2
            if n2 <= 1.0:
                raise DispersionRangeError("index fell to or below 1; outside validity")
            dt = t_c - self.t_ref_c
            a = (
                c["thermo_a0"]
                + c["thermo_a1"] * lum
                + c["thermo_a2"] * lum**2
                + c["thermo_a3"] * lum**3
            )
            b = (
                c["thermo_b0"]
                + c["thermo_b1"] * lum
                + c["thermo_b2"] * lum**2
                + c["thermo_b3"] * lum**3
            )
            value = math.sqrt(n2) + (a * dt + b * dt * dt) * 1e-6
        if value <= 1.0:
            raise DispersionRangeError(f"index {value:.4f} <= 1; outside validity")
        return value

    def crystal_length(self, l0_m: float, t_c: float) -> float:
        """Thermally expanded crystal length."""
        self._check_t(t_c)
        return l0_m * (1.0 + self.expansion_per_k * (t_c - self.t_ref_c))

    @classmethod
    def constant(
        cls,
        n_fund: float,
        n_harm: float | None = None,
        dn_dt_fund: float = 0.0,
        dn_dt_harm: float = 0.0,
        expansion_per_k: float = 0.0,
        fundamental_m: float = 1550e-9,
        harmonic_m: float = 775e-9,
        t_ref_c: float = 25.0,
    ) -> "DispersionModel":
        """Artificial dispersion: per-wavelength index, linear in T."""
        if n_harm is None:
            n_harm = n_fund
        return cls(
            form="per_wavelength_poly",
            coeffs={
                "n_fund_c0": n_fund,
                "n_fund_c1": dn_dt_fund,
                "n_fund_c2": 0.0,
                "n_harm_c0": n_harm,
                "n_harm_c1": dn_dt_harm,
                "n_harm_c2": 0.0,
            },
            fundamental_m=fundamental_m,
            harmonic_m=harmonic_m,
            t_ref_c=t_ref_c,
            expansion_per_k=expansion_per_k,
        )


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-6 * max(abs(a), abs(b))


def parse_keyvalue_file(path: str | Path) -> dict[str, str]:
    """Read a ``key = value`` file: one pair per line, '#' comments."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), 1
    ):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in out:
            raise DomainError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_dispersion_file(path: str | Path) -> DispersionModel:
    """Load a dispersion coefficient file, rejecting unknown keys."""
    raw = parse_keyvalue_file(path)
    form = raw.pop("form", None)
    if form not in ("sellmeier_thermo", "per_wavelength_poly"):
        raise DomainError(f"{path}: missing or unknown 'form'")
    allowed = _COMMON_KEYS | (
        _SELLMEIER_KEYS if form == "sellmeier_thermo" else _POLY_KEYS
    )
    unknown = set(raw) - allowed
    if unknown:
        raise DomainError(f"{path}: unknown keys {sorted(unknown)}")

    def fget(key: str, default: float | None = None) -> float:
        if key not in raw:
            if default is None:
                raise DomainError(f"{path}: missing key {key!r}")
            return default
        try:
            return float(raw[key])
        except ValueError:
            raise DomainError(f"{path}: key {key!r} is not numeric") from None

    common = dict(
        fundamental_m=fget("fundamental_nm", 1550.0) * 1e-9,
        harmonic_m=fget("harmonic_nm", 775.0) * 1e-9,
        t_ref_c=fget("t_ref_c", 25.0),
        temperature_min_c=fget("temperature_min_c", -50.0),
        temperature_max_c=fget("temperature_max_c", 200.0),
        expansion_per_k=fget("expansion_per_k", 0.0),
    )
    if form == "per_wavelength_poly":
        coeffs = {
            key: fget(key, 0.0 if key.endswith(("c1", "c2")) else None)
            for key in _POLY_KEYS
        }
        return DispersionModel(form=form, coeffs=coeffs, **common)
    coeffs = {}
    for key in _SELLMEIER_KEYS - {"wavelength_min_nm", "wavelength_max_nm"}:
        default = 0.0 if key.startswith("thermo") or key in (
            "sellmeier_d",
            "sellmeier_e_um2",
        ) else None
        coeffs[key] = fget(key, default)
    return DispersionModel(
        form=form,
        coeffs=coeffs,
        wavelength_min_m=fget("wavelength_min_nm", 300.0) * 1e-9,
        wavelength_max_m=fget("wavelength_max_nm", 4000.0) * 1e-9,
        **common,
    )
