"""Synthetic spectrum-analyzer measurements of squeezed light.

Each displayed analyzer point is modeled as the mean of
``n_eff = RBW / VBW`` independent exponentially distributed power
samples whose mean is the model variance (plus any dark-noise power),
i.e. a Gamma(n_eff) variate scaled to the model mean. This reproduces
the first two moments of video averaging: relative fluctuation
1/sqrt(n_eff) per point.

Randomness comes from numpy's PCG64 generator; each trace derives an
independent stream from (seed, stream index) so traces can be generated
in any order or in parallel without changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .noise_model import (
    DarkNoiseContext,
    NoiseModelParams,
    antisqueezed_variance,
    squeezed_variance,
)
from .traces import TraceData, TraceKind

RNG_NAME = "pcg64"


@dataclass(frozen=True)
class SweepSpan:
    """Frequency sweep: n_points linearly spaced over [start_hz, stop_hz]."""

    start_hz: float
    stop_hz: float
    n_points: int

    def __post_init__(self):
        if not 0.0 <= self.start_hz < self.stop_hz:
            raise DomainError("need 0 <= start_hz < stop_hz")
        if self.n_points < 2:
            raise DomainError("n_points must be >= 2")

    def grid(self) -> np.ndarray:
        return np.linspace(self.start_hz, self.stop_hz, self.n_points)


@dataclass(frozen=True)
class ZeroSpanWindow:
    """Zero-span acquisition: n_points over duration_s at a fixed frequency."""

    center_hz: float
    duration_s: float
    n_points: int

    def __post_init__(self):
        if self.center_hz < 0.0:
            raise DomainError("center_hz must be non-negative")
        if self.duration_s <= 0.0:
            raise DomainError("duration_s must be positive")
        if self.n_points < 2:
            raise DomainError("n_points must be >= 2")

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.duration_s, self.n_points)


@dataclass(frozen=True)
class AnalyzerSettings:
    """RBW/VBW pair, sample grid and the derived averaging count.

    ``noiseless=True`` switches to the n_eff -> infinity limit (exact
    model curve), used for oracle tests.
    """

    rbw_hz: float
    vbw_hz: float
    span: SweepSpan | ZeroSpanWindow
    noiseless: bool = False

    def __post_init__(self):
        if not self.vbw_hz > 0.0:
            raise DomainError("vbw_hz must be positive")
        if self.rbw_hz < self.vbw_hz:
            raise DomainError("rbw_hz must be >= vbw_hz")

    @property
    def n_eff(self) -> float:
        return self.rbw_hz / self.vbw_hz


@dataclass(frozen=True)
class PhaseScan:
    """Linear local-oscillator phase ramp with optional Gaussian jitter."""

    theta_start_rad: float = 0.0
    rate_rad_per_s: float = 0.0
    sigma_theta_rad: float = 0.0

    def __post_init__(self):
        if self.sigma_theta_rad < 0.0:
            raise DomainError("sigma_theta_rad must be non-negative")

    def theta_at(self, t: np.ndarray) -> np.ndarray:
        return self.theta_start_rad + self.rate_rad_per_s * np.asarray(t, dtype=float)


def _stream(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))


def _sample_points(
    mean_linear: np.ndarray,
    settings: AnalyzerSettings,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw one displayed value per point: Gamma(n_eff)-averaged power."""
    if settings.noiseless:
        return mean_linear
    n = settings.n_eff
    return mean_linear * rng.gamma(shape=n, scale=1.0 / n, size=mean_linear.shape)


def _dark_level(dark: DarkNoiseContext | None) -> float:
    if dark is None:
        return 0.0
    if dark.subtracted:
        raise DomainError("dark context flagged subtracted: nothing to add")
    return dark.linear_level


def synth_spectrum(
    truth: NoiseModelParams,
    kind: TraceKind,
    settings: AnalyzerSettings,
    dark: DarkNoiseContext | None = None,
    seed: int = 0,
    stream_index: int = 0,
    pump_power_mw: float | None = None,
    lo_power_mw: float | None = None,
) -> TraceData:
    """Synthetic swept spectrum for one quadrature.

    The trace is dB relative to ideal shot noise; dark noise (if given)
    is added to the mean power before the analyzer statistics, matching
    a raw (non-subtracted) measurement. Deterministic for a fixed
    (seed, stream_index).
    """
    if not isinstance(settings.span, SweepSpan):
        raise DomainError("synth_spectrum needs a SweepSpan")
    freqs = settings.span.grid()
    if kind is TraceKind.SQUEEZED:
        model = squeezed_variance(truth, freqs)
    elif kind is TraceKind.ANTISQUEEZED:
        model = antisqueezed_variance(truth, freqs)
    elif kind is TraceKind.SHOT:
        model = np.ones_like(freqs)
    elif kind is TraceKind.DARK:
        if dark is None:
            raise DomainError("a dark trace needs a DarkNoiseContext")
        model = np.zeros_like(freqs)
    else:
        raise DomainError(f"unsupported trace kind {kind}")
    d = _dark_level(dark)
    mean_linear = model + d
    if np.any(mean_linear <= 0.0):
        raise DomainError("zero mean power; nothing to sample")
    rng = _stream(seed, stream_index)
    sampled = _sample_points(mean_linear, settings, rng)
    return TraceData(
        frequencies_hz=freqs,
        power_db=10.0 * np.log10(sampled),
        kind=kind,
        rbw_hz=settings.rbw_hz,
        vbw_hz=settings.vbw_hz,
        lo_power_mw=lo_power_mw,
        pump_power_mw=pump_power_mw,
        dark_subtracted=dark is None,
        extra={"rng": RNG_NAME, "seed": str(seed), "stream": str(stream_index)},
    )


def phase_averaged_variance(
    truth: NoiseModelParams,
    f: float,
    theta_mean: float,
    sigma_theta: float,
) -> float:
    """Quadrature variance averaged over Gaussian LO-phase jitter.

    For theta ~ Normal(theta_mean, sigma^2),

        E[V(theta)] = (v_x + v_y)/2 + (v_x - v_y)/2 * exp(-2 sigma^2) cos(2 theta_mean)

    which reduces to the plain quadrature variance at sigma = 0 and to
    the quadrature mean for large jitter.
    """
    if sigma_theta < 0.0:
        raise DomainError("sigma_theta must be non-negative")
    v_x = squeezed_variance(truth, f)
    v_y = antisqueezed_variance(truth, f)
    damp = math.exp(-2.0 * sigma_theta**2) * math.cos(2.0 * theta_mean)
    return 0.5 * (v_x + v_y) + 0.5 * (v_x - v_y) * damp


def zero_span_phase_scan(
    truth: NoiseModelParams,
    f: float,
    scan: PhaseScan,
    settings: AnalyzerSettings,
    dark: DarkNoiseContext | None = None,
    seed: int = 0,
    stream_index: int = 0,
) -> TraceData:
    """Zero-span trace while the LO phase ramps (with optional jitter).

    Returns a time-indexed TraceData (axis = "time_s"); for a ramp
    covering at least pi the min/max envelope approaches the squeezed
    and anti-squeezed levels.
    """
    if not isinstance(settings.span, ZeroSpanWindow):
        raise DomainError("zero_span_phase_scan needs a ZeroSpanWindow")
    if abs(settings.span.center_hz - f) > 1e-9 * max(1.0, abs(f)):
        raise DomainError("span center must match the requested frequency")
    times = settings.span.grid()
    thetas = scan.theta_at(times)
    v_x = squeezed_variance(truth, f)
    v_y = antisqueezed_variance(truth, f)
    damp = math.exp(-2.0 * scan.sigma_theta_rad**2)
    mean_linear = 0.5 * (v_x + v_y) + 0.5 * (v_x - v_y) * damp * np.cos(2.0 * thetas)
    mean_linear = mean_linear + _dark_level(dark)
    rng = _stream(seed, stream_index)
    sampled = _sample_points(mean_linear, settings, rng)
    if truth.epsilon == 0.0:
        kind = TraceKind.SHOT
    elif scan.rate_rad_per_s == 0.0 and math.cos(scan.theta_start_rad) ** 2 >= 0.5:
        kind = TraceKind.SQUEEZED
    else:
        kind = TraceKind.ANTISQUEEZED
    return TraceData(
        frequencies_hz=times,
        power_db=10.0 * np.log10(sampled),
        kind=kind,
        rbw_hz=settings.rbw_hz,
        vbw_hz=settings.vbw_hz,
        dark_subtracted=dark is None,
        axis="time_s",
        extra={
            "rng": RNG_NAME,
            "seed": str(seed),
            "stream": str(stream_index),
            "center_hz": repr(float(f)),
        },
    )
