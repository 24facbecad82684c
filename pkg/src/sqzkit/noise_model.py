"""Quadrature-noise spectra of a lossy below-threshold parametric cavity.

The squeezed and anti-squeezed noise variances (normalized so that shot
noise = 1) of a degenerate parametric down-conversion cavity pumped below
its oscillation threshold are

    V_x(f) = 1 - eta * 4*sqrt(eps) / [(1 + sqrt(eps))^2 + 4*(2*pi*f/kappa)^2]
    V_y(f) = 1 + eta * 4*sqrt(eps) / [(1 - sqrt(eps))^2 + 4*(2*pi*f/kappa)^2]

with detection efficiency ``eta``, pump parameter ``eps = P_pump/P_thrs``
and cavity decay rate ``kappa`` (FWHM linewidth ``kappa/(2*pi)`` in Hz).
V_y diverges at f = 0 as eps -> 1 (oscillation threshold).

All functions are pure and accept scalar or ndarray frequencies.
dB values are power dB throughout (factor 10).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InfeasibleTargetError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class NoiseModelParams:
    """Parameter triple (eta, kappa, epsilon) of the noise spectra.

    eta      -- total detection efficiency, in [0, 1]
    kappa    -- cavity decay rate in rad/s; the FWHM linewidth in Hz is
                kappa / (2*pi)
    epsilon  -- pump power over threshold power, in [0, 1)
    """

    eta: float
    kappa: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must be in [0, 1], got {self.eta}")
        if not self.kappa > 0.0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not 0.0 <= self.epsilon < 1.0:
            raise DomainError(
                f"epsilon must be in [0, 1) (below threshold), got {self.epsilon}"
            )

    @property
    def fwhm_hz(self) -> float:
        return self.kappa / TWO_PI

    @classmethod
    def from_fwhm(cls, eta: float, fwhm_hz: float, epsilon: float) -> "NoiseModelParams":
        return cls(eta=eta, kappa=TWO_PI * fwhm_hz, epsilon=epsilon)


@dataclass(frozen=True)
class QuadratureVariancePair:
    """Squeezed/anti-squeezed linear variance pair at one sideband frequency."""

    v_x: float
    v_y: float
    frequency_hz: float

    def __post_init__(self):
        if self.v_x <= 0.0 or self.v_y <= 0.0:
            raise DomainError("variances must be positive")
        if self.frequency_hz < 0.0:
            raise DomainError("frequency must be non-negative")


@dataclass(frozen=True)
class DarkNoiseContext:
    """Electronic dark-noise level relative to shot noise.

    clearance_db -- dark noise below shot noise, negative dB (e.g. -24.9);
                    -inf means no dark noise at all.
    subtracted   -- whether a trace already has dark noise removed.
    """

    clearance_db: float
    subtracted: bool = field(default=False)

    def __post_init__(self):
        if not self.clearance_db < 0.0:
            raise DomainError(
                f"dark-noise clearance must be negative dB, got {self.clearance_db}"
            )

    @property
    def linear_level(self) -> float:
        """Dark-noise power as a fraction of shot noise."""
        return 10.0 ** (self.clearance_db / 10.0)


def _check_frequency(f) -> None:
    if np.any(np.asarray(f) < 0.0):
        raise DomainError("sideband frequency must be non-negative")


def squeezed_variance(params: NoiseModelParams, f):
    """Squeezed-quadrature variance V_x(f), normalized to shot noise.

    Result lies in (0, 1]; equals 1 exactly at epsilon = 0 and approaches
    1 far outside the cavity linewidth.
    """
    _check_frequency(f)
    s = math.sqrt(params.epsilon)
    u = TWO_PI * np.asarray(f, dtype=float) / params.kappa
    out = 1.0 - params.eta * 4.0 * s / ((1.0 + s) ** 2 + 4.0 * u**2)
    return float(out) if np.isscalar(f) else out


def antisqueezed_variance(params: NoiseModelParams, f):
    """Anti-squeezed-quadrature variance V_y(f), normalized to shot noise.

    Result is >= 1. Unbounded: diverges at f = 0 as epsilon -> 1.
    """
    _check_frequency(f)
    s = math.sqrt(params.epsilon)
    u = TWO_PI * np.asarray(f, dtype=float) / params.kappa
    out = 1.0 + params.eta * 4.0 * s / ((1.0 - s) ** 2 + 4.0 * u**2)
    return float(out) if np.isscalar(f) else out


def quadrature_variance(params: NoiseModelParams, f, theta):
    """Variance of the quadrature at local-oscillator phase theta (rad).

    theta = 0 reads out the squeezed quadrature, theta = pi/2 the
    anti-squeezed one; in between V = V_x cos^2(theta) + V_y sin^2(theta).
    """
    v_x = squeezed_variance(params, f)
    v_y = antisqueezed_variance(params, f)
    c = np.cos(theta)
    s = np.sin(theta)
    out = v_x * c**2 + v_y * s**2
    if np.isscalar(f) and np.isscalar(theta):
        return float(out)
    return out


def quadrature_pair(params: NoiseModelParams, f: float) -> QuadratureVariancePair:
    """Both quadrature variances at one frequency."""
    return QuadratureVariancePair(
        v_x=squeezed_variance(params, f),
        v_y=antisqueezed_variance(params, f),
        frequency_hz=float(f),
    )


def db_from_linear(v):
    """Power ratio to dB: 10*log10(v). Raises for non-positive input."""
    if np.any(np.asarray(v) <= 0.0):
        raise DomainError("linear power ratio must be positive")
    out = 10.0 * np.log10(v)
    return float(out) if np.isscalar(v) else out


def linear_from_db(x):
    """dB to power ratio: 10**(x/10)."""
    out = 10.0 ** (np.asarray(x, dtype=float) / 10.0)
    return float(out) if np.isscalar(x) else out


def dark_noise_correct(v_meas_db, ctx: DarkNoiseContext):
    """Remove electronic dark noise from a measured level (dB rel. shot).

    Both the signal and the shot-noise reference are corrected:

        v_corr = (10^(v/10) - d) / (1 - d),   d = 10^(clearance/10)

    Raises if the trace is flagged as already subtracted, or if the
    measured power does not exceed the dark-noise power.
    """
    if ctx.subtracted:
        raise DomainError("trace is flagged as already dark-noise subtracted")
    d = ctx.linear_level
    v_lin = linear_from_db(v_meas_db)
    if np.any(np.asarray(v_lin) <= d):
        raise DomainError(
            "measured power does not exceed the dark-noise level; "
            "subtraction would be non-physical"
        )
    out = 10.0 * np.log10((v_lin - d) / (1.0 - d))
    return float(out) if np.isscalar(v_meas_db) else out


def dark_noise_add(v_true_db, ctx: DarkNoiseContext):
    """Inverse of :func:`dark_noise_correct`: re-add dark noise to a level."""
    d = ctx.linear_level
    v_lin = linear_from_db(v_true_db)
    out = 10.0 * np.log10(v_lin * (1.0 - d) + d)
    return float(out) if np.isscalar(v_true_db) else out


def epsilon_from_powers(p_pump_mw: float, p_thrs_mw: float) -> float:
    """Pump parameter epsilon = P_pump / P_thrs (both in mW)."""
    if p_thrs_mw <= 0.0:
        raise DomainError("threshold power must be positive")
    if p_pump_mw < 0.0:
        raise DomainError("pump power must be non-negative")
    if p_pump_mw >= p_thrs_mw:
        raise DomainError(
            "pump power at or above threshold; the below-threshold model "
            "does not apply"
        )
    return p_pump_mw / p_thrs_mw


def required_epsilon(target_sqz_db: float, eta: float, kappa: float, f: float) -> float:
    """Pump parameter needed to reach a target squeezing level (dB, <= 0).

    Inverts the squeezed-variance formula at fixed (eta, kappa, f). With
    v the linear target, d = 1 - v and x = 2*(2*pi*f/kappa) the solution
    s = sqrt(eps) is the smaller root of

        d*s^2 + (2*d - 4*eta)*s + d*(1 + x^2) = 0.

    Raises InfeasibleTargetError when no eps < 1 reaches the target; the
    deepest reachable level at eps -> 1 is 1 - 4*eta/(4 + x^2).
    """
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must be in [0, 1], got {eta}")
    if not kappa > 0.0:
        raise DomainError("kappa must be positive")
    _check_frequency(f)
    if target_sqz_db > 0.0:
        raise DomainError("squeezing target must be <= 0 dB (below shot noise)")
    if target_sqz_db == 0.0:
        return 0.0

    v = linear_from_db(target_sqz_db)
    d = 1.0 - v
    x2 = 4.0 * (TWO_PI * f / kappa) ** 2
    # Depth reachable in the limit eps -> 1 (excluded boundary).
    if d >= eta * 4.0 / (4.0 + x2):
        raise InfeasibleTargetError(
            f"target {target_sqz_db:.3f} dB is below the loss-limited bound "
            f"{db_from_linear(1.0 - eta * 4.0 / (4.0 + x2)):.3f} dB"
        )
    b = 2.0 * d - 4.0 * eta
    c = d * (1.0 + x2)
    disc = b * b - 4.0 * d * c
    # Feasible targets always give a real pair of roots with product (1+x2).
    q = (math.sqrt(disc) - b) / 2.0
    s = c / q
    return s * s
