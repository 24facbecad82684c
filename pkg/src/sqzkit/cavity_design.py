"""Pump build-up, impedance matching and the detection-efficiency budget.

The intra-cavity pump power relative to the externally applied pump power
for a two-mirror standing-wave cavity is

    P_cav / P_pump = (1 - R1) / (1 - sqrt(R1*R2) * V)^2

where R1, R2 are the mirror power reflectivities at the pump wavelength
and V is the one-way intra-cavity transmission. Impedance matching
(maximum build-up) occurs at R1 = R2 * V^2.

Design rule used throughout: the external threshold power scales
inversely with the build-up factor, so a coating change that raises the
build-up lowers the external pump needed for the same squeezing spectrum
proportionally.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import DomainError, InfeasibleTargetError
from .noise_model import required_epsilon


@dataclass(frozen=True)
class BuildupConfig:
    """Mirror reflectivities and one-way transmissions at the pump wavelength.

    The one-way intra-cavity transmission V is stored as its two factors
    (AR coating and crystal bulk) so each tolerance can be tracked
    separately; v = v_ar * v_ktp.
    """

    r1: float
    r2: float
    v_ar: float = 1.0
    v_ktp: float = 1.0

    def __post_init__(self):
        for name in ("r1", "r2", "v_ar", "v_ktp"):
            val = getattr(self, name)
            if not 0.0 < val <= 1.0:
                raise DomainError(f"{name} must be in (0, 1], got {val}")
        if self.r1 >= 1.0:
            raise DomainError("r1 must be < 1 (the input coupler must transmit)")

    @property
    def v(self) -> float:
        return self.v_ar * self.v_ktp


@dataclass(frozen=True)
class EfficiencyBudget:
    """Multiplicative loss chain from the cavity to the detected photocurrent.

    visibility -- homodyne fringe visibility (enters squared)
    eta_pd     -- photodiode quantum efficiency
    eta_pr     -- propagation efficiency
    t1         -- output-coupler power transmission at the squeezed wavelength
    l_rt       -- cavity round-trip loss at the squeezed wavelength
    """

    visibility: float
    eta_pd: float
    eta_pr: float
    t1: float
    l_rt: float

    def __post_init__(self):
        for name in ("visibility", "eta_pd", "eta_pr", "t1"):
            val = getattr(self, name)
            if not 0.0 < val <= 1.0:
                raise DomainError(f"{name} must be in (0, 1], got {val}")
        if self.l_rt < 0.0:
            raise DomainError("l_rt must be non-negative")
        if self.t1 + self.l_rt > 1.0:
            raise DomainError("t1 + l_rt cannot exceed 1")


@dataclass(frozen=True)
class PumpDesign:
    """External pump power, threshold power and the cavity they refer to."""

    p_pump_mw: float
    p_thrs_mw: float
    buildup: BuildupConfig

    def __post_init__(self):
        if self.p_pump_mw <= 0.0 or self.p_thrs_mw <= 0.0:
            raise DomainError("powers must be positive")
        if self.p_pump_mw >= self.p_thrs_mw:
            raise DomainError("below-threshold design requires p_pump < p_thrs")

    @property
    def epsilon(self) -> float:
        return self.p_pump_mw / self.p_thrs_mw

    @property
    def p_cav_mw(self) -> float:
        return self.p_pump_mw * buildup_factor(self.buildup)


def buildup_factor(cfg: BuildupConfig) -> float:
    """Intra-cavity over external pump power, (1-R1)/(1-sqrt(R1 R2) V)^2."""
    g = math.sqrt(cfg.r1 * cfg.r2) * cfg.v
    if g >= 1.0:
        raise DomainError("sqrt(R1*R2)*V >= 1: lossless closed cavity")
    return (1.0 - cfg.r1) / (1.0 - g) ** 2


def buildup_factor_range(
    r1: tuple[float, float],
    r2: tuple[float, float],
    v_ar: tuple[float, float] = (1.0, 1.0),
    v_ktp: tuple[float, float] = (1.0, 1.0),
) -> tuple[float, float]:
    """(min, max) build-up over all corner combinations of the tolerances.

    Each argument is a (low, high) bound for the corresponding
    BuildupConfig field. Simple interval arithmetic: the extremes of the
    build-up are attained at corners because it is monotone in each
    factor over physical ranges.
    """
    values = []
    for a, b, c, d in itertools.product(r1, r2, v_ar, v_ktp):
        values.append(buildup_factor(BuildupConfig(r1=a, r2=b, v_ar=c, v_ktp=d)))
    return min(values), max(values)


def optimal_input_coupler(r2: float, v: float) -> float:
    """Impedance-matched input-coupler reflectivity R1* = R2 * V^2.

    At this reflectivity the build-up factor reaches its maximum
    1 / (1 - R1*). Raises for the degenerate lossless limit R1* = 1.
    """
    if not 0.0 < r2 <= 1.0 or not 0.0 < v <= 1.0:
        raise DomainError("r2 and v must be in (0, 1]")
    r1_star = r2 * v * v
    if r1_star >= 1.0:
        raise DomainError(
            "lossless limit: impedance matching degenerates to R1 = 1"
        )
    return r1_star


def escape_efficiency(t1: float, l_rt: float) -> float:
    """Probability T1/(T1+L) that an intra-cavity photon leaves via the coupler."""
    if t1 <= 0.0:
        raise DomainError("t1 must be positive")
    if l_rt < 0.0:
        raise DomainError("l_rt must be non-negative")
    if t1 + l_rt > 1.0:
        raise DomainError("t1 + l_rt cannot exceed 1")
    return t1 / (t1 + l_rt)


def total_efficiency(budget: EfficiencyBudget) -> float:
    """Total detection efficiency: visibility^2 * eta_pd * eta_pr * eta_esc."""
    return (
        budget.visibility**2
        * budget.eta_pd
        * budget.eta_pr
        * escape_efficiency(budget.t1, budget.l_rt)
    )


def scale_pump_power(p_old_mw: float, b_old: float, b_new: float) -> float:
    """External pump power after a build-up change, keeping P_cav fixed.

    Holding the intra-cavity pump power (and hence the squeezing
    spectrum) constant, the external power scales as b_old / b_new.
    """
    if p_old_mw <= 0.0 or b_old <= 0.0 or b_new <= 0.0:
        raise DomainError("powers and build-up factors must be positive")
    return p_old_mw * b_old / b_new


def design_pump_power(
    target_sqz_db: float,
    f: float,
    budget: EfficiencyBudget,
    cfg_current: BuildupConfig,
    cfg_new: BuildupConfig,
    p_thrs_current_mw: float,
    kappa: float,
) -> float:
    """External pump power (mW) that a redesigned cavity needs for a target.

    Composes the pump parameter required for the target squeezing level
    (at the budget's total efficiency), the current threshold power, and
    the build-up ratio between the current and new coatings:

        P = eps_required * P_thrs_current * B(current) / B(new)
    """
    if p_thrs_current_mw <= 0.0:
        raise DomainError("threshold power must be positive")
    eta = total_efficiency(budget)
    try:
        eps = required_epsilon(target_sqz_db, eta, kappa, f)
    except InfeasibleTargetError:
        raise
    p_current = eps * p_thrs_current_mw
    if p_current == 0.0:
        return 0.0
    return scale_pump_power(
        p_current, buildup_factor(cfg_current), buildup_factor(cfg_new)
    )
