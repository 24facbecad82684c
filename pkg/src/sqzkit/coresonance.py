"""Double resonance and quasi-phase-matching of a half-monolithic cavity.

The cavity is plano-concave: a curved coupling mirror, an air gap, and a
crystal whose flat back face carries the HR coating. The Gaussian
eigenmode has its waist on that flat face; with the crystal treated as a
slab of index n the effective one-way diffraction length is

    L_eff = l_air + l_crystal / n

and the one-way Gouy phase is arctan(L_eff / z_R) with
z_R = sqrt(L_eff * (R - L_eff)). Because n differs between the
fundamental and the harmonic, so do L_eff and the Gouy phase: moving the
coupler (coarse) and tuning the crystal temperature (fine) can therefore
bring both fields onto resonance simultaneously while keeping the
quasi-phase-matching acceptable.

Round-trip phase convention: 0 (mod 2pi) means resonance, and reported
detunings are wrapped into (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import DispersionModel
from .errors import DomainError, InstabilityError, ScanResolutionError

TWO_PI = 2.0 * math.pi


def wrap_phase(phi):
    """Wrap an angle (or array) into (-pi, pi]."""
    out = np.remainder(phi, TWO_PI)
    out = np.where(out > math.pi, out - TWO_PI, out)
    return float(out) if np.isscalar(phi) else out


@dataclass(frozen=True)
class CavityGeometry:
    """Half-monolithic plano-concave cavity dimensions and coating phases.

    ``mirror_radius_m`` may be ``inf`` for the plane-parallel limit.
    Coating phase offsets are fixed per-round-trip additions at the
    fundamental and harmonic design wavelengths.
    """

    l_air_m: float
    l_crystal_m: float
    mirror_radius_m: float
    coating_phase_f_rad: float = 0.0
    coating_phase_h_rad: float = 0.0

    def __post_init__(self):
        if self.l_air_m < 0.0:
            raise DomainError("l_air_m must be non-negative")
        if self.l_crystal_m <= 0.0:
            raise DomainError("l_crystal_m must be positive")
        if self.mirror_radius_m <= 0.0:
            raise DomainError("mirror_radius_m must be positive (or inf)")


@dataclass(frozen=True)
class OperatingPoint:
    """A double-resonance candidate with its re-verified detunings."""

    l_air_m: float
    temperature_c: float
    detune_f_rad: float
    detune_h_rad: float
    qpm_mismatch_rad: float
    qpm_efficiency: float
    score: float


@dataclass(frozen=True)
class ScanGrid:
    l_air_min_m: float
    l_air_max_m: float
    l_air_step_m: float
    t_min_c: float
    t_max_c: float
    t_step_c: float

    def __post_init__(self):
        if not 0.0 <= self.l_air_min_m < self.l_air_max_m:
            raise DomainError("need 0 <= l_air_min < l_air_max")
        if self.l_air_step_m <= 0.0 or self.t_step_c <= 0.0:
            raise DomainError("steps must be positive")
        if self.t_min_c > self.t_max_c:
            raise DomainError("need t_min <= t_max")

    def temperatures(self) -> np.ndarray:
        n = int(math.floor((self.t_max_c - self.t_min_c) / self.t_step_c + 1e-9)) + 1
        return self.t_min_c + self.t_step_c * np.arange(n)


@dataclass(frozen=True)
class ScanTolerances:
    detune_rad: float = 1e-6
    min_qpm_efficiency: float = 0.0

    def __post_init__(self):
        if self.detune_rad <= 0.0:
            raise DomainError("detune tolerance must be positive")
        if not 0.0 <= self.min_qpm_efficiency <= 1.0:
            raise DomainError("min_qpm_efficiency must be in [0, 1]")


@dataclass(frozen=True)
class ScanResult:
    points: tuple[OperatingPoint, ...]
    best_near_miss: OperatingPoint | None
    n_branches: int


def _coating_phase(geom: CavityGeometry, disp: DispersionModel, wavelength_m: float) -> float:
    if abs(wavelength_m - disp.fundamental_m) <= 1e-6 * disp.fundamental_m:
        return geom.coating_phase_f_rad
    if abs(wavelength_m - disp.harmonic_m) <= 1e-6 * disp.harmonic_m:
        return geom.coating_phase_h_rad
    raise DomainError(
        "coating phases are defined only at the fundamental and harmonic "
        "design wavelengths"
    )


def _gouy(l_air, l_crystal: float, n: float, radius: float):
    """One-way Gouy phase (array-capable in l_air)."""
    l_eff = np.asarray(l_air, dtype=float) + l_crystal / n
    if math.isinf(radius):
        out = np.zeros_like(l_eff)
        return float(out) if np.isscalar(l_air) else out
    if np.any(l_eff <= 0.0) or np.any(l_eff >= radius):
        raise InstabilityError(
            "no Gaussian eigenmode: need 0 < l_air + l_crystal/n < mirror radius"
        )
    z_r = np.sqrt(l_eff * (radius - l_eff))
    out = np.arctan(l_eff / z_r)
    return float(out) if np.isscalar(l_air) else out


def gouy_phase_one_way(
    geom: CavityGeometry,
    disp: DispersionModel,
    wavelength_m: float,
    t_c: float,
    l_air_m: float | None = None,
) -> float:
    """Accumulated one-way Gouy phase of the cavity eigenmode.

    Equals arccos(sqrt(1 - L_eff/R)); 0 in the plane-mirror limit and
    pi/4 at L_eff = R/2. Raises InstabilityError when the eigenmode does
    not exist (L_eff >= R).
    """
    l_air = geom.l_air_m if l_air_m is None else l_air_m
    n = disp.n(wavelength_m, t_c)
    lc = disp.crystal_length(geom.l_crystal_m, t_c)
    return _gouy(l_air, lc, n, geom.mirror_radius_m)


def _raw_phase(
    geom: CavityGeometry,
    disp: DispersionModel,
    wavelength_m: float,
    t_c: float,
    l_air,
):
    """Unwrapped round-trip phase (array-capable in l_air)."""
    n = disp.n(wavelength_m, t_c)
    lc = disp.crystal_length(geom.l_crystal_m, t_c)
    cp = _coating_phase(geom, disp, wavelength_m)
    gouy = _gouy(l_air, lc, n, geom.mirror_radius_m)
    return (4.0 * math.pi / wavelength_m) * (
        np.asarray(l_air, dtype=float) + n * lc
    ) - 2.0 * gouy + cp


def round_trip_phase(
    geom: CavityGeometry,
    disp: DispersionModel,
    wavelength_m: float,
    t_c: float,
    l_air_m: float | None = None,
) -> float:
    """Round-trip phase deviation from resonance, wrapped into (-pi, pi].

    (4*pi/lambda)*(l_air + n*l_crystal) - 2*gouy + coating_phase, mod 2*pi,
    with the crystal length thermally expanded.
    """
    l_air = geom.l_air_m if l_air_m is None else l_air_m
    return wrap_phase(float(_raw_phase(geom, disp, wavelength_m, t_c, l_air)))


def qpm_mismatch(
    disp: DispersionModel,
    poling_period_m: float,
    t_c: float,
    l_crystal_m: float,
) -> float:
    """Half the accumulated quasi-phase-matching phase, dk_Q * L_c(T) / 2.

    dk_Q = 2*pi * [n(harmonic)/lambda_h - 2*n(fundamental)/lambda_f - 1/poling_period]
    for the degenerate pair declared by the dispersion model.
    """
    if poling_period_m <= 0.0:
        raise DomainError("poling period must be positive")
    n_f = disp.n(disp.fundamental_m, t_c)
    n_h = disp.n(disp.harmonic_m, t_c)
    dk = TWO_PI * (
        n_h / disp.harmonic_m - 2.0 * n_f / disp.fundamental_m - 1.0 / poling_period_m
    )
    return dk * disp.crystal_length(l_crystal_m, t_c) / 2.0


def qpm_efficiency(mismatch_rad: float) -> float:
    """Normalized conversion-efficiency weight, sinc^2 of the mismatch."""
    return float(np.sinc(mismatch_rad / math.pi) ** 2)


def matched_poling_period(disp: DispersionModel, t_c: float) -> float:
    """Poling period giving exact quasi-phase-matching at temperature t_c."""
    n_f = disp.n(disp.fundamental_m, t_c)
    n_h = disp.n(disp.harmonic_m, t_c)
    inv = n_h / disp.harmonic_m - 2.0 * n_f / disp.fundamental_m
    if inv <= 0.0:
        raise DomainError("no positive poling period matches this dispersion")
    return 1.0 / inv


# ---------------------------------------------------------------------------
# scan machinery

def _phase_rate(geom, disp, wavelength_m, l_air, t_c) -> float:
    """d(raw phase)/d(l_air); the Gouy term contributes -1/z_R."""
    n = disp.n(wavelength_m, t_c)
    lc = disp.crystal_length(geom.l_crystal_m, t_c)
    base = 4.0 * math.pi / wavelength_m
    if math.isinf(geom.mirror_radius_m):
        return base
    l_eff = np.asarray(l_air, dtype=float) + lc / n
    z_r = np.sqrt(l_eff * (geom.mirror_radius_m - l_eff))
    return base - 1.0 / z_r


def _branch_roots(geom, disp, wavelength_m, t_c, l_lo, l_hi):
    """All l_air in [l_lo, l_hi] with raw fundamental phase = 2*pi*m.

    Newton iteration on the (monotone) unwrapped phase, vectorized over
    the branch index m. Returns (l_air array, m array).
    """
    phi_lo = float(_raw_phase(geom, disp, wavelength_m, t_c, l_lo))
    phi_hi = float(_raw_phase(geom, disp, wavelength_m, t_c, l_hi))
    m_lo = int(math.ceil(phi_lo / TWO_PI - 1e-12))
    m_hi = int(math.floor(phi_hi / TWO_PI + 1e-12))
    if m_hi < m_lo:
        return np.empty(0), np.empty(0, dtype=int)
    m = np.arange(m_lo, m_hi + 1)
    target = TWO_PI * m
    # linear seed, then Newton to machine precision
    rate0 = float(np.mean(_phase_rate(geom, disp, wavelength_m, (l_lo + l_hi) / 2.0, t_c)))
    l = l_lo + (target - phi_lo) / rate0
    l = np.clip(l, l_lo, l_hi)
    for _ in range(60):
        res = _raw_phase(geom, disp, wavelength_m, t_c, l) - target
        if np.max(np.abs(res)) < 1e-10:
            break
        l = l - res / _phase_rate(geom, disp, wavelength_m, l, t_c)
        l = np.clip(l, l_lo - 1e-9, l_hi + 1e-9)
    keep = (l >= l_lo - 1e-15) & (l <= l_hi + 1e-15)
    res = _raw_phase(geom, disp, wavelength_m, t_c, l) - target
    keep &= np.abs(res) < 1e-9
    return l[keep], m[keep]


def _check_resolution(geom, disp, grid: ScanGrid) -> None:
    """Reject scans whose steps change the round-trip phase by >= pi/4."""
    lam_h = disp.harmonic_m
    if grid.l_air_step_m * 4.0 * math.pi / lam_h >= math.pi / 4.0:
        raise ScanResolutionError(
            f"l_air step {grid.l_air_step_m:.3g} m too coarse; need < "
            f"{lam_h / 16.0:.3g} m (harmonic quarter-pi per step)"
        )
    temps = grid.temperatures()
    if len(temps) < 2:
        return
    l_mid = (grid.l_air_min_m + grid.l_air_max_m) / 2.0
    for lam in (disp.fundamental_m, disp.harmonic_m):
        phases = np.array(
            [float(_raw_phase(geom, disp, lam, t, l_mid)) for t in temps]
        )
        if np.max(np.abs(np.diff(phases))) >= math.pi / 4.0:
            raise ScanResolutionError(
                f"temperature step {grid.t_step_c:.3g} C too coarse: phase "
                f"changes by >= pi/4 between grid temperatures"
            )


def find_operating_points(
    geom: CavityGeometry,
    disp: DispersionModel,
    poling_period_m: float,
    grid: ScanGrid,
    tol: ScanTolerances = ScanTolerances(),
) -> ScanResult:
    """Scan (air gap, temperature) for simultaneous double resonance.

    For every temperature on the grid the fundamental resonances inside
    the air-gap range are located exactly (Newton on the monotone
    round-trip phase); the harmonic detuning is followed along each
    resonance branch, and bisection in temperature refines every sign
    change to a double-resonance point. Plateau regions that already
    satisfy the tolerance contribute one representative point per
    branch per contiguous temperature run.

    Points failing ``tol.min_qpm_efficiency`` are dropped. Each returned
    point is re-verified by direct round_trip_phase evaluation. Ranking
    score: qpm_efficiency - (|detune_f| + |detune_h|) / (2 * tol.detune_rad).
    The point list is sorted by descending score (ties: l_air, then T).
    When nothing qualifies, ``best_near_miss`` still reports the closest
    approach to double resonance seen during the scan.
    """
    _check_resolution(geom, disp, grid)
    lam_f, lam_h = disp.fundamental_m, disp.harmonic_m
    temps = grid.temperatures()

    # branch index m -> list of (T, l_air, harmonic detune)
    branches: dict[int, list[tuple[float, float, float]]] = {}
    for t_c in temps:
        ls, ms = _branch_roots(geom, disp, lam_f, t_c, grid.l_air_min_m, grid.l_air_max_m)
        if len(ls) == 0:
            continue
        detune_h = wrap_phase(_raw_phase(geom, disp, lam_h, t_c, ls))
        for l, m, dh in zip(ls, ms, np.atleast_1d(detune_h)):
            branches.setdefault(int(m), []).append((float(t_c), float(l), float(dh)))

    def root_l(t_c: float, m: int) -> float | None:
        ls, ms = _branch_roots(geom, disp, lam_f, t_c, grid.l_air_min_m, grid.l_air_max_m)
        hits = ls[ms == m]
        return float(hits[0]) if len(hits) else None

    def detune_h_at(t_c: float, m: int) -> tuple[float, float] | None:
        l = root_l(t_c, m)
        if l is None:
            return None
        return l, wrap_phase(float(_raw_phase(geom, disp, lam_h, t_c, l)))

    candidates: list[tuple[float, float]] = []  # (l_air, T)
    near_miss: tuple[float, float, float] | None = None  # |dh|, l, T

    for m, rows in sorted(branches.items()):
        rows.sort()
        ts = np.array([r[0] for r in rows])
        ls = np.array([r[1] for r in rows])
        dhs = np.array([r[2] for r in rows])
        for i in range(len(rows)):
            if near_miss is None or abs(dhs[i]) < near_miss[0]:
                near_miss = (abs(dhs[i]), ls[i], ts[i])
        ok = np.abs(dhs) < tol.detune_rad
        # one representative per contiguous within-tolerance run
        i = 0
        while i < len(rows):
            if ok[i]:
                j = i
                while j + 1 < len(rows) and ok[j + 1] and ts[j + 1] - ts[j] <= 1.5 * grid.t_step_c:
                    j += 1
                k = i + int(np.argmin(np.abs(dhs[i : j + 1])))
                candidates.append((float(ls[k]), float(ts[k])))
                i = j + 1
            else:
                i += 1
        # bisection on every sign change not already inside a tolerance run
        for i in range(len(rows) - 1):
            if ok[i] or ok[i + 1]:
                continue
            f1, f2 = dhs[i], dhs[i + 1]
            if f1 == 0.0 or f1 * f2 > 0.0 or abs(f2 - f1) >= math.pi:
                continue
            t1, t2 = float(ts[i]), float(ts[i + 1])
            lo, hi, flo = t1, t2, f1
            found = None
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                got = detune_h_at(mid, m)
                if got is None:
                    break
                l_mid, fmid = got
                if abs(fmid) < min(tol.detune_rad, 1e-9) or hi - lo < 1e-12:
                    found = (l_mid, mid)
                    break
                if flo * fmid <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fmid
            if found is not None:
                candidates.append(found)

    # deterministic assembly order, then score ranking
    candidates.sort()
    points: list[OperatingPoint] = []
    for l, t_c in candidates:
        df = round_trip_phase(geom, disp, lam_f, t_c, l_air_m=l)
        dh = round_trip_phase(geom, disp, lam_h, t_c, l_air_m=l)
        if abs(df) >= tol.detune_rad or abs(dh) >= tol.detune_rad:
            continue  # re-verification failed; stale grid value
        mm = qpm_mismatch(disp, poling_period_m, t_c, geom.l_crystal_m)
        eff = qpm_efficiency(mm)
        if eff < tol.min_qpm_efficiency:
            continue
        score = eff - (abs(df) + abs(dh)) / (2.0 * tol.detune_rad)
        points.append(
            OperatingPoint(
                l_air_m=l,
                temperature_c=t_c,
                detune_f_rad=df,
                detune_h_rad=dh,
                qpm_mismatch_rad=mm,
                qpm_efficiency=eff,
                score=score,
            )
        )

    points.sort(key=lambda p: (-p.score, p.l_air_m, p.temperature_c))
    miss = None
    if near_miss is not None:
        _, l, t_c = near_miss
        df = round_trip_phase(geom, disp, lam_f, t_c, l_air_m=l)
        dh = round_trip_phase(geom, disp, lam_h, t_c, l_air_m=l)
        mm = qpm_mismatch(disp, poling_period_m, t_c, geom.l_crystal_m)
        eff = qpm_efficiency(mm)
        miss = OperatingPoint(
            l_air_m=l,
            temperature_c=t_c,
            detune_f_rad=df,
            detune_h_rad=dh,
            qpm_mismatch_rad=mm,
            qpm_efficiency=eff,
            score=eff - (abs(df) + abs(dh)) / (2.0 * tol.detune_rad),
        )
    return ScanResult(
        points=tuple(points), best_near_miss=miss, n_branches=len(branches)
    )
