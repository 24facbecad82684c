"""Joint least-squares fit of squeezing spectra.

Fits the closed-form squeezed / anti-squeezed noise model to any number
of measured spectrum pairs simultaneously: the cavity linewidth and the
detection efficiency are shared across all datasets, while each dataset
(one pump power) gets its own pump parameter.

Residuals are formed in dB with equal weights for every retained point
(spectrum-analyzer noise is approximately constant in dB at fixed
RBW/VBW). The minimizer is a Levenberg-Marquardt iteration with
Marquardt diagonal scaling and an analytic Jacobian; bounds are enforced
through smooth reparameterization (log for the linewidth, logistic for
the efficiencies), so the solver itself is unconstrained. Standard
errors come from the normal matrix at the optimum, mapped back to
physical units by the chain rule.

Point ordering everywhere is (dataset index, kind, frequency) with the
squeezed trace before the anti-squeezed one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateProblemError, DomainError
from .noise_model import TWO_PI
from .traces import TraceData, TraceKind

# Default band to drop around a cavity-lock phase-modulation peak.
DEFAULT_EXCLUSION_HZ = (16.5e6, 18.5e6)

_BOUND_MARGIN = 1e-9


@dataclass(frozen=True)
class Dataset:
    """One pump power: a squeezed and/or an anti-squeezed trace."""

    squeezed: TraceData | None = None
    antisqueezed: TraceData | None = None

    def __post_init__(self):
        if self.squeezed is None and self.antisqueezed is None:
            raise DomainError("a dataset needs at least one trace")
        if self.squeezed is not None and self.squeezed.kind is not TraceKind.SQUEEZED:
            raise DomainError("dataset.squeezed must have kind 'squeezed'")
        if (
            self.antisqueezed is not None
            and self.antisqueezed.kind is not TraceKind.ANTISQUEEZED
        ):
            raise DomainError("dataset.antisqueezed must have kind 'antisqueezed'")


@dataclass(frozen=True)
class InitialGuess:
    fwhm_hz: float
    eta: float
    epsilons: tuple[float, ...]

    def __post_init__(self):
        if self.fwhm_hz <= 0.0:
            raise DomainError("fwhm_hz must be positive")
        if not 0.0 < self.eta < 1.0:
            raise DomainError("initial eta must be interior to (0, 1)")
        for e in self.epsilons:
            if not 0.0 <= e < 1.0:
                raise DomainError("initial epsilons must be in [0, 1)")


@dataclass(frozen=True)
class ConvergenceSettings:
    max_iterations: int = 200
    step_tol: float = 1e-10  # accepted-step norm in transformed space
    residual_tol: float = 0.0  # stop early when RMS residual falls below


@dataclass(frozen=True)
class FitProblem:
    datasets: tuple[Dataset, ...]
    exclusions: tuple[tuple[float, float], ...] = ()
    initial_guess: InitialGuess | None = None
    convergence: ConvergenceSettings = field(default_factory=ConvergenceSettings)
    parameterization: str = "fwhm"  # "fwhm" or "kappa"; same estimates either way

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(
            self, "exclusions", tuple(tuple(w) for w in self.exclusions)
        )
        if len(self.datasets) == 0:
            raise DomainError("at least one dataset is required")
        if self.parameterization not in ("fwhm", "kappa"):
            raise DomainError("parameterization must be 'fwhm' or 'kappa'")
        lo = min(
            t.frequencies_hz[0]
            for d in self.datasets
            for t in (d.squeezed, d.antisqueezed)
            if t is not None
        )
        hi = max(
            t.frequencies_hz[-1]
            for d in self.datasets
            for t in (d.squeezed, d.antisqueezed)
            if t is not None
        )
        for w in self.exclusions:
            if w[0] >= w[1]:
                raise DomainError(f"exclusion window {w} has lo >= hi")
            if w[1] < lo or w[0] > hi:
                raise DomainError(
                    f"exclusion window {w} lies outside the data span [{lo}, {hi}]"
                )
        if self.initial_guess is not None and len(
            self.initial_guess.epsilons
        ) != len(self.datasets):
            raise DomainError("initial_guess.epsilons length must match datasets")


@dataclass(frozen=True)
class FitStdErrors:
    fwhm_hz: float
    eta: float
    epsilons: tuple[float, ...]


@dataclass(frozen=True)
class FitResult:
    kappa_hat: float
    eta_hat: float
    epsilons_hat: tuple[float, ...]
    residual_rms_db: float
    std_errors: FitStdErrors
    iterations: int
    converged: bool
    cost_history: tuple[float, ...]

    @property
    def fwhm_hz(self) -> float:
        return self.kappa_hat / TWO_PI


def apply_exclusions(
    trace: TraceData, windows: tuple[tuple[float, float], ...]
) -> TraceData:
    """Copy of a trace with all points inside any [lo, hi] window removed."""
    keep = np.ones(len(trace), dtype=bool)
    for lo, hi in windows:
        if lo >= hi:
            raise DomainError(f"exclusion window ({lo}, {hi}) has lo >= hi")
        keep &= ~(
            (trace.frequencies_hz >= lo) & (trace.frequencies_hz <= hi)
        )
    if not np.any(keep):
        raise DomainError("exclusion windows remove every point of the trace")
    if np.all(keep):
        return trace.replace_points(trace.frequencies_hz.copy(), trace.power_db.copy())
    return trace.replace_points(
        trace.frequencies_hz[keep], trace.power_db[keep]
    )


# ---------------------------------------------------------------------------
# transforms

def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def _logit(p: float) -> float:
    p = min(max(p, _BOUND_MARGIN), 1.0 - _BOUND_MARGIN)
    return math.log(p / (1.0 - p))


class _FitWork:
    """Flattened point arrays and the parameter transform for one problem."""

    def __init__(self, problem: FitProblem):
        self.problem = problem
        self.n_datasets = len(problem.datasets)
        freqs, ys, ds_idx, is_anti = [], [], [], []
        for i, ds in enumerate(problem.datasets):
            for anti, trace in ((0, ds.squeezed), (1, ds.antisqueezed)):
                if trace is None:
                    continue
                kept = apply_exclusions(trace, problem.exclusions)
                freqs.append(kept.frequencies_hz)
                ys.append(kept.power_db)
                ds_idx.append(np.full(len(kept), i, dtype=int))
                is_anti.append(np.full(len(kept), anti, dtype=int))
        self.f = np.concatenate(freqs)
        self.y = np.concatenate(ys)
        self.ds = np.concatenate(ds_idx)
        self.anti = np.concatenate(is_anti).astype(bool)
        self.n_points = len(self.f)
        self.n_params = 2 + self.n_datasets

    # transformed z = [log linewidth, logit eta, logit eps_0, ...]
    def pack(self, guess: InitialGuess) -> np.ndarray:
        z = np.empty(self.n_params)
        scale = guess.fwhm_hz if self.problem.parameterization == "fwhm" else (
            TWO_PI * guess.fwhm_hz
        )
        z[0] = math.log(scale)
        z[1] = _logit(guess.eta)
        for i, e in enumerate(guess.epsilons):
            z[2 + i] = _logit(e)
        return z

    def unpack(self, z: np.ndarray) -> tuple[float, float, np.ndarray]:
        scale = math.exp(z[0])
        kappa = TWO_PI * scale if self.problem.parameterization == "fwhm" else scale
        eta = _sigmoid(z[1])
        eps = _sigmoid(z[2:])
        return kappa, float(eta), np.atleast_1d(eps)

    def model_db(self, z: np.ndarray) -> np.ndarray:
        kappa, eta, eps = self.unpack(z)
        s = np.sqrt(eps)[self.ds]
        u = TWO_PI * self.f / kappa
        d_plus = (1.0 + s) ** 2 + 4.0 * u**2
        d_minus = (1.0 - s) ** 2 + 4.0 * u**2
        v = np.where(
            self.anti,
            1.0 + eta * 4.0 * s / d_minus,
            1.0 - eta * 4.0 * s / d_plus,
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            return 10.0 * np.log10(v)

    def residuals(self, z: np.ndarray) -> np.ndarray:
        return self.model_db(z) - self.y

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """Analytic d(residual)/dz, points x parameters."""
        kappa, eta, eps = self.unpack(z)
        eps_pt = eps[self.ds]
        s = np.sqrt(eps_pt)
        u = TWO_PI * self.f / kappa
        u2 = u**2
        d = np.where(self.anti, (1.0 - s) ** 2, (1.0 + s) ** 2) + 4.0 * u2
        g = 4.0 * s / d
        sign = np.where(self.anti, 1.0, -1.0)
        v = 1.0 + sign * eta * g
        # physical partials of V
        dv_deta = sign * g
        dv_ds = sign * eta * 4.0 * (1.0 - s**2 + 4.0 * u2) / d**2
        dv_dkappa = sign * eta * 32.0 * s * u2 / (d**2 * kappa)
        # chain through the transforms
        pref = (10.0 / math.log(10.0)) / v
        j = np.zeros((self.n_points, self.n_params))
        j[:, 0] = pref * dv_dkappa * kappa  # d kappa / d log(scale) = kappa
        j[:, 1] = pref * dv_deta * eta * (1.0 - eta)
        ds_dz = s * (1.0 - eps_pt) / 2.0  # d sqrt(eps) / d logit(eps)
        cols = 2 + self.ds
        np.add.at(j, (np.arange(self.n_points), cols), pref * dv_ds * ds_dz)
        return j

    def std_errors(self, z: np.ndarray, cost: float) -> FitStdErrors:
        j = self.jacobian(z)
        jtj = j.T @ j
        dof = max(self.n_points - self.n_params, 1)
        sigma2 = cost / dof
        try:
            cov = sigma2 * np.linalg.inv(jtj)
            var = np.clip(np.diag(cov), 0.0, None)
        except np.linalg.LinAlgError:
            var = np.full(self.n_params, np.inf)
        kappa, eta, eps = self.unpack(z)
        se_z = np.sqrt(var)
        se_fwhm = se_z[0] * kappa / TWO_PI  # |d fwhm / d log scale| = fwhm
        se_eta = se_z[1] * eta * (1.0 - eta)
        se_eps = tuple(
            float(se_z[2 + i] * eps[i] * (1.0 - eps[i])) for i in range(len(eps))
        )
        return FitStdErrors(fwhm_hz=float(se_fwhm), eta=float(se_eta), epsilons=se_eps)


# ---------------------------------------------------------------------------
# initial guesses

def _low_level(trace: TraceData, n: int = 3) -> float:
    return float(np.mean(trace.power_db[: min(n, len(trace))]))


def _eps_from_antisqueezed_level(power_db: float) -> float:
    """Invert V_y(0) = 1 + 4 s/(1-s)^2 for s, assuming eta = 1 and f << fwhm."""
    level = 10.0 ** (power_db / 10.0)
    if level <= 1.0 + 1e-6:
        return 0.01
    c = 4.0 / (level - 1.0)
    s = ((2.0 + c) - math.sqrt((2.0 + c) ** 2 - 4.0)) / 2.0
    return float(min(max(s * s, 1e-4), 0.99))


def _eps_from_squeezed_level(power_db: float, eta0: float = 0.9) -> float:
    """Rough s from V_x(0) = 1 - eta0 * 4s/(1+s)^2."""
    depth = 1.0 - 10.0 ** (power_db / 10.0)
    depth = min(max(depth, 1e-4), eta0 * (1.0 - 1e-3))
    # depth*(1+s)^2 = 4*eta0*s
    a, b, c = depth, 2.0 * depth - 4.0 * eta0, depth
    q = (math.sqrt(b * b - 4.0 * a * c) - b) / 2.0
    s = c / q
    return float(min(max(s * s, 1e-4), 0.99))


def _half_excess_frequency(trace: TraceData, excess: np.ndarray) -> float | None:
    e0 = float(np.mean(excess[: min(3, len(excess))]))
    if e0 <= 0.0:
        return None
    below = np.nonzero(excess <= 0.5 * e0)[0]
    if len(below) == 0:
        return None
    return float(trace.frequencies_hz[below[0]])


def _default_initial(work: _FitWork) -> InitialGuess:
    problem = work.problem
    eps0: list[float] = []
    for ds in problem.datasets:
        if ds.antisqueezed is not None:
            eps0.append(_eps_from_antisqueezed_level(_low_level(ds.antisqueezed)))
        else:
            eps0.append(_eps_from_squeezed_level(_low_level(ds.squeezed)))

    # eta from the deepest squeezed low-frequency level, paired with its eps
    eta0 = 0.9
    best = None
    for i, ds in enumerate(problem.datasets):
        if ds.squeezed is None:
            continue
        lvl = _low_level(ds.squeezed)
        if best is None or lvl < best[0]:
            best = (lvl, i)
    if best is not None:
        lvl, i = best
        s = math.sqrt(eps0[i])
        depth = 1.0 - 10.0 ** (lvl / 10.0)
        if depth > 0.0 and s > 0.0:
            eta0 = depth * (1.0 + s) ** 2 / (4.0 * s)
    eta0 = min(max(eta0, 0.5), 0.995)

    # linewidth from the half-excess frequency of the strongest trace
    fwhm0 = None
    order = sorted(range(len(problem.datasets)), key=lambda i: -eps0[i])
    for i in order:
        ds = problem.datasets[i]
        s = math.sqrt(eps0[i])
        if ds.antisqueezed is not None:
            tr = ds.antisqueezed
            excess = 10.0 ** (tr.power_db / 10.0) - 1.0
            f_half = _half_excess_frequency(tr, excess)
            if f_half is not None and f_half > 0.0:
                fwhm0 = 2.0 * f_half / max(1.0 - s, 1e-3)
                break
        elif ds.squeezed is not None:
            tr = ds.squeezed
            excess = 1.0 - 10.0 ** (tr.power_db / 10.0)
            f_half = _half_excess_frequency(tr, excess)
            if f_half is not None and f_half > 0.0:
                fwhm0 = 2.0 * f_half / (1.0 + s)
                break
    if fwhm0 is None:
        fwhm0 = 2.0 * float(np.max(work.f))
    fwhm0 = min(max(fwhm0, 1e3), 1e12)
    return InitialGuess(fwhm_hz=fwhm0, eta=eta0, epsilons=tuple(eps0))


# ---------------------------------------------------------------------------
# public operations

def residuals(problem: FitProblem, params: InitialGuess) -> np.ndarray:
    """Model-minus-data dB residuals at the given parameter point.

    Ordering: (dataset index, squeezed-then-antisqueezed, frequency).
    """
    work = _FitWork(problem)
    if len(params.epsilons) != work.n_datasets:
        raise DomainError("params.epsilons length must match datasets")
    return work.residuals(work.pack(params))


def jacobian_check(problem: FitProblem, params: InitialGuess) -> float:
    """Max relative deviation of the analytic Jacobian from central differences."""
    work = _FitWork(problem)
    z = work.pack(params)
    analytic = work.jacobian(z)
    fd = np.zeros_like(analytic)
    for k in range(work.n_params):
        h = 1e-6 * max(1.0, abs(z[k]))
        zp, zm = z.copy(), z.copy()
        zp[k] += h
        zm[k] -= h
        fd[:, k] = (work.residuals(zp) - work.residuals(zm)) / (2.0 * h)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-7 * np.max(np.abs(analytic)))
    return float(np.max(np.abs(analytic - fd) / scale))


def fit_joint(problem: FitProblem) -> FitResult:
    """Joint Levenberg-Marquardt fit of all datasets in the problem.

    Shared parameters: linewidth and detection efficiency; one pump
    parameter per dataset. Returns best-so-far parameters with
    ``converged=False`` instead of raising when the iteration limit is
    hit; raises DegenerateProblemError when the normal matrix is
    singular.
    """
    work = _FitWork(problem)
    guess = problem.initial_guess or _default_initial(work)
    if len(guess.epsilons) != work.n_datasets:
        raise DomainError("initial_guess.epsilons length must match datasets")
    conv = problem.convergence

    z = work.pack(guess)
    r = work.residuals(z)
    if not np.all(np.isfinite(r)):
        raise DomainError("initial guess gives non-finite residuals")
    cost = float(r @ r)
    history = [cost]
    lam = 1e-3
    converged = False
    iterations = 0

    for iterations in range(1, conv.max_iterations + 1):
        j = work.jacobian(z)
        jtj = j.T @ j
        grad = j.T @ r
        diag = np.diag(jtj).copy()
        if not np.all(np.isfinite(jtj)) or np.any(diag <= 0.0):
            raise DegenerateProblemError(
                "normal matrix is singular (a parameter has no influence)"
            )
        accepted = False
        while lam < 1e14:
            a = jtj + lam * np.diag(diag)
            try:
                step = np.linalg.solve(a, -grad)
            except np.linalg.LinAlgError:
                raise DegenerateProblemError("normal matrix is singular") from None
            z_new = z + step
            r_new = work.residuals(z_new)
            cost_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            if cost_new <= cost:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            break
        lam = max(lam / 4.0, 1e-12)
        step_norm = float(np.linalg.norm(step))
        z, r = z_new, r_new
        reduction = cost - cost_new
        cost = cost_new
        history.append(cost)
        rms = math.sqrt(cost / work.n_points)
        if step_norm < conv.step_tol or rms <= conv.residual_tol:
            converged = True
            break
        if reduction <= 1e-15 * max(cost, 1e-300):
            converged = True
            break

    kappa, eta, eps = work.unpack(z)
    return FitResult(
        kappa_hat=float(kappa),
        eta_hat=float(eta),
        epsilons_hat=tuple(float(e) for e in eps),
        residual_rms_db=math.sqrt(cost / work.n_points),
        std_errors=work.std_errors(z, cost),
        iterations=iterations,
        converged=converged,
        cost_history=tuple(history),
    )
