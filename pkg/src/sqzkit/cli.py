"""Command-line frontend.

Subcommands: spectrum, fit, buildup, budget, design, simulate,
coresonance, plot. Exit codes: 0 success, 1 validation/usage error,
2 numerical failure (non-convergence or infeasible target).

All outputs are deterministic for fixed flags and seed: no timestamps,
floats written with repr (traces) or fixed precision (reports: dB with
2 decimals, other quantities at 3 significant figures).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import cavity_design as cav
from . import coresonance as cores
from . import measure_sim as sim
from . import noise_model as nm
from . import svgplot
from .dispersion import load_dispersion_file, parse_keyvalue_file
from .errors import (
    DegenerateProblemError,
    DomainError,
    InfeasibleTargetError,
    TraceFormatError,
)
from .trace_fit import (
    DEFAULT_EXCLUSION_HZ,
    Dataset,
    FitProblem,
    fit_joint,
)
from .traces import TraceData, TraceKind, parse_trace_csv, write_trace_csv


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 (not argparse's 2) on bad usage
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _sig3(x: float) -> str:
    return f"{x:.3g}"


def _db2(x: float) -> str:
    return f"{x:.2f}"


# ---------------------------------------------------------------------------
# subcommands

def _cmd_spectrum(args) -> int:
    params = nm.NoiseModelParams.from_fwhm(args.eta, args.fwhm_mhz * 1e6, args.epsilon)
    freqs = np.linspace(args.f_start_hz, args.f_stop_hz, args.n_points)
    sq = nm.squeezed_variance(params, freqs)
    asq = nm.antisqueezed_variance(params, freqs)
    sq_db = 10.0 * np.log10(sq)
    asq_db = 10.0 * np.log10(asq)
    if args.out:
        lines = [
            f"# eta={params.eta!r}",
            f"# fwhm_hz={params.fwhm_hz!r}",
            f"# epsilon={params.epsilon!r}",
            "frequency_hz,squeezed_db,antisqueezed_db",
        ]
        for f, a, b in zip(freqs, sq_db, asq_db):
            lines.append(f"{f!r},{a!r},{b!r}")
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print("frequency_mhz  squeezed_db  antisqueezed_db")
        for f, a, b in zip(freqs, sq_db, asq_db):
            print(f"{f / 1e6:12.4f}  {_db2(a):>11}  {_db2(b):>15}")
    return 0


def _cmd_buildup(args) -> int:
    cfg = cav.BuildupConfig(r1=args.r1, r2=args.r2, v_ar=args.v_ar, v_ktp=args.v_ktp)
    b = cav.buildup_factor(cfg)
    print(f"build-up factor P_cav/P_pump: {_sig3(b)}")
    r1_star = cav.optimal_input_coupler(cfg.r2, cfg.v)
    cfg_star = cav.BuildupConfig(r1=r1_star, r2=cfg.r2, v_ar=cfg.v_ar, v_ktp=cfg.v_ktp)
    b_star = cav.buildup_factor(cfg_star)
    print(f"impedance-matched coupler R1*: {r1_star:.6f}")
    print(f"matched build-up factor: {_sig3(b_star)}")
    print(f"pump-power reduction at matching: {_sig3(b_star / b)}x")
    return 0


def _cmd_budget(args) -> int:
    budget = cav.EfficiencyBudget(
        visibility=args.visibility,
        eta_pd=args.eta_pd,
        eta_pr=args.eta_pr,
        t1=args.t1,
        l_rt=args.l_rt,
    )
    esc = cav.escape_efficiency(budget.t1, budget.l_rt)
    total = cav.total_efficiency(budget)
    print(f"mode overlap (visibility^2): {_sig3(budget.visibility ** 2)}")
    print(f"photodiode efficiency: {_sig3(budget.eta_pd)}")
    print(f"propagation efficiency: {_sig3(budget.eta_pr)}")
    print(f"escape efficiency T1/(T1+L): {_sig3(esc)}")
    print(f"total detection efficiency: {_sig3(total)}")
    print(
        f"loss-limited squeezing bound: {_db2(10.0 * np.log10(1.0 - total))} dB"
    )
    return 0


def _budget_from_args(args) -> cav.EfficiencyBudget:
    return cav.EfficiencyBudget(
        visibility=args.visibility,
        eta_pd=args.eta_pd,
        eta_pr=args.eta_pr,
        t1=args.t1,
        l_rt=args.l_rt,
    )


def _cmd_design(args) -> int:
    cfg_cur = cav.BuildupConfig(args.r1, args.r2, args.v_ar, args.v_ktp)
    cfg_new = cav.BuildupConfig(
        args.new_r1 if args.new_r1 is not None else args.r1,
        args.new_r2 if args.new_r2 is not None else args.r2,
        args.new_v_ar if args.new_v_ar is not None else args.v_ar,
        args.new_v_ktp if args.new_v_ktp is not None else args.v_ktp,
    )
    kappa = 2.0 * np.pi * args.fwhm_mhz * 1e6
    if args.eta is not None:
        eta = args.eta
    else:
        if None in (args.visibility, args.eta_pd, args.eta_pr, args.t1, args.l_rt):
            raise DomainError("give either --eta or the full efficiency budget")
        eta = cav.total_efficiency(_budget_from_args(args))
    eps = nm.required_epsilon(args.target_db, eta, kappa, args.f_hz)
    p_current = eps * args.p_thrs_mw
    b_cur = cav.buildup_factor(cfg_cur)
    b_new = cav.buildup_factor(cfg_new)
    p_new = p_current * b_cur / b_new if p_current > 0.0 else 0.0
    print(f"detection efficiency used: {_sig3(eta)}")
    print(f"required pump parameter: {_sig3(eps)}")
    print(f"pump power with current coatings: {_sig3(p_current)} mW")
    print(f"build-up factors: current {_sig3(b_cur)}, new {_sig3(b_new)}")
    print(f"pump power with new coatings: {_sig3(p_new)} mW")
    return 0


def _parse_window(text: str) -> tuple[float, float]:
    try:
        lo, _, hi = text.partition(":")
        return float(lo), float(hi)
    except ValueError:
        raise DomainError(f"bad exclusion window {text!r}; expected LO:HI") from None


def _pair_key(trace: TraceData, path: str, counter: int) -> tuple:
    if "dataset" in trace.extra:
        return ("dataset", trace.extra["dataset"])
    if trace.pump_power_mw is not None:
        return ("pump", repr(trace.pump_power_mw))
    return ("order", counter)


def _group_datasets(paths: list[str]) -> list[Dataset]:
    """Pair squeezed/anti-squeezed traces by dataset tag or pump power."""
    groups: dict[tuple, dict[str, TraceData]] = {}
    order: list[tuple] = []
    counters = {TraceKind.SQUEEZED: 0, TraceKind.ANTISQUEEZED: 0}
    for path in paths:
        trace = parse_trace_csv(path)
        if trace.kind not in (TraceKind.SQUEEZED, TraceKind.ANTISQUEEZED):
            raise DomainError(f"{path}: only squeezed/antisqueezed traces can be fit")
        key = _pair_key(trace, path, counters[trace.kind])
        counters[trace.kind] += 1
        if key not in groups:
            groups[key] = {}
            order.append(key)
        slot = "sq" if trace.kind is TraceKind.SQUEEZED else "asq"
        if slot in groups[key]:
            raise DomainError(f"{path}: duplicate {slot} trace for dataset {key}")
        groups[key][slot] = trace
    return [
        Dataset(squeezed=groups[k].get("sq"), antisqueezed=groups[k].get("asq"))
        for k in order
    ]


def _cmd_fit(args) -> int:
    datasets = _group_datasets(args.traces)
    if args.no_exclusion:
        windows: tuple = ()
    elif args.exclude:
        windows = tuple(_parse_window(w) for w in args.exclude)
    else:
        windows = (DEFAULT_EXCLUSION_HZ,)
    problem = FitProblem(datasets=tuple(datasets), exclusions=windows)
    result = fit_joint(problem)
    se = result.std_errors
    print(f"datasets: {len(datasets)}   converged: {result.converged}   "
          f"iterations: {result.iterations}")
    print(f"cavity FWHM: {result.fwhm_hz / 1e6:.4g} MHz "
          f"(+- {se.fwhm_hz / 1e6:.2g} MHz)")
    print(f"detection efficiency eta: {result.eta_hat:.4f} (+- {se.eta:.2g})")
    for i, (e, s) in enumerate(zip(result.epsilons_hat, se.epsilons)):
        print(f"pump parameter eps[{i}]: {e:.4f} (+- {s:.2g})")
    print(f"residual RMS: {_db2(result.residual_rms_db)} dB")
    if args.residuals_out:
        from .trace_fit import InitialGuess, residuals

        r = residuals(
            problem,
            InitialGuess(
                fwhm_hz=result.fwhm_hz,
                eta=result.eta_hat,
                epsilons=result.epsilons_hat,
            ),
        )
        lines = ["index,residual_db"]
        for i, v in enumerate(r):
            lines.append(f"{i},{v!r}")
        Path(args.residuals_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.residuals_out}")
    return 0 if result.converged else 2


def _cmd_simulate(args) -> int:
    params_list = [
        nm.NoiseModelParams.from_fwhm(args.eta, args.fwhm_mhz * 1e6, e)
        for e in args.epsilon
    ]
    dark = (
        nm.DarkNoiseContext(clearance_db=args.dark_clearance_db)
        if args.dark_clearance_db is not None
        else None
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if args.zero_span:
        span = sim.ZeroSpanWindow(
            center_hz=args.f_hz, duration_s=args.duration_s, n_points=args.n_points
        )
        settings = sim.AnalyzerSettings(
            rbw_hz=args.rbw_hz, vbw_hz=args.vbw_hz, span=span,
            noiseless=args.noiseless,
        )
        scan = sim.PhaseScan(
            theta_start_rad=args.theta_start_rad,
            rate_rad_per_s=args.theta_rate_rad_s,
            sigma_theta_rad=args.sigma_theta_rad,
        )
        for i, params in enumerate(params_list):
            trace = sim.zero_span_phase_scan(
                params, args.f_hz, scan, settings, dark=dark, seed=args.seed,
                stream_index=i,
            )
            path = out_dir / f"{args.prefix}_zerospan_{i}.csv"
            write_trace_csv(trace, path)
            written.append(path)
    else:
        span = sim.SweepSpan(
            start_hz=args.f_start_hz, stop_hz=args.f_stop_hz, n_points=args.n_points
        )
        settings = sim.AnalyzerSettings(
            rbw_hz=args.rbw_hz, vbw_hz=args.vbw_hz, span=span,
            noiseless=args.noiseless,
        )
        for i, params in enumerate(params_list):
            pump = (
                params.epsilon * args.p_thrs_mw if args.p_thrs_mw is not None else None
            )
            for j, kind in enumerate((TraceKind.SQUEEZED, TraceKind.ANTISQUEEZED)):
                trace = sim.synth_spectrum(
                    params, kind, settings, dark=dark, seed=args.seed,
                    stream_index=2 * i + j, pump_power_mw=pump,
                )
                trace.extra["dataset"] = str(i)
                tag = "sq" if kind is TraceKind.SQUEEZED else "asq"
                path = out_dir / f"{args.prefix}_{tag}_{i}.csv"
                write_trace_csv(trace, path)
                written.append(path)
    for path in written:
        print(f"wrote {path}")
    return 0


_CORES_KEYS = {
    "l_crystal_m",
    "mirror_radius_m",
    "coating_phase_f_rad",
    "coating_phase_h_rad",
    "poling_period_m",
    "l_air_min_m",
    "l_air_max_m",
    "l_air_step_m",
    "t_min_c",
    "t_max_c",
    "t_step_c",
    "detune_tol_rad",
    "min_qpm_efficiency",
}


def _cmd_coresonance(args) -> int:
    raw = parse_keyvalue_file(args.config)
    unknown = set(raw) - _CORES_KEYS
    if unknown:
        raise DomainError(f"{args.config}: unknown keys {sorted(unknown)}")
    missing = {
        "l_crystal_m", "mirror_radius_m", "poling_period_m",
        "l_air_min_m", "l_air_max_m", "l_air_step_m",
        "t_min_c", "t_max_c", "t_step_c",
    } - set(raw)
    if missing:
        raise DomainError(f"{args.config}: missing keys {sorted(missing)}")
    val = {k: float(v) for k, v in raw.items()}
    disp = load_dispersion_file(args.dispersion)
    geom = cores.CavityGeometry(
        l_air_m=val["l_air_min_m"],
        l_crystal_m=val["l_crystal_m"],
        mirror_radius_m=val["mirror_radius_m"],
        coating_phase_f_rad=val.get("coating_phase_f_rad", 0.0),
        coating_phase_h_rad=val.get("coating_phase_h_rad", 0.0),
    )
    grid = cores.ScanGrid(
        l_air_min_m=val["l_air_min_m"],
        l_air_max_m=val["l_air_max_m"],
        l_air_step_m=val["l_air_step_m"],
        t_min_c=val["t_min_c"],
        t_max_c=val["t_max_c"],
        t_step_c=val["t_step_c"],
    )
    tol = cores.ScanTolerances(
        detune_rad=val.get("detune_tol_rad", 1e-6),
        min_qpm_efficiency=val.get("min_qpm_efficiency", 0.0),
    )
    result = cores.find_operating_points(
        geom, disp, val["poling_period_m"], grid, tol
    )
    print(f"fundamental resonance branches scanned: {result.n_branches}")
    print(f"double-resonance operating points: {len(result.points)}")
    if result.points:
        print("rank  l_air_mm      temp_c     detune_f_rad  detune_h_rad  qpm_eff")
        for i, p in enumerate(result.points, 1):
            print(
                f"{i:4d}  {p.l_air_m * 1e3:.9f}  {p.temperature_c:9.4f}  "
                f"{p.detune_f_rad: .3e}   {p.detune_h_rad: .3e}   "
                f"{p.qpm_efficiency:.4f}"
            )
    elif result.best_near_miss is not None:
        p = result.best_near_miss
        print("no point met the tolerances; best near-miss:")
        print(
            f"l_air {p.l_air_m * 1e3:.9f} mm, T {p.temperature_c:.4f} C, "
            f"detune_f {p.detune_f_rad:.3e} rad, detune_h {p.detune_h_rad:.3e} rad, "
            f"qpm_eff {p.qpm_efficiency:.4f}"
        )
    return 0


def _read_plot_csv(path: str) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = None
    rows = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append([float(x) for x in line.split(",")])
    if header is None or not rows:
        raise DomainError(f"{path}: no data to plot")
    return header, np.asarray(rows)


def _cmd_plot(args) -> int:
    series = []
    x_label = "x"
    for path in args.csv:
        header, data = _read_plot_csv(path)
        x_label = header[0]
        stem = Path(path).stem
        for col in range(1, data.shape[1]):
            label = stem if data.shape[1] == 2 else f"{stem}:{header[col]}"
            series.append((label, data[:, 0], data[:, col]))
    svg = svgplot.render_line_chart(
        series,
        x_label=x_label,
        y_label="power_db",
        title=args.title,
        log_x=args.log_x,
    )
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser

def _build_parser() -> _Parser:
    parser = _Parser(prog="sqzkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="evaluate the model noise spectra")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--fwhm-mhz", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--f-start-hz", type=float, default=3e6)
    p.add_argument("--f-stop-hz", type=float, default=25e6)
    p.add_argument("--n-points", type=int, default=23)
    p.add_argument("--out", help="write a curve CSV instead of a table")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("buildup", help="pump build-up and impedance matching")
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--r2", type=float, required=True)
    p.add_argument("--v-ar", type=float, default=1.0)
    p.add_argument("--v-ktp", type=float, default=1.0)
    p.set_defaults(func=_cmd_buildup)

    p = sub.add_parser("budget", help="detection-efficiency budget")
    p.add_argument("--visibility", type=float, required=True)
    p.add_argument("--eta-pd", type=float, required=True)
    p.add_argument("--eta-pr", type=float, required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--l-rt", type=float, required=True)
    p.set_defaults(func=_cmd_budget)

    p = sub.add_parser("design", help="external pump power for a squeezing target")
    p.add_argument("--target-db", type=float, required=True)
    p.add_argument("--f-hz", type=float, required=True)
    p.add_argument("--fwhm-mhz", type=float, required=True)
    p.add_argument("--p-thrs-mw", type=float, required=True)
    p.add_argument("--eta", type=float, help="total efficiency (overrides budget)")
    p.add_argument("--visibility", type=float)
    p.add_argument("--eta-pd", type=float)
    p.add_argument("--eta-pr", type=float)
    p.add_argument("--t1", type=float)
    p.add_argument("--l-rt", type=float)
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--r2", type=float, required=True)
    p.add_argument("--v-ar", type=float, default=1.0)
    p.add_argument("--v-ktp", type=float, default=1.0)
    p.add_argument("--new-r1", type=float)
    p.add_argument("--new-r2", type=float)
    p.add_argument("--new-v-ar", type=float)
    p.add_argument("--new-v-ktp", type=float)
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("fit", help="joint fit of squeezing spectra")
    p.add_argument("traces", nargs="+", help="trace CSV files")
    p.add_argument("--exclude", action="append",
                   help="frequency window LO:HI in Hz to drop (repeatable); "
                        "default 16.5e6:18.5e6")
    p.add_argument("--no-exclusion", action="store_true")
    p.add_argument("--residuals-out", help="write residual CSV here")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("simulate", help="generate synthetic analyzer traces")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--fwhm-mhz", type=float, required=True)
    p.add_argument("--epsilon", type=float, action="append", required=True)
    p.add_argument("--rbw-hz", type=float, default=300e3)
    p.add_argument("--vbw-hz", type=float, default=300.0)
    p.add_argument("--f-start-hz", type=float, default=3e6)
    p.add_argument("--f-stop-hz", type=float, default=25e6)
    p.add_argument("--n-points", type=int, default=221)
    p.add_argument("--dark-clearance-db", type=float)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-thrs-mw", type=float)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--prefix", default="trace")
    p.add_argument("--zero-span", action="store_true")
    p.add_argument("--f-hz", type=float, default=5e6)
    p.add_argument("--duration-s", type=float, default=1.0)
    p.add_argument("--theta-start-rad", type=float, default=0.0)
    p.add_argument("--theta-rate-rad-s", type=float, default=0.0)
    p.add_argument("--sigma-theta-rad", type=float, default=0.0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("coresonance", help="double-resonance operating points")
    p.add_argument("--config", required=True, help="geometry/scan key=value file")
    p.add_argument("--dispersion", required=True, help="dispersion coefficient file")
    p.set_defaults(func=_cmd_coresonance)

    p = sub.add_parser("plot", help="CSV to SVG line chart")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--log-x", action="store_true")
    p.add_argument("--title", default="")
    p.set_defaults(func=_cmd_plot)

    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InfeasibleTargetError, DegenerateProblemError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (DomainError, TraceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run_cli())


if __name__ == "__main__":
    main()
