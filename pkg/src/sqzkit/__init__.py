"""sqzkit: modeling, fitting, simulation and design of cavity-enhanced
squeezed-vacuum sources."""

from .cavity_design import (
    BuildupConfig,
    EfficiencyBudget,
    PumpDesign,
    buildup_factor,
    buildup_factor_range,
    design_pump_power,
    escape_efficiency,
    optimal_input_coupler,
    scale_pump_power,
    total_efficiency,
)
from .coresonance import (
    CavityGeometry,
    OperatingPoint,
    ScanGrid,
    ScanResult,
    ScanTolerances,
    find_operating_points,
    gouy_phase_one_way,
    matched_poling_period,
    qpm_efficiency,
    qpm_mismatch,
    round_trip_phase,
)
from .dispersion import DispersionModel, load_dispersion_file
from .errors import (
    DegenerateProblemError,
    DispersionRangeError,
    DomainError,
    InfeasibleTargetError,
    InstabilityError,
    ScanResolutionError,
    TraceFormatError,
)
from .measure_sim import (
    AnalyzerSettings,
    PhaseScan,
    SweepSpan,
    ZeroSpanWindow,
    phase_averaged_variance,
    synth_spectrum,
    zero_span_phase_scan,
)
from .noise_model import (
    DarkNoiseContext,
    NoiseModelParams,
    QuadratureVariancePair,
    antisqueezed_variance,
    dark_noise_add,
    dark_noise_correct,
    db_from_linear,
    epsilon_from_powers,
    linear_from_db,
    quadrature_pair,
    quadrature_variance,
    required_epsilon,
    squeezed_variance,
)
from .trace_fit import (
    ConvergenceSettings,
    Dataset,
    FitProblem,
    FitResult,
    InitialGuess,
    apply_exclusions,
    fit_joint,
    jacobian_check,
    residuals,
)
from .traces import TraceData, TraceKind, parse_trace_csv, write_trace_csv

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
