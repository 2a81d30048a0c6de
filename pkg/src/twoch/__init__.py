"""Global dissipative solutions of the two-component Camassa-Holm system.

A solver that continues weak solutions past wave breaking by evolving
characteristics with per-node energy freezing, supporting initial data with
distinct, nonvanishing spatial asymptotics.  The library exposes the grid
state types, the Eulerian/Lagrangian transforms, the O(N) nonlocal
operators, the dissipative and conservative time steppers, the solution
metric, and a scenario-driven CLI.
"""

from .state import (
    EulerianState,
    LagrangianState,
    Measure,
    Tolerances,
    ValidationReport,
    classify_region,
    g_eulerian,
    g_value,
    g_values,
    identity_state,
    state_norms,
    validate_G,
)
from .kernels import KernelWorkspace, compute_PQ, compute_PQ_conservative
from .transform import (
    Relabeling,
    normalize,
    relabel,
    to_eulerian,
    to_lagrangian,
)
from .metrics import EnergyReport, d_D, d_R, d_R_components, energy_report, kappa_set
from .evolution import (
    BreakEvent,
    Rates,
    ShiftMetadata,
    StepResult,
    detect_and_freeze,
    reduce_parameters,
    rhs,
    shift_back_profile,
    solve,
    step,
)
from .scenarios import (
    SCENARIOS,
    SimulationConfig,
    Snapshot,
    SolverSettings,
    TimeSeries,
    build_scenario,
    config_hash,
)

__version__ = "0.1.0"

__all__ = [
    "EulerianState", "LagrangianState", "Measure", "Tolerances",
    "ValidationReport", "classify_region", "g_eulerian", "g_value",
    "g_values", "identity_state", "state_norms", "validate_G",
    "KernelWorkspace", "compute_PQ", "compute_PQ_conservative",
    "Relabeling", "normalize", "relabel", "to_eulerian", "to_lagrangian",
    "EnergyReport", "d_D", "d_R", "d_R_components", "energy_report",
    "kappa_set",
    "BreakEvent", "Rates", "ShiftMetadata", "StepResult",
    "detect_and_freeze", "reduce_parameters", "rhs", "shift_back_profile",
    "solve", "step",
    "SCENARIOS", "SimulationConfig", "Snapshot", "SolverSettings",
    "TimeSeries", "build_scenario", "config_hash",
]
