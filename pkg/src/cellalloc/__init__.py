"""cellalloc: utility-proportional-fair downlink rate allocation.

Direct (one-shot) solvers and a distributed bid/shadow-price protocol
simulator for a cell of users running mixes of real-time (sigmoidal utility)
and delay-tolerant (logarithmic utility) applications.
"""

from .allocator import (
    Allocation,
    AppSpec,
    KktReport,
    Scenario,
    UeSpec,
    aggregated_slope,
    app_demand,
    brute_force_oracle,
    centralized_allocate,
    iura_allocate,
    objective_value,
    ue_best_response,
    verify_kkt,
)
from .errors import (
    CellallocError,
    DomainError,
    OracleSizeError,
    ScenarioParseError,
    SolverError,
)
from .kernels import BACKEND, R_CAP, R_FLOOR
from .protocol import (
    BidMessage,
    DecaySpec,
    ExponentialDecay,
    IterTrace,
    Message,
    OscillationReport,
    ParamsUpload,
    PriceMessage,
    RateGrant,
    RationalDecay,
    RunOutcome,
    RunStatus,
    SimConfig,
    StopMessage,
    detect_oscillation,
    run_centralized_protocol,
    run_distributed,
    run_eura_basic,
    run_eura_robust,
    steady_state_price_bound,
)
from .scenario_io import (
    SweepResult,
    SweepRow,
    SweepSpec,
    emit_results,
    load_scenario,
    parse_scenario,
    run_sweep,
    serialize_scenario,
    solve_point,
)
from .utilities import LogarithmicUtility, SigmoidalUtility, Utility

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "AppSpec",
    "BACKEND",
    "BidMessage",
    "CellallocError",
    "DecaySpec",
    "DomainError",
    "ExponentialDecay",
    "IterTrace",
    "KktReport",
    "LogarithmicUtility",
    "Message",
    "OracleSizeError",
    "OscillationReport",
    "ParamsUpload",
    "PriceMessage",
    "R_CAP",
    "R_FLOOR",
    "RateGrant",
    "RationalDecay",
    "RunOutcome",
    "RunStatus",
    "Scenario",
    "ScenarioParseError",
    "SigmoidalUtility",
    "SimConfig",
    "SolverError",
    "StopMessage",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "UeSpec",
    "Utility",
    "emit_results",
    "load_scenario",
    "parse_scenario",
    "run_sweep",
    "serialize_scenario",
    "solve_point",
    "aggregated_slope",
    "app_demand",
    "brute_force_oracle",
    "centralized_allocate",
    "detect_oscillation",
    "iura_allocate",
    "objective_value",
    "run_centralized_protocol",
    "run_distributed",
    "run_eura_basic",
    "run_eura_robust",
    "steady_state_price_bound",
    "ue_best_response",
    "verify_kkt",
    "__version__",
]
