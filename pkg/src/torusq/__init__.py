"""Queue scheduling on oriented torus road networks."""

from .conflict import (
    BACKWARD,
    FORWARD,
    ConflictCycle,
    enumerate_cycles,
    is_conflict_cycle,
    is_conflict_path,
    make_cycle,
    ring_cycle,
)
from .errors import (
    BudgetExceeded,
    EmptyCycleSet,
    InternalInvariantViolation,
    NoCycleFound,
    NonTermination,
    NotSaturated,
    SlackExceeded,
    ThresholdViolated,
)
from .dot import conflict_dot, torus_dot
from .flooding import FloodResult, backward_flow, compute_queues, flooding, forward_flow
from .oracle import (
    brute_force_optimum,
    lower_bound_saturated,
    lower_bound_unsaturated,
    psi_threshold_ok,
    saturated_optimum,
    threshold_construction,
)
from .saturated import (
    SaturatedSolution,
    cycle_average,
    minimize_saturated,
    optimize_single_round,
)
from .torus import (
    Direction,
    LinkRef,
    NetworkState,
    Orientation,
    TorusGeometry,
    generate_balanced,
    generate_saturated,
    green_time,
    is_saturated,
    step,
)
from .unsaturated import (
    ReleaseResult,
    RoundEvent,
    RoundRecord,
    StrategyResult,
    minimize_unsaturated,
    release,
    rotate,
)

__all__ = [
    "BACKWARD",
    "BudgetExceeded",
    "ConflictCycle",
    "Direction",
    "EmptyCycleSet",
    "FORWARD",
    "FloodResult",
    "InternalInvariantViolation",
    "LinkRef",
    "NetworkState",
    "NoCycleFound",
    "NonTermination",
    "NotSaturated",
    "Orientation",
    "ReleaseResult",
    "RoundEvent",
    "RoundRecord",
    "SaturatedSolution",
    "SlackExceeded",
    "StrategyResult",
    "ThresholdViolated",
    "TorusGeometry",
    "backward_flow",
    "brute_force_optimum",
    "compute_queues",
    "conflict_dot",
    "cycle_average",
    "enumerate_cycles",
    "flooding",
    "forward_flow",
    "generate_balanced",
    "generate_saturated",
    "green_time",
    "is_conflict_cycle",
    "is_conflict_path",
    "is_saturated",
    "lower_bound_saturated",
    "lower_bound_unsaturated",
    "make_cycle",
    "minimize_saturated",
    "minimize_unsaturated",
    "optimize_single_round",
    "psi_threshold_ok",
    "release",
    "ring_cycle",
    "rotate",
    "saturated_optimum",
    "step",
    "threshold_construction",
    "torus_dot",
]

__version__ = "0.1.0"
