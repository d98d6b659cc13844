"""Trust-weighted flocking simulator for fault-resilient swarm missions."""

from .comms import WeightVector, build_comm_graph, comm_quality, self_quality, weight_vector
from .control import (
    ControlMethod,
    MismatchedNeighborSet,
    NumericalDivergence,
    VirtualLeader,
    averaged_update,
    navigational_feedback,
    step_swarm,
    weighted_update,
)
from .faults import FaultProfile, apply_degradation
from .model import (
    CommGraph,
    DegenerateDisplacement,
    InvalidParams,
    RobotState,
    SwarmParams,
    TrustMap,
    bearing_deg,
    neighbors,
)
from .scenario import (
    MetricsReport,
    ScenarioSpec,
    Simulation,
    builtin_scenario,
    compute_accumulated_uncertainty,
    compute_metrics,
    load_scenario,
    run,
    transition_check,
)
from .telemetry import ENGINE_VERSION, RunRecord, SchemaMismatch, read_run, write_run
from .trust import TrustEvent, TrustProvider, TrustSourceConfig, merge_trust, trust_at

__version__ = ENGINE_VERSION

__all__ = [
    "CommGraph",
    "ControlMethod",
    "DegenerateDisplacement",
    "FaultProfile",
    "InvalidParams",
    "MetricsReport",
    "MismatchedNeighborSet",
    "NumericalDivergence",
    "RobotState",
    "RunRecord",
    "ScenarioSpec",
    "SchemaMismatch",
    "Simulation",
    "SwarmParams",
    "TrustEvent",
    "TrustMap",
    "TrustProvider",
    "TrustSourceConfig",
    "VirtualLeader",
    "WeightVector",
    "apply_degradation",
    "averaged_update",
    "bearing_deg",
    "build_comm_graph",
    "builtin_scenario",
    "comm_quality",
    "compute_accumulated_uncertainty",
    "compute_metrics",
    "load_scenario",
    "merge_trust",
    "navigational_feedback",
    "neighbors",
    "read_run",
    "run",
    "self_quality",
    "step_swarm",
    "transition_check",
    "trust_at",
    "weight_vector",
    "weighted_update",
    "write_run",
]
