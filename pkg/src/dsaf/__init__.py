"""DSAF: dynamic slice allocation framework.

Places 5G-core slice VNF chains onto hypervisors with an exact optimizer
(balanced utilization plus normalized path delay, under CPU/RAM/HDD,
bandwidth, end-to-end delay, and isolation constraints), drives the
allocation protocol through agent messages with a persistent event log,
and ships a first-available baseline plus a scenario harness.
"""

from .optimizer import (CONSTRAINT_CLASSES, HAS_NUMBA, ProblemInstance,
                        SolveOutcome, Weights, active_backend, build_instance,
                        check_feasible, evaluate_objective, solve)
from .baseline import fcfsfa_allocate
from .harness import ScenarioConfig, ScenarioReport, compare, emit_plot_data, run_scenario
from .orchestrator import Orchestrator, RequestRecord
from .slices import (GeneratorParams, Placement, SliceRequest, VnfSpec,
                     generate_requests, validate_request)
from .store import EventStore
from .topology import (Hypervisor, NetLink, PathTable, Topology,
                       apply_placement, compute_path_table,
                       conservation_holds, load_topology, reference_testbed,
                       revert_placement)

__version__ = "0.1.0"

__all__ = [
    "CONSTRAINT_CLASSES", "EventStore", "GeneratorParams", "HAS_NUMBA",
    "Hypervisor", "NetLink", "Orchestrator", "PathTable", "Placement",
    "ProblemInstance", "RequestRecord", "ScenarioConfig", "ScenarioReport",
    "SliceRequest", "SolveOutcome", "Topology", "VnfSpec",
    "Weights", "active_backend", "apply_placement", "build_instance",
    "check_feasible", "compare", "compute_path_table", "conservation_holds",
    "emit_plot_data", "evaluate_objective", "fcfsfa_allocate",
    "generate_requests", "load_topology", "reference_testbed",
    "revert_placement", "run_scenario", "solve", "validate_request",
]
