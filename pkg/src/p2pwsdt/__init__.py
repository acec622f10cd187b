"""Rate allocation, lower bounds and dynamic simulation for weighted sum
download time (WSDT) in peer-to-peer one-to-many file transfer.

All quantities follow a fluid model: bandwidths in file-units per unit time,
peers described by uplink, downlink and weight, one source with uplink ``U_s``.
"""
from .bound import LowerBound, WaterfillSolution, waterfill, waterfill_minus_max, wsdt, wsdt_lower_bound
from .dynamic_sim import (
    DynamicState,
    DynamicTrace,
    EpochRecord,
    Join,
    Mode,
    Precedence,
    SimulationDivergence,
    approx_precedes,
    precedence,
    select_support_set,
    simulate_dynamic,
    strictly_precedes,
)
from .maxflow import (
    CapGraph,
    GraphError,
    ScheduleVerdict,
    TimeExpandedGraph,
    flow_rates_of_allocation,
    staggered_schedule,
    max_flow,
    rate_graph,
    verify_static_schedule,
)
from .model import (
    CASE_IDS,
    AllocationError,
    EmptyNetworkError,
    FileSizeError,
    NegativeCapacityError,
    NegativeWeightError,
    Network,
    PeerSpec,
    RateAllocation,
    ScenarioError,
    SourceUplinkError,
    WeightProfile,
    case_parameters,
    check_flow_rates,
    dump_scenario,
    generate_case,
    load_scenario,
    scenario_to_dict,
    validate_scenario,
)
from .static_alloc import (
    Depth2Allocation,
    MutualcastError,
    depth2_rateless,
    extended_mutualcast,
    max_common_rate,
    mutualcast,
    routing_based,
)

__version__ = "0.1.0"
