"""Regularized bottleneck routing for interference-limited networks."""

from .experiments import ExperimentConfig, load_class, queue_study, run_scenario
from .interference import (
    InterferenceMap,
    RateWeightTransformer,
    aggregate_interference,
    compute_link_rate_table,
    link_rate,
    random_interference_map,
    rate_to_weights,
)
from .routers import (
    IMARouter,
    OSPFRouter,
    RGARouter,
    RRORouter,
    allocate_all,
    make_router,
)
from .routing import (
    RoutingResult,
    brute_force_rmep,
    ima_route,
    ospf_route,
    path_cost,
    relaxation_count,
    rga_route,
    rro_route,
)
from .simulator import SimConfig, SimReport, analytic_flow_rates, fairness, run_simulation
from .topology import (
    Flow,
    NetworkGraph,
    NoPathError,
    Path,
    PathAllocation,
    TopologyError,
    load_topology,
    random_topology,
    validate_flow_set,
)

__version__ = "0.1.0"
