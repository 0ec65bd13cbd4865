"""Correlation-aware slot allocation for framed random access.

Correlated machine-type traffic makes classical framed ALOHA collide more
than the aggregate load suggests. This package groups users into slots from
their pairwise co-activity statistics (greedy min-max / min-sum merges plus
a transmission-probability scaling heuristic) and evaluates the resulting
throughput exactly, by bounds, or by Monte Carlo simulation.
"""
from ._backend import BACKEND
from .allocation import (
    SlotAssignment,
    assignment_to_allocation,
    cost_matrix,
    cost_matrix_from_text,
    cost_matrix_to_text,
    greedy_allocate,
    min_edge,
    minmax_objective,
    minsum_objective,
    scale_allocation,
    scaling_objective,
    uniform_allocation,
)
from .errors import CapabilityError, ConfigurationError, EstimationError
from .experiments import (
    SCHEMES,
    ExperimentConfig,
    OverheadQuery,
    builtin_patterns,
    build_scheme_allocation,
    config_from_mapping,
    default_event_rate_grid,
    load_config_file,
    run_experiment,
    run_pattern_examples,
    signaling_overhead,
    two_user_curves,
)
from .throughput import (
    BoundPair,
    ThroughputReport,
    exact_throughput,
    simulate,
    throughput_bounds,
    two_user_optimal,
    two_user_throughput,
)
from .traffic import (
    CyclicModel,
    CyclicPattern,
    IndependentModel,
    PairwiseStats,
    SpatioTemporalModel,
    TabularModel,
    TrafficModel,
    UserLocations,
    analytic_pair_stats,
    cyclic_model,
    deploy_users,
    disk_intersection_area,
    empirical_pair_stats,
    independent_model,
    sample_frame,
)

__version__ = "0.1.0"
