"""motlib: exact discrete optimal transport, cyclically monotone map
extension, center-outward ranks, and seeded convergence diagnostics."""

__version__ = "0.1.0"

from .errors import (
    DomainError, InputFormatError, MarginError, NotCyclicallyMonotoneError,
    StrictConvexityError,
)
from .geometry import (
    Ball, Box, Cone, Finite, GridOf, PolytopeVertices, Product, Ray,
    SetDescriptor, Union, convex_hull_vertices, descriptor_from_json,
    grid_points, hausdorff_distance, horizon, is_strictly_convex_in_direction,
    support_function,
)
from .monotone import (
    MaxAffinePotential, MonotoneVerdict, PairSet, brute_force_cycle_oracle,
    chain_components, eval_subdifferential, is_cyclically_monotone,
    is_monotone, rockafellar_potential, subdifferential_contains,
)
from .transport import (
    Coupling, DiscreteMeasure, brute_force_ot, coupling_support,
    gaussian_brenier, make_discrete_measure, margins_of, solve_discrete_ot,
    sorted_1d_ot, uniform_measure,
)
from .ranks import (
    CenterOutwardGrid, RankAssignment, center_outward_grid,
    center_outward_ranks, quantile_contour,
)
from .convergence import (
    ExperimentConfig, ExperimentReport, MapOracle, fell_check,
    global_sup_on_receding_set, image_hausdorff, local_uniform_sup,
    range_containment_check, run_consistency_experiment,
    run_single_replication, spearman_rank_correlation,
)

__all__ = [name for name in dir() if not name.startswith("_")]
