"""Bearing rigidity, bearing-based localization, and formation control."""

__version__ = "0.1.0"

from .errors import (
    BearingNetError,
    CollocationError,
    InputError,
    NotLocalizableError,
    SingularProjectionSumError,
)
from .graph import (
    Graph,
    OrientedGraph,
    augment_anchors,
    build_graph,
    henneberg_edge_splitting,
    henneberg_vertex_addition,
    incidence_matrix,
    is_laman,
    orient,
    random_henneberg_graph,
)
from .rigidity import (
    Network,
    RigidityReport,
    SE2Network,
    bearing_function,
    bearing_laplacian,
    bearing_rigidity_matrix,
    distance_rigidity_matrix,
    is_generically_bearing_rigid,
    is_infinitesimally_bearing_rigid,
    is_infinitesimally_distance_rigid,
    is_se2_infinitesimally_rigid,
    projection,
    se2_bearing_function,
    se2_rigidity_matrix,
    trivial_bearing_motion_basis,
)
from .localization import (
    AnchoredNetwork,
    anchored_network,
    is_bearing_localizable,
    localization_objective,
    localization_protocol_field,
    partition_laplacian,
    simulate_localization,
    solve_localization,
)
from .formation import (
    Gains,
    LeaderMotion,
    TargetFormation,
    bearing_gradient_field,
    bearing_only_descent_field,
    bearing_only_field,
    di_acceleration_feedback_field,
    di_field,
    formation_metrics,
    phi1,
    phi2,
    si_pi_field,
    si_stabilization_field,
    si_velocity_feedback_field,
    simulate_formation,
    target_from_configuration,
    unicycle_field,
)
from .sim import SimConfig, Tolerances, Trajectory, integrate, random_configuration

__all__ = [name for name in dir() if not name.startswith("_")]
