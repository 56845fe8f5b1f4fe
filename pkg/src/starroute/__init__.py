"""starroute: multi-path beam routing through transmit/reflect surfaces.

The package models a base station steering narrow beams through a
network of dual-face (reflect + transmit) panels toward users, with
closed-form optimal designs for every continuous decision - transmit
beamforming, per-element phases, per-face power splits, per-user power
shares - and an exact combinatorial search over which paths to light
up. A matrix-level oracle rebuilds the physics independently to verify
every closed form.
"""
from .scene import (
    ConfigError,
    GrazingDiagnostic,
    Node,
    NodeKind,
    Scene,
    SceneError,
    SceneFormatError,
    SceneInvariantError,
    SolverMode,
    SystemConfig,
    build_scene,
    direction,
    distance,
    dump_scene,
    load_config,
    load_scene,
    resolved_config_dict,
    restrict_users,
    side_cosine,
    validate_geometry,
)
from .channel import (
    ArrayResponse,
    Beamformer,
    CandidatePath,
    GrazingIncidenceError,
    MissingEdgeError,
    PhaseProfile,
    SurfaceUse,
    bs_steering,
    optimal_beamformer,
    optimal_phase_profile,
    path_metrics,
    peak_gain_value,
    ris_response,
    surface_for_hop,
)
from .routing import (
    LosGraph,
    RoutingError,
    WeightedEdge,
    build_los_graph,
    edge_weight,
    enumerate_all_paths,
    path_weight,
    yen_k_shortest,
)
from .splitting import (
    AmplitudeAssignment,
    Beam,
    BeamForest,
    CrossUserSharing,
    DesignBundle,
    ForestError,
    InDegreeViolation,
    InfeasibleError,
    OutDegreeViolation,
    PowerAllocation,
    SideViolation,
    assemble_designs,
    beam_power_allocation,
    build_forest,
    optimal_amplitudes,
    predicted_power_single,
    predicted_powers,
    realized_path_gain,
    user_gains,
    user_power_allocation,
)
from .selection import (
    NoPathError,
    PathGraph,
    Solution,
    admissible_path,
    bron_kerbosch,
    build_path_graph,
    candidate_paths,
    compatible,
    selection_power,
    selection_rank_key,
    solve_multi_user,
    solve_single_user,
)
from .oracle import (
    BruteForceResult,
    ChannelMatrices,
    ClosedFormCheck,
    OracleError,
    OracleReport,
    brute_force_select,
    simulate_path,
    simulate_received_power,
    verify_power_closed_form,
    verify_solution,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeAssignment",
    "ArrayResponse",
    "Beam",
    "BeamForest",
    "Beamformer",
    "BruteForceResult",
    "CandidatePath",
    "ChannelMatrices",
    "ClosedFormCheck",
    "ConfigError",
    "CrossUserSharing",
    "DesignBundle",
    "ForestError",
    "GrazingDiagnostic",
    "GrazingIncidenceError",
    "InDegreeViolation",
    "InfeasibleError",
    "LosGraph",
    "MissingEdgeError",
    "NoPathError",
    "Node",
    "NodeKind",
    "OracleError",
    "OracleReport",
    "OutDegreeViolation",
    "PathGraph",
    "PhaseProfile",
    "PowerAllocation",
    "RoutingError",
    "Scene",
    "SceneError",
    "SceneFormatError",
    "SceneInvariantError",
    "SideViolation",
    "Solution",
    "SolverMode",
    "SurfaceUse",
    "SystemConfig",
    "WeightedEdge",
    "admissible_path",
    "assemble_designs",
    "beam_power_allocation",
    "bron_kerbosch",
    "brute_force_select",
    "bs_steering",
    "build_forest",
    "build_los_graph",
    "build_path_graph",
    "build_scene",
    "candidate_paths",
    "compatible",
    "direction",
    "distance",
    "dump_scene",
    "edge_weight",
    "enumerate_all_paths",
    "load_config",
    "load_scene",
    "optimal_amplitudes",
    "optimal_beamformer",
    "optimal_phase_profile",
    "path_metrics",
    "path_weight",
    "peak_gain_value",
    "predicted_power_single",
    "predicted_powers",
    "realized_path_gain",
    "resolved_config_dict",
    "restrict_users",
    "ris_response",
    "selection_power",
    "selection_rank_key",
    "side_cosine",
    "simulate_path",
    "simulate_received_power",
    "solve_multi_user",
    "solve_single_user",
    "surface_for_hop",
    "user_gains",
    "user_power_allocation",
    "validate_geometry",
    "verify_power_closed_form",
    "verify_solution",
    "yen_k_shortest",
]
