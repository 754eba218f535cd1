"""Multi-agent prediction-guided next-best-view planning for 3D reconstruction.

A desk-scale simulator and library: synthetic observations of a ground-truth
object, pluggable shape prediction, ring-based viewpoint candidates, hidden
point removal visibility, RRT-Connect path costs, and three view-selection
policies (joint multi-agent, single-agent, and a frontier baseline) with
reproducible episode metrics.
"""

from .candidates import CandidateConfig, CandidateSet, generate_candidates
from .episode import (
    AgentState,
    EpisodeConfig,
    EpisodeReport,
    first_iteration_gain,
    run_episode,
    run_suite,
)
from .errors import (
    ConfigError,
    DegenerateMeshError,
    MapNbvError,
    MeshParseError,
    PlannerStuck,
    PlanningFailure,
    SetupError,
)
from .geometry import (
    CloudStats,
    Pose,
    RigidTransform,
    cloud_stats,
    key_set,
    merge_unique,
    transform,
    voxel_downsample,
)
from .metrics import improvement, reproduce_tables
from .nbv import (
    PlannerConfig,
    TeamSelection,
    detect_frontiers,
    expected_gain,
    joint_gain,
    select_frontier_multi,
    select_map_nbv,
    select_pred_nbv,
)
from .planning import CollisionWorld, Path, RrtConfig, control_effort, is_collision_free, plan_path
from .predictors import PredictorKind, Prediction, predict
from .scene import Box, Observation, OccupancyGrid, Scene, SphereObstacle, accumulate, synthesize_observation, update_occupancy
from .scenes import build_scene, bundled_scene, generate_scene_meshes
from .visibility import SensorModel, hidden_point_removal, raycast_visibility, sensor_gate, visible_points

__version__ = "0.1.0"
