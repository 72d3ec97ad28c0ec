"""Prior-guided bidirectional RRT planning with multi-stage path post-processing."""

from .bench import flood_fill_oracle, run_benchmark
from .collision import (
    Attachment, Obb, OccupancyGrid, Scene, config_is_free, motion_is_free, path_is_free, segment_is_free,
)
from .exemplars import ExemplarParams, collect_exemplars
from .fgmm import Fgmm, em_fit, mixture_density
from .kinematics import Chain, Gripper, Joint, RobotModel, forward_kinematics, tcp_distance
from .optimizer import OptimizerParams, optimize
from .planner import PlannerParams, PlanResult, plan
from .scenario import Scenario, load_scenario

__all__ = [
    "Attachment", "Chain", "ExemplarParams", "Fgmm", "Gripper", "Joint", "Obb", "OccupancyGrid",
    "OptimizerParams", "PlanResult", "PlannerParams", "RobotModel", "Scenario", "Scene",
    "collect_exemplars", "config_is_free", "em_fit", "flood_fill_oracle", "forward_kinematics",
    "load_scenario", "mixture_density", "motion_is_free", "optimize", "path_is_free", "plan",
    "run_benchmark", "segment_is_free", "tcp_distance",
]
