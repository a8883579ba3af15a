"""Controllers and baseline planners: learned variants, random walks, SGA over RRT candidates."""

from maipp.planners.base import Controller, Decision
from maipp.planners.learned import LearnedController, RandomController, intent_free_policy_step
from maipp.planners.registry import MethodSpec, build_planner, parse_method
from maipp.planners.rrt import CandidatePath, evaluate_path, grow_rrt
from maipp.planners.sga import SGAPlanner, sga_round

__all__ = [
    "CandidatePath",
    "Controller",
    "Decision",
    "LearnedController",
    "MethodSpec",
    "RandomController",
    "SGAPlanner",
    "build_planner",
    "evaluate_path",
    "grow_rrt",
    "intent_free_policy_step",
    "parse_method",
    "sga_round",
]
