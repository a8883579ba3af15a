# maipp/planners/registry.py

"""
Method labels and the controllers they stand for.

Labels mirror the benchmark tables: ``RRT(0.3,0.4)``, ``DI(8,3)``,
``TI(8,5)``, ``TI(8,5)*``, ``intent-free`` and ``random``.
"""

import logging
import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

from maipp.core.config import ExperimentConfig
from maipp.core.errors import MethodSpecError
from maipp.planners.base import Controller
from maipp.planners.learned import LearnedController, RandomController
from maipp.planners.sga import SGAPlanner
from maipp.policy.network import PolicyNet

# Set up logging
logger = logging.getLogger(__name__)

_NUM = r"\s*([0-9]*\.?[0-9]+)\s*"
_RRT = re.compile(rf"^RRT\({_NUM},{_NUM}\)$")
_INTENT = re.compile(r"^(DI|TI)\(\s*(\d+)\s*,\s*(\d+)\s*\)(\*?)$")

Planner = Union[Controller, SGAPlanner]


@dataclass(frozen=True)
class MethodSpec:
    """A parsed method label."""
    kind: str
    params: Tuple[float, ...] = ()
    best_first_step: bool = False

    @property
    def label(self) -> str:
        if self.kind == "RRT":
            return f"RRT({self.params[0]:g},{self.params[1]:g})"
        if self.kind in ("DI", "TI"):
            star = "*" if self.best_first_step else ""
            return f"{self.kind}({int(self.params[0])},{int(self.params[1])}){star}"
        return self.kind

    @property
    def learned(self) -> bool:
        return self.kind in ("DI", "TI", "intent-free")


def parse_method(label: str) -> MethodSpec:
    """
    Parses a method label.

    Raises:
        MethodSpecError: if the label is unknown or its parameters violate
            ``0 < a < b`` (RRT) or ``a, j >= 1`` (intent variants)
    """
    text = label.strip()
    if text.lower() in ("intent-free", "intent_free", "intentfree"):
        return MethodSpec("intent-free")
    if text.lower() == "random":
        return MethodSpec("random")
    match = _RRT.match(text)
    if match:
        a, b = float(match.group(1)), float(match.group(2))
        if not 0 < a < b:
            raise MethodSpecError(f"{label!r}: RRT horizon needs 0 < a < b")
        return MethodSpec("RRT", (a, b))
    match = _INTENT.match(text)
    if match:
        a, j = int(match.group(2)), int(match.group(3))
        if a < 1 or j < 1:
            raise MethodSpecError(f"{label!r}: intent sampling needs a >= 1 and j >= 1")
        star = match.group(4) == "*"
        if star and match.group(1) != "TI":
            raise MethodSpecError(f"{label!r}: the best-first-step rule is defined for TI only")
        return MethodSpec(match.group(1), (a, j), star)
    raise MethodSpecError(f"unknown method label {label!r}")


class MethodRegistry:
    """
    Registry of planner factories keyed by method kind.

    Factories receive the parsed spec, the experiment config and an optional
    network, and return a ready planner.
    """

    def __init__(self):
        self.factories: Dict[str, Callable[[MethodSpec, ExperimentConfig, Optional[PolicyNet]], Planner]] = {}

    def register(self, kind: str, factory: Callable[[MethodSpec, ExperimentConfig, Optional[PolicyNet]], Planner]) -> None:
        self.factories[kind] = factory
        logger.debug(f"Registered method kind: {kind}")

    def list_kinds(self) -> List[str]:
        return list(self.factories.keys())

    def build(self, label: str, cfg: ExperimentConfig, net: Optional[PolicyNet] = None) -> Planner:
        spec = parse_method(label)
        factory = self.factories.get(spec.kind)
        if factory is None:
            raise MethodSpecError(f"no planner registered for {spec.kind!r}")
        if spec.learned and net is None:
            raise MethodSpecError(f"{label!r} needs a policy checkpoint")
        return factory(spec, cfg, net)


def _rrt(spec: MethodSpec, cfg: ExperimentConfig, net: Optional[PolicyNet]) -> Planner:
    return SGAPlanner(spec.params[0], spec.params[1], cfg.rrt)


def _learned(spec: MethodSpec, cfg: ExperimentConfig, net: Optional[PolicyNet]) -> Planner:
    kind = None if spec.kind == "intent-free" else spec.kind
    a, j = (int(spec.params[0]), int(spec.params[1])) if spec.params else (8, 5)
    return LearnedController(
        net, kind, a, j,
        best_first_step=spec.best_first_step,
        greedy=cfg.greedy,
        min_cov_bound=cfg.intent.min_cov_bound,
    )


def _random(spec: MethodSpec, cfg: ExperimentConfig, net: Optional[PolicyNet]) -> Planner:
    return RandomController()


# Global registry instance
registry = MethodRegistry()
registry.register("RRT", _rrt)
registry.register("DI", _learned)
registry.register("TI", _learned)
registry.register("intent-free", _learned)
registry.register("random", _random)


def build_planner(label: str, cfg: ExperimentConfig, net: Optional[PolicyNet] = None) -> Planner:
    return registry.build(label, cfg, net)
