import math
from pathlib import Path

import numpy as np
import pytest
import torch

from maipp.cli.config import load_config
from maipp.core.belief import BeliefState
from maipp.core.config import ExperimentConfig, RRTConfig
from maipp.core.errors import BudgetExhausted, DomainError, MethodSpecError
from maipp.core.geometry import path_length
from maipp.core.intent import RolloutContext, fit_trajectory_intent, sample_trajectories
from maipp.core.models import IntentMessage
from maipp.planners.learned import LearnedController, RandomController, intent_free_policy_step
from maipp.planners.registry import MethodSpec, build_planner, parse_method, registry
from maipp.planners.rrt import CandidatePath, evaluate_path, grow_rrt, path_measurements
from maipp.planners.sga import SGAPlanner, execution_portion, horizon_for, rrt_config_for, sga_round
from maipp.policy.network import RecurrentState
from maipp.policy.observation import build_observation, policy_step
from maipp.policy.positional import positional_embedding
from maipp.sim.agent import AgentState, RngStreams
from maipp.train.evaluate import evaluate_variant


def candidate(*points):
    pts = np.asarray(points, dtype=float)
    return CandidatePath(waypoints=pts, length=path_length(pts))


def agent_at(i, position, budget=3.0, graph=None):
    return AgentState(id=i, position=np.asarray(position, dtype=float), budget=budget,
                      remaining_budget=budget, graph=graph)


def streams(seed):
    return RngStreams.spawn(np.random.SeedSequence(seed))


# --- RRT -----------------------------------------------------------------------


@pytest.mark.parametrize("horizon", [(0.3, 0.4), (0.6, 0.7), (0.9, 1.0)])
def test_rrt_candidates_in_window(horizon):
    paths = grow_rrt((0.5, 0.5), horizon, np.random.default_rng(0))
    assert paths
    a, b = horizon
    for p in paths:
        assert a - 1e-9 <= p.length <= b + 1e-9
        assert p.length == pytest.approx(path_length(p.waypoints), abs=1e-12)
        assert np.all((p.waypoints >= 0) & (p.waypoints <= 1))
        np.testing.assert_array_equal(p.start, [0.5, 0.5])
        assert np.isnan(p.predicted_final_trace)


def test_rrt_caps_candidates():
    paths = grow_rrt((0.1, 0.1), (0.3, 0.4), np.random.default_rng(1), RRTConfig(max_candidates=5))
    assert len(paths) <= 5


def test_rrt_invalid_horizon():
    with pytest.raises(DomainError):
        grow_rrt((0.5, 0.5), (0.4, 0.3), np.random.default_rng(0))
    with pytest.raises(DomainError):
        grow_rrt((0.5, 0.5), (0.02, 0.05), np.random.default_rng(0), RRTConfig(step=0.1))
    with pytest.raises(DomainError):
        grow_rrt((1.5, 0.5), (0.3, 0.4), np.random.default_rng(0))


def test_rrt_deterministic_per_seed():
    a = grow_rrt((0.2, 0.7), (0.3, 0.4), np.random.default_rng(9))
    b = grow_rrt((0.2, 0.7), (0.3, 0.4), np.random.default_rng(9))
    assert len(a) == len(b)
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p.waypoints, q.waypoints)


def test_evaluate_trivial_path_is_current_trace():
    rng = np.random.default_rng(2)
    belief = BeliefState(rng.uniform(0, 1, (3, 2)), rng.normal(size=3))
    assert evaluate_path(candidate((0.5, 0.5)), belief) == pytest.approx(belief.trace(), abs=1e-9)


def test_evaluate_with_duplicate_conditioning_matches_refit():
    belief = BeliefState.empty()
    path = candidate((0.1, 0.1), (0.5, 0.1), (0.5, 0.6))
    locs = path_measurements(path)
    refit = belief.with_measurements(np.vstack([locs, locs]), np.zeros(2 * len(locs)))
    assert evaluate_path(path, belief, [path]) == pytest.approx(refit.trace(), abs=1e-8)


def test_longer_path_never_worse():
    belief = BeliefState.empty()
    prefix = candidate((0.2, 0.2), (0.6, 0.2))
    longer = candidate((0.2, 0.2), (0.6, 0.2), (0.6, 0.7))
    assert evaluate_path(longer, belief) <= evaluate_path(prefix, belief) + 1e-9


def test_evaluate_on_interest_cells():
    belief = BeliefState.empty()
    path = candidate((0.2, 0.2), (0.6, 0.2))
    idx = np.arange(100)
    expected = belief.hypothetical_grid_variance(path_measurements(path))[idx].sum()
    assert evaluate_path(path, belief, interest_idx=idx) == pytest.approx(expected)


# --- SGA -----------------------------------------------------------------------


def test_horizon_fallback():
    assert horizon_for(3.0, 0.3, 0.4) == (0.3, 0.4)
    assert horizon_for(0.35, 0.3, 0.4) == (0.3, 0.35)
    assert horizon_for(0.2, 0.3, 0.4) == (0.15, 0.2)
    lo, hi = horizon_for(0.1, 0.3, 0.4)
    assert lo == pytest.approx(0.05) and hi == 0.1


def test_horizon_keeps_one_execution_portion_while_budget_allows():
    assert horizon_for(0.25, 0.3, 0.4, floor=0.2) == (0.2, 0.25)
    assert horizon_for(3.0, 0.1, 0.4, floor=0.2) == (0.2, 0.4)
    assert horizon_for(3.0, 0.05, 0.1, floor=0.2) == (0.05, 0.1)
    lo, hi = horizon_for(0.15, 0.3, 0.4, floor=0.2)
    assert lo == pytest.approx(0.075) and hi == 0.15


def test_rrt_config_shrinks_step():
    assert rrt_config_for(RRTConfig(step=0.1), (0.03, 0.06)).step == 0.06
    assert rrt_config_for(RRTConfig(step=0.1), (0.3, 0.4)).step == 0.1


def test_execution_portion():
    path = candidate((0.1, 0.1), (0.1, 0.5))
    portion = execution_portion(path, remaining=3.0, execute=0.2)
    assert path_length(portion) == pytest.approx(0.2)
    assert path_length(execution_portion(path, remaining=0.05)) == pytest.approx(0.05)


def test_single_agent_picks_best_candidate():
    belief = BeliefState.empty()
    cands = [candidate((0.5, 0.5), (0.5, 0.9)), candidate((0.5, 0.5), (0.1, 0.5), (0.1, 0.1))]
    chosen = sga_round(
        [agent_at(0, (0.5, 0.5))], [belief], [{0}], (0.3, 0.4), [np.random.default_rng(0)],
        candidate_fn=lambda agent, window: cands,
    )
    scores = [evaluate_path(c, belief) for c in cands]
    assert chosen[0].waypoints.tolist() == cands[int(np.argmin(scores))].waypoints.tolist()
    assert chosen[0].predicted_final_trace == pytest.approx(min(scores))


def test_two_agents_split_between_islands():
    belief = BeliefState.empty()
    left = candidate((0.5, 0.5), (0.15, 0.5))
    right = candidate((0.5, 0.5), (0.85, 0.5))
    agents = [agent_at(0, (0.5, 0.5)), agent_at(1, (0.5, 0.5))]
    chosen = sga_round(
        agents, [belief, belief], [{0, 1}, {0, 1}], (0.3, 0.4), [None, None],
        candidate_fn=lambda agent, window: [left, right],
    )
    ends = sorted(c.waypoints[-1, 0] for c in chosen)
    assert ends == [0.15, 0.85]
    joint = {
        (i, k): evaluate_path(p, belief, [q])
        for i, p in enumerate([left, right]) for k, q in enumerate([left, right])
    }
    picked = (0 if chosen[0].waypoints[-1, 0] == 0.15 else 1, 0 if chosen[1].waypoints[-1, 0] == 0.15 else 1)
    assert joint[picked] == pytest.approx(min(joint[(0, 1)], joint[(1, 0)]))


def test_out_of_range_agents_do_not_condition():
    belief = BeliefState.empty()
    left = candidate((0.5, 0.5), (0.15, 0.5))
    right = candidate((0.5, 0.5), (0.85, 0.5))
    agents = [agent_at(0, (0.5, 0.5)), agent_at(1, (0.5, 0.5))]
    chosen = sga_round(
        agents, [belief, belief], [{0}, {1}], (0.3, 0.4), [None, None],
        candidate_fn=lambda agent, window: [left, right],
    )
    np.testing.assert_array_equal(chosen[0].waypoints, chosen[1].waypoints)


def test_ties_go_to_lowest_index():
    belief = BeliefState.empty()
    path = candidate((0.5, 0.5), (0.5, 0.85))
    twin = candidate((0.5, 0.5), (0.5, 0.85))
    chosen = sga_round(
        [agent_at(0, (0.5, 0.5))], [belief], [{0}], (0.3, 0.4), [None],
        candidate_fn=lambda agent, window: [path, twin],
    )
    assert chosen[0].waypoints is path.waypoints


def test_halted_agent_gets_no_path():
    agent = agent_at(0, (0.5, 0.5), budget=1.0)
    agent.remaining_budget = 0.0
    chosen = sga_round([agent], [BeliefState.empty()], [{0}], (0.3, 0.4), [np.random.default_rng(0)])
    assert chosen == [None]


def test_sga_round_with_rrt():
    agents = [agent_at(0, (0.3, 0.3)), agent_at(1, (0.7, 0.7))]
    chosen = sga_round(
        agents, [BeliefState.empty()] * 2, [{0, 1}, {0, 1}], (0.3, 0.4),
        [np.random.default_rng(0), np.random.default_rng(1)], RRTConfig(max_candidates=8, min_candidates=1),
    )
    for c in chosen:
        assert 0.3 - 1e-9 <= c.length <= 0.4 + 1e-9
        assert np.isfinite(c.predicted_final_trace)


# --- learned controllers -------------------------------------------------------


def graph_agent(small_graph, budget=2.0):
    return AgentState(id=0, position=small_graph.nodes[0].copy(), budget=budget,
                      remaining_budget=budget, graph=small_graph, node=0)


def test_intent_free_step_equals_zero_intent_decode(small_graph, tiny_net):
    pe = positional_embedding(small_graph, 4)
    belief = BeliefState.empty()
    zero = build_observation(small_graph, belief, np.zeros(small_graph.n), pe, 0, 2.0, 0.4)
    noisy = build_observation(small_graph, belief, np.linspace(0, 1, small_graph.n), pe, 0, 2.0, 0.4)
    state = RecurrentState.zeros(tiny_net.d_model)
    torch.testing.assert_close(intent_free_policy_step(tiny_net, noisy, state).probs,
                               policy_step(tiny_net, zero, state).probs, rtol=0, atol=0)
    assert not torch.equal(policy_step(tiny_net, noisy, state).probs, policy_step(tiny_net, zero, state).probs)


def test_learned_controller_decides_a_reachable_neighbor(small_graph, tiny_net):
    controller = LearnedController(tiny_net, "TI", a=3, j=2)
    agent = graph_agent(small_graph)
    rngs = streams(0)
    controller.start_agent(agent, rngs)
    decision = controller.decide(agent, BeliefState.empty(), [], rngs, 0.4, 0.2)
    assert decision.next_node in [u for u, _ in small_graph.neighbors(0)]
    assert decision.log_prob <= 0
    assert isinstance(decision.intent, IntentMessage)
    assert decision.observation is not None


def test_best_first_step_executes_best_rollout(small_graph, tiny_net):
    controller = LearnedController(tiny_net, "TI", a=1, j=3, best_first_step=True)
    agent = graph_agent(small_graph)
    rngs = streams(4)
    controller.start_agent(agent, rngs)
    decision = controller.decide(agent, BeliefState.empty(), [], rngs, 0.4, 0.2)

    replay = streams(4)
    ctx = RolloutContext(small_graph, BeliefState.empty(), np.zeros(small_graph.n), agent.pe, 0.4, 0.2)
    trajs = sample_trajectories(tiny_net, ctx, 0, 2.0, agent.rec, 1, 3, replay.intent)
    assert decision.next_node == trajs.trajectories[0].nodes[0]


def test_greedy_controller_still_samples_its_rollouts(small_graph, tiny_net):
    controller = LearnedController(tiny_net, "TI", a=6, j=3, best_first_step=True, greedy=True)
    agent = graph_agent(small_graph)
    rngs = streams(5)
    controller.start_agent(agent, rngs)
    decision = controller.decide(agent, BeliefState.empty(), [], rngs, 0.4, 0.2)

    replay = streams(5)
    ctx = RolloutContext(small_graph, BeliefState.empty(), np.zeros(small_graph.n), agent.pe, 0.4, 0.2)
    trajs = sample_trajectories(tiny_net, ctx, 0, 2.0, agent.rec, 6, 3, replay.intent, greedy=False)
    assert decision.next_node == trajs.best().nodes[0]
    assert decision.intent == fit_trajectory_intent(trajs, 0, 0)


def test_disabled_broadcast_matches_intent_free(small_graph, tiny_net):
    free = LearnedController(tiny_net, None)
    silent = LearnedController(tiny_net, "DI", a=4, j=3, broadcast=False)
    decisions = []
    for controller in (free, silent):
        agent = graph_agent(small_graph)
        rngs = streams(7)
        controller.start_agent(agent, rngs)
        decisions.append(controller.decide(agent, BeliefState.empty(), [], rngs, 0.4, 0.2))
    assert decisions[0].next_node == decisions[1].next_node
    assert decisions[0].log_prob == decisions[1].log_prob
    assert decisions[1].intent is None


def test_controller_names_and_validation(tiny_net):
    assert LearnedController(tiny_net).name == "intent-free"
    assert LearnedController(tiny_net, "TI", 8, 5, best_first_step=True).name == "TI(8,5)*"
    with pytest.raises(DomainError):
        LearnedController(tiny_net, "XI")
    with pytest.raises(DomainError):
        LearnedController(tiny_net, None, best_first_step=True)


def test_exhausted_budget_raises(small_graph, tiny_net):
    agent = graph_agent(small_graph, budget=1e-6)
    rngs = streams(0)
    for controller in (LearnedController(tiny_net, "TI", 2, 2), RandomController()):
        controller.start_agent(agent, rngs)
        with pytest.raises(BudgetExhausted):
            controller.decide(agent, BeliefState.empty(), [], rngs, 0.4, 0.2)


def test_random_controller_uniform(small_graph):
    agent = graph_agent(small_graph)
    rngs = streams(3)
    decision = RandomController().decide(agent, BeliefState.empty(), [], rngs, 0.4, 0.2)
    assert decision.log_prob == pytest.approx(-np.log(len(small_graph.neighbors(0))))


# --- method labels -------------------------------------------------------------


@pytest.mark.parametrize("label, spec", [
    ("RRT(0.3,0.4)", MethodSpec("RRT", (0.3, 0.4))),
    ("TI(8,5)*", MethodSpec("TI", (8, 5), True)),
    ("DI(8,3)", MethodSpec("DI", (8, 3))),
    ("intent-free", MethodSpec("intent-free")),
    ("random", MethodSpec("random")),
])
def test_parse_method(label, spec):
    assert parse_method(label) == spec
    assert parse_method(label).label == label


@pytest.mark.parametrize("label", ["RRT(0.4,0.3)", "DI(8,5)*", "TI(0,5)", "PPO", "RRT(a,b)"])
def test_parse_method_rejects(label):
    with pytest.raises(MethodSpecError):
        parse_method(label)


def test_registry_builds_planners(tiny_net):
    cfg = ExperimentConfig()
    assert isinstance(build_planner("RRT(0.3,0.4)", cfg), SGAPlanner)
    assert build_planner("RRT(0.3,0.4)", cfg).name == "RRT(0.3,0.4)"
    assert isinstance(build_planner("random", cfg), RandomController)
    assert build_planner("TI(8,5)*", cfg, tiny_net).name == "TI(8,5)*"
    with pytest.raises(MethodSpecError):
        build_planner("TI(8,5)", cfg)
    assert set(registry.list_kinds()) == {"RRT", "DI", "TI", "intent-free", "random"}


CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.slow
def test_shorter_horizons_leave_less_uncertainty():
    cfg = load_config(CONFIGS / "table1_rrt.yaml")
    assert (cfg.episode.m, cfg.episode.budget, cfg.instances, cfg.trials) == (3, 3.0, 30, 10)
    means = [evaluate_variant(None, label, cfg).mean for label in ("RRT(0.3,0.4)", "RRT(0.6,0.7)", "RRT(0.9,1.0)")]
    assert means[0] < means[1] < means[2]
    assert 8.0 <= means[0] <= 34.0


@pytest.mark.slow
def test_shorter_comm_range_leaves_more_uncertainty():
    cfg = load_config(CONFIGS / "comm_ranges.yaml")
    means = []
    for comm_range in cfg.comm_ranges:
        ranged = cfg.model_copy(update={"episode": cfg.episode.model_copy(update={"comm_range": comm_range})})
        means.append(evaluate_variant(None, "RRT(0.3,0.4)", ranged).mean)
    assert cfg.comm_ranges == [0.3, 0.6, math.inf]
    assert means[0] > means[1] > means[2]
