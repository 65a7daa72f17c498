import math

import numpy as np
import pytest

from ipse.learner import (
    VARIANTS,
    LearnerConfig,
    MLearner,
    lambda_schedule,
    run_ipse,
    run_variant,
    window_size,
    with_variant,
)
from ipse.lfd import LfdConfig
from ipse.rng import SplitMix64
from ipse.rollout import RolloutConfig
from ipse.tetris import CallMeter, TetrisEnv

BUDGET = 34 * 10 * 10 + 34


def test_window_size_examples():
    assert window_size(1) == 2
    assert window_size(10) == 7
    assert window_size(196) == 100
    assert window_size(1000) == 100
    with pytest.raises(ValueError):
        window_size(0)


def test_lambda_schedule():
    assert lambda_schedule(1, 5) == 5
    assert lambda_schedule(50, 5) == 0.1
    k = np.arange(1, 10**6 + 1)
    lam = 5.0 / k
    assert np.all(np.diff(lam) < 0)
    with pytest.raises(ValueError):
        lambda_schedule(0)


def test_config_validation():
    with pytest.raises(ValueError):
        LearnerConfig(variant="cbmpi")
    with pytest.raises(ValueError):
        LearnerConfig(total_iterations=0)
    with pytest.raises(ValueError):
        LearnerConfig(window_cap=1)


class OneShot:
    """Every action ends the episode."""

    n_features = 8

    def initial_state(self, rng):
        return "start"

    def actions(self, state):
        return [] if state == "end" else [0, 1, 2]

    def action_features(self, state):
        return [0, 1, 2], np.arange(24, dtype=float).reshape(3, 8), np.zeros(3)

    def step(self, state, action, rng):
        return "end", 0.0


def test_terminal_successor_leaves_learner_unchanged():
    cfg = LearnerConfig("m_stew_schedule", RolloutConfig(2, 2), total_iterations=5)
    learner = MLearner(OneShot(), cfg)
    state = "start"
    for _ in range(5):
        state, info = learner.iteration(state, SplitMix64(1), CallMeter())
        assert info["terminal"] and state == "start"
    assert len(learner.dataset) == 0
    assert np.all(learner.beta == 0)


def _cfg(variant, iters=40, **kw):
    return LearnerConfig(variant, RolloutConfig(10, 10), total_iterations=iters, eval_every=0, **kw)


@pytest.mark.parametrize("variant", ["m_unregularized", "m_stew_schedule", "m_stew_known_directions",
                                     "m_stew_cv"])
def test_m_learning_trace_invariants(variant):
    trace = run_variant(_cfg(variant, 30), TetrisEnv(), SplitMix64(5))
    assert len(trace.rows) == 30
    k = 0
    for row in trace.rows:
        assert row.phase == "M"
        assert row.meter_delta <= BUDGET
        if not row.terminal and row.n_actions >= 2:
            k += 1
            assert row.window == min(k, window_size(k))
            if variant == "m_stew_schedule":
                assert row.lam == lambda_schedule(k)
            if variant == "m_unregularized":
                assert row.lam == 0.0
        assert all(math.isfinite(w) for w in row.weights)


def test_first_iteration_rollout_policy_is_zero_weights():
    trace = run_variant(_cfg("m_unregularized", 1), TetrisEnv(), SplitMix64(5))
    assert trace.rows[0].window == 1 or trace.rows[0].terminal


@pytest.mark.parametrize("variant", VARIANTS)
def test_identical_seeds_identical_traces(variant):
    cfg = _cfg(variant, 12)
    a = run_variant(cfg, TetrisEnv(), SplitMix64(9))
    b = run_variant(cfg, TetrisEnv(), SplitMix64(9))
    assert repr(a.rows) == repr(b.rows)


def test_run_ipse_requires_ipse_variant():
    with pytest.raises(ValueError):
        run_ipse(_cfg("lfd_only"), TetrisEnv(), SplitMix64(0))


@pytest.fixture(scope="module")
def ipse_trace():
    return run_ipse(_cfg("ipse", 150), TetrisEnv(), SplitMix64(31), CallMeter())


def test_ipse_switches_once(ipse_trace):
    t0 = ipse_trace.transition_iteration
    assert t0 is not None and 10 <= t0 <= 200
    phases = [r.phase for r in ipse_trace.rows]
    assert phases == ["LFD"] * t0 + ["M"] * (len(phases) - t0)


def test_ipse_directions_fixed_in_phase_two(ipse_trace):
    d = np.array(ipse_trace.direction_state.directions)
    assert np.all(d != 0)
    last_lfd = ipse_trace.rows[ipse_trace.transition_iteration - 1]
    assert np.array_equal(np.array(last_lfd.weights), d)


def test_ipse_phase_one_weights_are_directions(ipse_trace):
    prev = np.zeros(8)
    for r in ipse_trace.rows[: ipse_trace.transition_iteration]:
        w = np.array(r.weights)
        assert set(w) <= {-1.0, 0.0, 1.0}
        assert np.all((prev == 0) | (w == prev))
        prev = w


def test_ipse_lambda_decreases_and_k_restarts(ipse_trace):
    m_rows = [r for r in ipse_trace.rows if r.phase == "M" and not r.terminal]
    lams = [r.lam for r in m_rows]
    assert lams[0] == 5.0
    assert all(b < a for a, b in zip(lams, lams[1:]))
    assert [r.window for r in m_rows[:5]] == [1, 2, 3, 4, 4]


def test_ipse_weights_stay_near_directions_after_switch(ipse_trace):
    d = np.array(ipse_trace.direction_state.directions, dtype=float)
    m_rows = [r for r in ipse_trace.rows if r.phase == "M"][:5]
    for r in m_rows:
        beta = np.array(r.weights)
        cs = np.linspace(0.01, 2 * np.max(np.abs(beta)) + 1, 4001)
        dist = min(np.max(np.abs(beta - c * d)) for c in cs)
        assert dist / np.max(np.abs(beta)) < 0.25


def test_ipse_budget(ipse_trace):
    assert all(r.meter_delta <= BUDGET for r in ipse_trace.rows)


def test_lfd_only_keeps_acting_after_decision():
    trace = run_variant(_cfg("lfd_only", 150), TetrisEnv(), SplitMix64(31))
    assert len(trace.rows) == 150
    assert all(r.phase == "LFD" for r in trace.rows)
    t0 = trace.transition_iteration
    assert t0 is not None
    final = trace.rows[-1].weights
    assert all(r.weights == final for r in trace.rows[t0 - 1:])


def test_lfd_cap_aborts():
    cfg = _cfg("ipse", 20, lfd_cfg=LfdConfig(0.05, True, 3))
    trace = run_variant(cfg, TetrisEnv(), SplitMix64(0))
    assert trace.aborted and len(trace.rows) == 3


def test_with_variant():
    assert with_variant(_cfg("ipse"), "lfd_only").variant == "lfd_only"


def test_evaluator_called_on_schedule():
    calls = []

    def evaluator(it, w):
        calls.append(it)
        return it

    cfg = LearnerConfig("m_stew_schedule", RolloutConfig(2, 2), total_iterations=10, eval_every=5)
    trace = run_variant(cfg, TetrisEnv(), SplitMix64(0), evaluator=evaluator)
    assert calls == [0, 5, 10]
    assert [it for it, _ in trace.curve()] == [0, 5, 10]
