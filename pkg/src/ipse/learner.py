"""Online rollout learners: M-learning variants, standalone LFD and IPSE.

Every iteration evaluates the actions of the current state by rollouts,
takes the best one and, unless the successor is terminal, learns from the
decision. Terminal successors reset the episode.

IPSE runs LFD until every direction is decided, then switches to M-learning
with a STEW penalty centred on the learned directions and a decreasing
regularisation schedule ``lambda_k = c / k``. The M-learning counter ``k``
(number of collected choice sets) restarts at the switch.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .choice import (
    DEFAULT_LAMBDA_GRID,
    ChoiceDataset,
    ChoiceSet,
    PenaltySpec,
    cross_validate_lambda,
    fit,
)
from .features import BCTS_DIRECTIONS
from .lfd import DirectionState, LfdConfig, lfd_iteration
from .rollout import LinearPolicy, RolloutConfig, dominance_filter, rollout_argmax
from .tetris import CallMeter

VARIANTS = (
    "m_unregularized",
    "m_stew_cv",
    "m_stew_schedule",
    "m_stew_known_directions",
    "lfd_only",
    "ipse",
)


def window_size(k, cap=100):
    if k < 1:
        raise ValueError("k must be at least 1")
    return min(cap, k // 2 + 2)


def lambda_schedule(k, c=5.0):
    if k < 1 or c <= 0:
        raise ValueError("need k >= 1 and c > 0")
    return c / k


@dataclass(frozen=True)
class LearnerConfig:
    variant: str = "ipse"
    rollout_cfg: RolloutConfig = field(default_factory=RolloutConfig)
    lfd_cfg: LfdConfig = field(default_factory=LfdConfig)
    schedule_c: float = 5.0
    window_cap: int = 100
    total_iterations: int = 400
    eval_every: int = 20
    eval_games: int = 30
    known_directions: tuple = tuple(int(v) for v in BCTS_DIRECTIONS)
    filter_dominated: bool = False
    cv_folds: int = 5
    cv_grid: tuple = DEFAULT_LAMBDA_GRID

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.total_iterations < 1:
            raise ValueError("total_iterations must be at least 1")
        if self.window_cap < 2:
            raise ValueError("window_cap must be at least 2")
        if self.schedule_c <= 0:
            raise ValueError("schedule_c must be positive")


@dataclass
class TraceRow:
    iteration: int
    phase: str  # "LFD" or "M"
    weights: tuple  # directions during LFD, beta during M-learning
    lam: float
    window: int
    meter_delta: int
    terminal: bool
    n_actions: int
    fit_converged: Optional[bool] = None
    fit_capped: bool = False
    evaluation: object = None


@dataclass
class LearningTrace:
    variant: str
    rows: list = field(default_factory=list)
    initial_evaluation: object = None
    transition_iteration: Optional[int] = None  # last LFD iteration (ipse / lfd_only)
    direction_state: Optional[DirectionState] = None
    aborted: bool = False

    def curve(self):
        """``(iteration, EvaluationResult)`` pairs including iteration 0."""
        out = []
        if self.initial_evaluation is not None:
            out.append((0, self.initial_evaluation))
        out.extend((r.iteration, r.evaluation) for r in self.rows if r.evaluation is not None)
        return out


class MLearner:
    """State of one M-learning run: weights, data and the counter ``k``."""

    def __init__(self, env, config, beta=None, directions=None):
        self.env = env
        self.config = config
        p = env.n_features
        self.beta = np.zeros(p) if beta is None else np.asarray(beta, dtype=float).copy()
        self.dataset = ChoiceDataset()
        v = config.variant
        if v == "m_unregularized":
            self.spec = PenaltySpec("none")
        elif v == "m_stew_known_directions":
            self.spec = PenaltySpec("stew_directed", 0.0, tuple(config.known_directions))
        elif v in ("m_stew_cv", "m_stew_schedule"):
            # no prior knowledge: plain STEW, equal (unsigned) weights as centre
            self.spec = PenaltySpec("stew_directed", 0.0, (1,) * p)
        elif v == "ipse":
            if directions is None:
                raise ValueError("ipse M-learning needs learned directions")
            self.spec = PenaltySpec("stew_directed", 0.0, tuple(int(x) for x in directions))
        else:
            raise ValueError(f"variant {v!r} has no M-learning phase")

    @property
    def k(self):
        return len(self.dataset)

    def current_lambda(self, window, rng):
        v = self.config.variant
        if v == "m_unregularized":
            return 0.0
        if v == "m_stew_cv":
            return cross_validate_lambda(
                window, self.spec, self.config.cv_grid, self.config.cv_folds, rng, self.beta
            )
        return lambda_schedule(self.k, self.config.schedule_c)

    def iteration(self, state, rng, meter):
        """One decision + refit. Returns ``(next_state, info)``."""
        before = meter.calls
        env = self.env
        cfg = self.config
        actions, features, _ = env.action_features(state)
        candidates = None
        if cfg.filter_dominated and self.spec.kind != "none" and self.spec.directions:
            candidates = dominance_filter(features, self.spec.directions)
        policy = LinearPolicy(env, self.beta)
        action, estimates = rollout_argmax(
            env, state, policy, cfg.rollout_cfg, rng, meter, candidates=candidates
        )
        chosen = next(e.index for e in estimates if e.action == action)
        nxt, _ = env.step(state, action, rng)
        meter.charge()
        info = {"lam": float("nan"), "window": 0, "converged": None, "capped": False,
                "n_actions": len(actions)}
        if not env.actions(nxt):
            info["terminal"] = True
            info["meter_delta"] = meter.calls - before
            return env.initial_state(rng), info
        info["terminal"] = False
        if len(actions) >= 2:
            self.dataset.append(ChoiceSet(chosen, features))
        if len(self.dataset):
            window = self.dataset.window(window_size(self.k, cfg.window_cap))
            lam = self.current_lambda(window, rng)
            result = fit(window, self.spec.with_lambda(lam), self.beta)
            self.beta = result.beta
            info.update(lam=lam, window=len(window), converged=result.converged,
                        capped=result.capped)
        info["meter_delta"] = meter.calls - before
        return nxt, info


def m_learning_iteration(env, state, learner, rng, meter):
    return learner.iteration(state, rng, meter)


def _evaluate(evaluator, iteration, weights, cfg):
    if evaluator is None or cfg.eval_every <= 0 or iteration % cfg.eval_every:
        return None
    return evaluator(iteration, np.asarray(weights, dtype=float))


def run_variant(config, env, rng, meter=None, evaluator: Callable = None):
    """Run one learner for ``config.total_iterations`` iterations.

    ``evaluator(iteration, weights)`` is called at iteration 0 and every
    ``eval_every`` iterations with a snapshot of the current policy weights;
    it must not touch ``rng`` or ``meter``.
    """
    meter = meter if meter is not None else CallMeter()
    trace = LearningTrace(config.variant)
    if config.variant in ("ipse", "lfd_only"):
        return _run_lfd_based(config, env, rng, meter, evaluator, trace)
    learner = MLearner(env, config)
    trace.initial_evaluation = _evaluate(evaluator, 0, learner.beta, config)
    state = env.initial_state(rng)
    for it in range(1, config.total_iterations + 1):
        state, info = learner.iteration(state, rng, meter)
        trace.rows.append(_m_row(it, learner.beta, info))
        trace.rows[-1].evaluation = _evaluate(evaluator, it, learner.beta, config)
    return trace


def run_ipse(config, env, rng, meter=None, evaluator=None):
    if config.variant != "ipse":
        raise ValueError("run_ipse requires variant 'ipse'")
    return run_variant(config, env, rng, meter, evaluator)


def _m_row(it, beta, info):
    return TraceRow(
        it, "M", tuple(float(b) for b in beta), info["lam"], info["window"],
        info["meter_delta"], info["terminal"], info["n_actions"], info["converged"],
        info["capped"],
    )


def _run_lfd_based(config, env, rng, meter, evaluator, trace):
    dstate = DirectionState.empty(env.n_features)
    trace.direction_state = dstate
    trace.initial_evaluation = _evaluate(evaluator, 0, dstate.directions, config)
    state = env.initial_state(rng)
    learner = None
    cap = config.lfd_cfg.max_iterations
    for it in range(1, config.total_iterations + 1):
        if learner is None:
            decided = dstate.all_decided
            if not decided and it > cap:
                trace.aborted = True
                break
            state, step = lfd_iteration(
                env, state, dstate, config.rollout_cfg, config.lfd_cfg, rng, meter, it,
                update=not decided,
            )
            trace.rows.append(TraceRow(
                it, "LFD", tuple(float(v) for v in dstate.directions), float("nan"), 0,
                step.meter_delta, step.terminal, step.n_actions,
            ))
            weights = dstate.directions
            if not decided and dstate.all_decided:
                trace.transition_iteration = it
                if config.variant == "ipse":
                    learner = MLearner(env, config, beta=dstate.directions,
                                       directions=dstate.directions)
        else:
            state, info = learner.iteration(state, rng, meter)
            trace.rows.append(_m_row(it, learner.beta, info))
            weights = learner.beta
        trace.rows[-1].evaluation = _evaluate(evaluator, it, weights, config)
    return trace


def with_variant(config, variant):
    return replace(config, variant=variant)
