"""Learning feature directions from rollout decisions.

Each decision made by rollouts yields, per feature, a signed training instance
comparing the chosen action with every alternative. A feature receives a
direction once an exact two-sided binomial test on its positive and negative
counts is significant; from then on the direction is frozen.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .rollout import LinearPolicy, RolloutConfig, rollout_argmax


@dataclass(frozen=True)
class LfdConfig:
    alpha: float = 0.05
    use_alternative_rollout_policy: bool = True
    max_iterations: int = 5000

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


def delta_instance(chosen_features, other_features_list, i):
    """sign( sum over alternatives of sign(phi_i(chosen) - phi_i(other)) )."""
    if len(other_features_list) == 0:
        raise ValueError("need at least one alternative")
    total = sum(int(np.sign(chosen_features[i] - f[i])) for f in other_features_list)
    return int(np.sign(total))


def delta_vector(features, chosen_index):
    """All per-feature training instances for one decision, as an int array."""
    x = np.asarray(features, dtype=float)
    diff = np.sign(x[chosen_index] - x)  # chosen row contributes zeros
    return np.sign(diff.sum(axis=0)).astype(int)


def binomial_p_value(n_plus, n_minus):
    """Exact two-sided p-value of H0: P(+) = 1/2."""
    if n_plus < 0 or n_minus < 0:
        raise ValueError("counts must be nonnegative")
    n = n_plus + n_minus
    if n == 0:
        return 1.0
    k = max(n_plus, n_minus)
    term = comb(n, k)
    tail = term
    for j in range(k, n):
        term = term * (n - j) // (j + 1)
        tail += term
    return min(1.0, 2 * tail / 2**n)


@dataclass
class DirectionState:
    n_plus: np.ndarray
    n_minus: np.ndarray
    directions: np.ndarray
    decided_at: np.ndarray  # iteration of decision, 0 while undecided

    @classmethod
    def empty(cls, p):
        z = np.zeros(p, dtype=int)
        return cls(z.copy(), z.copy(), z.copy(), z.copy())

    @property
    def all_decided(self):
        return bool(np.all(self.directions != 0))

    def copy(self):
        return DirectionState(
            self.n_plus.copy(), self.n_minus.copy(), self.directions.copy(), self.decided_at.copy()
        )


def update_directions(state, deltas, alpha, iteration=0):
    """Add one round of training instances to the undecided features.

    Mutates and returns ``state``. Decided features are left untouched.
    """
    for i, delta in enumerate(deltas):
        if state.directions[i] != 0:
            continue
        if delta > 0:
            state.n_plus[i] += 1
        elif delta < 0:
            state.n_minus[i] += 1
        else:
            continue
        if binomial_p_value(int(state.n_plus[i]), int(state.n_minus[i])) < alpha:
            state.directions[i] = 1 if state.n_plus[i] > state.n_minus[i] else -1
            state.decided_at[i] = iteration
    return state


def lfd_policy(env, directions, alternative=True):
    """Rollout policy: greedy on ``d . phi``; the alternative variant first
    prefers the placement with the largest positive immediate reward."""
    return LinearPolicy(env, np.asarray(directions, dtype=float), prefer_reward=alternative)


def lfd_rollout_policy(env, state, directions, rng, alternative=True):
    return lfd_policy(env, directions, alternative)(state, rng)


@dataclass
class LfdStep:
    iteration: int
    terminal: bool
    chosen_index: int
    n_actions: int
    meter_delta: int
    n_plus: tuple
    n_minus: tuple
    directions: tuple


@dataclass
class LfdResult:
    directions: np.ndarray
    iterations_used: int
    trace: list = field(default_factory=list)
    state: object = None
    direction_state: DirectionState = None
    completed: bool = True


def lfd_iteration(env, state, dstate, rollout_cfg, lfd_cfg, rng, meter, iteration,
                  update=True):
    """One decision of the LFD loop; returns ``(next_state, LfdStep)``.

    With ``update=False`` the agent still acts with the current directions but
    no counters change.
    """
    before = meter.calls
    policy = lfd_policy(env, dstate.directions, lfd_cfg.use_alternative_rollout_policy)
    action, estimates = rollout_argmax(env, state, policy, rollout_cfg, rng, meter)
    chosen = next(e.index for e in estimates if e.action == action)
    actions, features, _ = env.action_features(state)
    nxt, _ = env.step(state, action, rng)
    meter.charge()
    terminal = not env.actions(nxt)
    if terminal:
        nxt = env.initial_state(rng)
    elif update:
        update_directions(dstate, delta_vector(features, chosen), lfd_cfg.alpha, iteration)
    row = LfdStep(
        iteration, terminal, chosen, len(actions), meter.calls - before,
        tuple(int(v) for v in dstate.n_plus), tuple(int(v) for v in dstate.n_minus),
        tuple(int(v) for v in dstate.directions),
    )
    return nxt, row


def run_lfd(env, rollout_cfg=None, lfd_cfg=None, rng=None, meter=None, state=None):
    """Learn directions until all are decided or the iteration cap is hit."""
    from .rng import SplitMix64
    from .tetris import CallMeter

    rollout_cfg = rollout_cfg or RolloutConfig()
    lfd_cfg = lfd_cfg or LfdConfig()
    rng = rng if rng is not None else SplitMix64(0)
    meter = meter if meter is not None else CallMeter()
    dstate = DirectionState.empty(env.n_features)
    s = state if state is not None else env.initial_state(rng)
    trace = []
    it = 0
    while not dstate.all_decided:
        if it >= lfd_cfg.max_iterations:
            return LfdResult(dstate.directions.copy(), it, trace, s, dstate, completed=False)
        it += 1
        s, row = lfd_iteration(env, s, dstate, rollout_cfg, lfd_cfg, rng, meter, it)
        trace.append(row)
    return LfdResult(dstate.directions.copy(), it, trace, s, dstate)
