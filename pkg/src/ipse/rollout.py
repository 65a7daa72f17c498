"""Monte-Carlo evaluation of actions by truncated rollouts.

Environments follow a small protocol:

``initial_state(rng)``, ``actions(state)`` (empty when terminal),
``step(state, action, rng) -> (state, reward)`` and, for feature-based
policies, ``action_features(state) -> (actions, features, rewards)``.
An environment may also provide ``rollout_values`` as a compiled fast path
for :class:`LinearPolicy`; it must agree exactly with :func:`rollout`.

Random streams: :func:`rollout_argmax` draws one seed from the caller's
stream, and the rollouts of the action with canonical index ``i`` use the
substream ``derive(seed, i)``. Estimates therefore do not depend on the order
in which actions are evaluated.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from .rng import SplitMix64, derive


class TerminalState(Exception):
    """Raised when an action must be chosen in a state without actions."""


@dataclass(frozen=True)
class RolloutConfig:
    M: int = 10
    T: int = 10
    gamma: float = 0.9

    def __post_init__(self):
        if self.M < 1 or self.T < 1:
            raise ValueError("M and T must be at least 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


@dataclass(frozen=True)
class ActionValueEstimate:
    action: Any
    u_hat: float
    index: int = -1


def argmax_random(values, rng):
    """Index of a maximal entry, uniform among ties (one draw only on ties)."""
    values = list(values)
    if not values:
        raise ValueError("empty value list")
    best = max(values)
    ties = [i for i, v in enumerate(values) if v == best]
    if len(ties) == 1:
        return ties[0]
    return ties[rng.below(len(ties))]


class LinearPolicy:
    """Greedy policy ``argmax_a w . phi(s, a)``.

    With ``prefer_reward`` set, actions with the largest positive immediate
    reward are preferred and the linear score only breaks ties among them.
    """

    def __init__(self, env, weights, prefer_reward=False):
        self.env = env
        self.weights = np.asarray(weights, dtype=float)
        self.prefer_reward = prefer_reward

    def scores(self, features):
        # sequential sum so that rounding matches the compiled kernel
        out = []
        w = [float(x) for x in self.weights]
        for row in features:
            s = 0.0
            for wj, fj in zip(w, row):
                s += wj * float(fj)
            out.append(s)
        return out

    def choose_index(self, features, rewards, rng):
        pool = list(range(len(features)))
        if self.prefer_reward and len(rewards):
            top = max(rewards)
            if top > 0:
                pool = [i for i in pool if rewards[i] == top]
        scores = self.scores([features[i] for i in pool])
        return pool[argmax_random(scores, rng)]

    def __call__(self, state, rng):
        actions, features, rewards = self.env.action_features(state)
        if not actions:
            return None
        return actions[self.choose_index(features, rewards, rng)]


def rollout(env, state, action, policy, cfg, rng, meter=None):
    """Average discounted return of ``cfg.M`` rollouts of length ``cfg.T``.

    The evaluated action's own reward enters undiscounted at t = 0; a rollout
    that reaches a terminal state stops and contributes nothing further.
    """
    total = 0.0
    for _ in range(cfg.M):
        s, r = env.step(state, action, rng)
        if meter is not None:
            meter.charge()
        ret = float(r)
        disc = 1.0
        for _ in range(1, cfg.T):
            if not env.actions(s):
                break
            a = policy(s, rng)
            s, r = env.step(s, a, rng)
            if meter is not None:
                meter.charge()
            disc *= cfg.gamma
            ret += disc * r
        total += ret
    return ActionValueEstimate(action, total / cfg.M)


def rollout_argmax(env, state, policy, cfg, rng, meter=None, candidates=None, fast=True):
    """Evaluate actions by rollouts and pick the best (random tie-break).

    ``candidates`` restricts evaluation to a subset of canonical action
    indices. Returns ``(chosen_action, estimates)``; each estimate records its
    canonical index.
    """
    actions = env.actions(state)
    if not actions:
        raise TerminalState("no legal action; reset the episode")
    indices = list(range(len(actions))) if candidates is None else list(candidates)
    seed = rng.next_u64()
    if fast and isinstance(policy, LinearPolicy) and hasattr(env, "rollout_values"):
        values, calls = env.rollout_values(
            state, indices, policy.weights, policy.prefer_reward, cfg, seed
        )
        if meter is not None:
            meter.charge(calls)
    else:
        values = [
            rollout(env, state, actions[i], policy, cfg, SplitMix64(derive(seed, i)), meter).u_hat
            for i in indices
        ]
    estimates = [ActionValueEstimate(actions[i], float(v), i) for i, v in zip(indices, values)]
    best = argmax_random([e.u_hat for e in estimates], rng)
    return estimates[best].action, estimates


def dominance_filter(features, directions):
    """Indices of actions not dominated under the given feature directions.

    Action ``a`` is dominated when some other action is at least as good on
    every directed feature and strictly better on one.
    """
    d = np.asarray(directions)
    if np.any(d == 0):
        raise ValueError("dominance filtering needs every direction decided")
    x = np.asarray(features, dtype=float) * d
    keep = []
    for i in range(len(x)):
        ge = np.all(x >= x[i], axis=1)
        gt = np.any(x > x[i], axis=1)
        if not np.any(ge & gt):
            keep.append(i)
    return keep
