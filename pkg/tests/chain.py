"""Small hand-built MDPs used as oracles for the rollout and LFD tests."""

import numpy as np


class ConstantChain:
    """One action per state, reward 1 per step, never terminal."""

    def initial_state(self, rng):
        return 0

    def actions(self, state):
        return ["go"]

    def step(self, state, action, rng):
        return state + 1, 1.0


class Chain10:
    """Ten states on a line, state 9 is terminal.

    ``right`` moves up with probability 0.7 and otherwise stays; ``left``
    moves down with probability 0.8 and otherwise moves up. The reward is
    the index of the state entered, divided by ten.
    """

    N = 10
    ACTIONS = ("left", "right")

    def initial_state(self, rng):
        return 0

    def actions(self, state):
        return [] if state == self.N - 1 else list(self.ACTIONS)

    def transitions(self, s, a):
        up = min(s + 1, self.N - 1)
        down = max(s - 1, 0)
        if a == "right":
            return [(0.7, up), (0.3, s)]
        return [(0.8, down), (0.2, up)]

    def step(self, state, action, rng):
        u = rng.random()
        acc = 0.0
        for prob, nxt in self.transitions(state, action):
            acc += prob
            if u < acc:
                return nxt, nxt / 10.0
        return nxt, nxt / 10.0


def chain_policy(state, rng):
    return "right" if rng.random() < 0.6 else "left"


CHAIN_POLICY_PROBS = {"right": 0.6, "left": 0.4}


def exact_truncated(env, gamma, T):
    """Mean and variance of the T-step return of (s, a) then ``chain_policy``.

    Dynamic programming over first and second moments; terminal states
    contribute nothing further.
    """
    n = env.N
    v1 = np.zeros(n)  # first moment of the k-step return under the policy
    v2 = np.zeros(n)

    def q(s, a, w1, w2):
        m1 = m2 = 0.0
        for prob, nxt in env.transitions(s, a):
            r = nxt / 10.0
            m1 += prob * (r + gamma * w1[nxt])
            m2 += prob * (r * r + 2 * gamma * r * w1[nxt] + gamma * gamma * w2[nxt])
        return m1, m2

    for _ in range(T - 1):
        n1, n2 = np.zeros(n), np.zeros(n)
        for s in range(n - 1):
            for a, pa in CHAIN_POLICY_PROBS.items():
                m1, m2 = q(s, a, v1, v2)
                n1[s] += pa * m1
                n2[s] += pa * m2
        v1, v2 = n1, n2
    out = {}
    for s in range(n - 1):
        for a in env.ACTIONS:
            m1, m2 = q(s, a, v1, v2)
            out[s, a] = (m1, m2 - m1 * m1)
    return out


class ArgmaxFeatureEnv:
    """Non-terminating environment whose best action (by reward) also has the
    strictly largest first feature; the remaining features are constant."""

    n_features = 8

    def initial_state(self, rng):
        return 0

    def actions(self, state):
        return [0, 1, 2, 3]

    def action_features(self, state):
        feats = np.ones((4, self.n_features))
        feats[:, 0] = [0.0, 1.0, 2.0, 3.0]
        return [0, 1, 2, 3], feats, np.array([0.0, 1.0, 2.0, 3.0])

    def step(self, state, action, rng):
        return state + 1, float(action)
