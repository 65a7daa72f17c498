"""Conditional-logit policy estimation with shrinkage penalties.

A choice set holds the feature vectors of every available action and the
index of the action picked by the rollouts. The negative log-likelihood of a
weight vector ``beta`` is

    sum over sets of  log sum_a exp(beta . phi_a) - beta . phi_chosen

and is minimised together with one of the quadratic penalties below by a
damped Newton method.
"""

from dataclasses import dataclass

import numpy as np

from .rollout import LinearPolicy, TerminalState

PENALTY_KINDS = ("none", "stew_directed", "shrink_to_directions")
DEFAULT_LAMBDA_GRID = tuple(np.logspace(-3, 2, 11))


@dataclass(frozen=True)
class ChoiceSet:
    chosen_index: int
    alternatives: np.ndarray

    def __post_init__(self):
        alt = np.asarray(self.alternatives, dtype=float)
        if alt.ndim != 2 or len(alt) < 2:
            raise ValueError("a choice set needs at least two alternatives")
        if not 0 <= self.chosen_index < len(alt):
            raise ValueError("chosen index out of range")
        object.__setattr__(self, "alternatives", alt)

    @property
    def chosen(self):
        return self.alternatives[self.chosen_index]


class ChoiceDataset:
    """Choice sets in the order they were collected."""

    def __init__(self, sets=()):
        self._sets = list(sets)

    def append(self, choice_set):
        self._sets.append(choice_set)

    def window(self, n):
        """The ``n`` most recent sets (fewer if the dataset is shorter)."""
        if n < 1:
            raise ValueError("window must be positive")
        return self._sets[-n:]

    def __len__(self):
        return len(self._sets)

    def __iter__(self):
        return iter(self._sets)

    def __getitem__(self, i):
        return self._sets[i]


@dataclass(frozen=True)
class PenaltySpec:
    kind: str = "none"
    lam: float = 0.0
    directions: tuple = None

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.kind != "none":
            if self.directions is None:
                raise ValueError(f"penalty {self.kind!r} requires directions")
            d = tuple(int(v) for v in self.directions)
            if any(v not in (-1, 1) for v in d):
                raise ValueError("directions must be +1 or -1")
            object.__setattr__(self, "directions", d)

    def with_lambda(self, lam):
        return PenaltySpec(self.kind, float(lam), self.directions)


class _Packed:
    """All alternatives stacked into one matrix for vectorised evaluation."""

    def __init__(self, sets):
        if len(sets) == 0:
            raise ValueError("empty choice data")
        self.X = np.vstack([s.alternatives for s in sets])
        sizes = np.array([len(s.alternatives) for s in sets])
        self.starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        self.owner = np.repeat(np.arange(len(sets)), sizes)
        self.chosen_rows = self.starts + np.array([s.chosen_index for s in sets])
        self.chosen_sum = self.X[self.chosen_rows].sum(axis=0)

    def evaluate(self, beta, order=2):
        u = self.X @ beta
        umax = np.maximum.reduceat(u, self.starts)
        e = np.exp(u - umax[self.owner])
        tot = np.add.reduceat(e, self.starts)
        value = float(np.sum(umax + np.log(tot)) - np.sum(u[self.chosen_rows]))
        if order == 0:
            return value
        prob = e / tot[self.owner]
        grad = self.X.T @ prob - self.chosen_sum
        if order == 1:
            return value, grad
        means = np.add.reduceat(prob[:, None] * self.X, self.starts)
        hess = (self.X.T * prob) @ self.X - means.T @ means
        return value, grad, hess


def nll_and_gradient(beta, sets):
    return _Packed(sets).evaluate(np.asarray(beta, dtype=float), order=1)


def _penalty_matrix(spec, p):
    """Symmetric A with penalty = lambda * (b - c)' A (b - c)."""
    if spec.kind == "none" or spec.lam == 0.0:
        return np.zeros((p, p)), np.zeros(p)
    d = np.asarray(spec.directions, dtype=float)
    if len(d) != p:
        raise ValueError("directions length does not match the feature count")
    if spec.kind == "stew_directed":
        lap = p * np.eye(p) - np.ones((p, p))
        return d[:, None] * lap * d[None, :], np.zeros(p)
    return np.eye(p), d


def penalty_and_gradient(beta, spec):
    beta = np.asarray(beta, dtype=float)
    a, center = _penalty_matrix(spec, len(beta))
    r = beta - center
    return float(spec.lam * r @ a @ r), 2.0 * spec.lam * (a @ r)


@dataclass
class FitResult:
    beta: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    capped: bool = False
    objective: float = float("nan")


def fit(sets, spec, beta_init=None, tol=1e-6, max_iter=500, beta_cap=1e3):
    """Minimise NLL + penalty by Newton steps with step halving.

    Stops at gradient norm <= ``tol`` or ``max_iter`` iterations. If the
    iterate would leave the box ``|beta_i| <= beta_cap`` (separable data
    without a penalty) it is clipped and flagged.
    """
    data = sets if isinstance(sets, _Packed) else _Packed(sets)
    p = data.X.shape[1]
    a, center = _penalty_matrix(spec, p)
    lam = spec.lam if spec.kind != "none" else 0.0
    beta = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=float)

    def objective(b, order):
        r = b - center
        pen = lam * r @ a @ r
        if order == 0:
            return data.evaluate(b, 0) + pen
        v, g, h = data.evaluate(b, 2)
        return v + pen, g + 2 * lam * (a @ r), h + 2 * lam * a

    f, g, h = objective(beta, 2)
    gnorm = float(np.linalg.norm(g))
    it = 0
    capped = False
    while gnorm > tol and it < max_iter:
        it += 1
        step = _newton_direction(h, g)
        slope = float(g @ step)
        cand = beta + step
        if -slope > 1e-12 * (1.0 + abs(f)):
            t = 1.0
            for _ in range(60):
                if objective(cand, 0) <= f + 1e-4 * t * slope:
                    break
                t *= 0.5
                cand = beta + t * step
            else:
                break
        # otherwise the predicted decrease is below rounding: take the full step
        if np.max(np.abs(cand)) > beta_cap:
            beta = np.clip(cand, -beta_cap, beta_cap)
            f, g, h = objective(beta, 2)
            gnorm = float(np.linalg.norm(g))
            capped = True
            break
        beta = cand
        f, g, h = objective(beta, 2)
        gnorm = float(np.linalg.norm(g))
    return FitResult(beta, gnorm <= tol, it, gnorm, capped, float(f))


def _newton_direction(h, g):
    # Levenberg-style damping when the Hessian is singular (few choice sets)
    scale = max(1.0, float(np.max(np.abs(np.diag(h)))))
    tau = 0.0
    eye = np.eye(len(g))
    for _ in range(30):
        try:
            c = np.linalg.cholesky(h + tau * eye)
        except np.linalg.LinAlgError:
            tau = max(2 * tau, 1e-10 * scale)
            continue
        step = -np.linalg.solve(c.T, np.linalg.solve(c, g))
        if np.all(np.isfinite(step)) and g @ step < 0:
            return step
        tau = max(2 * tau, 1e-10 * scale)
    return -g


def cross_validate_lambda(sets, spec_template, grid=DEFAULT_LAMBDA_GRID, folds=5, rng=None,
                          beta_init=None):
    """Grid value with the smallest mean held-out NLL (ties: larger lambda).

    Sets are assigned to folds by a random permutation drawn from ``rng``.
    With fewer sets than folds the largest grid value is returned.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("empty lambda grid")
    if folds < 2:
        raise ValueError("cross-validation needs at least two folds")
    if len(grid) == 1:
        return grid[0]
    n = len(sets)
    if n < folds:
        return max(grid)
    if rng is None:
        perm = np.arange(n)
    elif hasattr(rng, "permutation"):
        perm = rng.permutation(n)
    else:
        perm = rng.numpy().permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[perm] = np.arange(n) % folds
    splits = [
        (_Packed([s for s, f in zip(sets, assignment) if f != k]),
         _Packed([s for s, f in zip(sets, assignment) if f == k]))
        for k in range(folds)
    ]
    scores = []
    for lam in grid:
        spec = spec_template.with_lambda(lam)
        held = sum(test.evaluate(fit(train, spec, beta_init).beta, 0) for train, test in splits)
        scores.append(held / n)
    best = min(scores)
    return max(lam for lam, s in zip(grid, scores) if s == best)


def greedy_policy_action(beta, state, rng, env):
    actions = env.actions(state)
    if not actions:
        raise TerminalState("no legal action")
    return LinearPolicy(env, beta)(state, rng)
