"""Experiment orchestration: seeded replications, evaluation and CSV output.

Seeding rule. For variant ``v`` and replication ``r`` the replication seed is

    s = derive(derive(master_seed, stable_id(v)), r)

The learner draws from ``SplitMix64(derive(s, 0))``; the evaluation at
iteration ``i`` uses the game seed ``derive(derive(s, 1), i)``. A
replication therefore depends only on ``(master_seed, v, r)``, regardless of
which other variants or replications run or in which process.
"""

import csv
import io
import logging
import os
from dataclasses import dataclass, field, fields
from multiprocessing import Pool

import numpy as np

from . import kernel
from .features import FEATURE_NAMES
from .learner import VARIANTS, LearnerConfig, run_variant
from .lfd import LfdConfig
from .rng import SplitMix64, derive, stable_id
from .rollout import RolloutConfig
from .tetris import HEIGHT, WIDTH, CallMeter, TetrisEnv

log = logging.getLogger(__name__)

ROWS_WITH_HOLES = FEATURE_NAMES.index("rows_with_holes")


@dataclass(frozen=True)
class EvaluationResult:
    mean_score: float
    std_score: float
    games: int
    capped_games: int = 0


def evaluate_policy(weights, games, rng, step_cap=10**6, width=WIDTH, height=HEIGHT):
    """Mean lines cleared by the greedy policy over ``games`` fresh games.

    ``rng`` is a :class:`SplitMix64` (one draw is consumed) or an integer
    seed. No learning meter is charged.
    """
    if games < 1:
        raise ValueError("games must be at least 1")
    seed = rng if isinstance(rng, int) else rng.next_u64()
    scores, capped, _ = kernel.play_games(
        width, height, [float(w) for w in weights], False, games, step_cap, seed
    )
    s = np.asarray(scores, dtype=float)
    return EvaluationResult(float(s.mean()), float(s.std()), games, int(sum(capped)))


def rescale_weights_for_report(beta):
    """Scale weights so that |rows_with_holes| = 1. Returns ``(beta, ok)``;
    with a zero normaliser the weights come back unscaled and ``ok`` False."""
    beta = np.asarray(beta, dtype=float)
    norm = abs(beta[ROWS_WITH_HOLES])
    if norm == 0:
        return beta.copy(), False
    return beta / norm, True


@dataclass
class ExperimentConfig:
    variants: tuple = VARIANTS
    replications: int = 20
    master_seed: int = 0
    parallel: int = 1
    output_dir: str = "results"
    total_iterations: int = 400
    eval_every: int = 20
    eval_games: int = 30
    eval_step_cap: int = 10**6
    M: int = 10
    T: int = 10
    gamma: float = 0.9
    alpha: float = 0.05
    use_alternative_rollout_policy: bool = True
    lfd_max_iterations: int = 5000
    schedule_c: float = 5.0
    window_cap: int = 100
    filter_dominated: bool = False
    cv_folds: int = 5
    width: int = WIDTH
    height: int = HEIGHT

    def __post_init__(self):
        if isinstance(self.variants, str):
            self.variants = tuple(v.strip() for v in self.variants.split(",") if v.strip())
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad:
            raise ValueError(f"unknown variants: {', '.join(bad)}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.eval_games < 1:
            raise ValueError("eval_games must be at least 1")

    def learner_config(self, variant):
        return LearnerConfig(
            variant=variant,
            rollout_cfg=RolloutConfig(self.M, self.T, self.gamma),
            lfd_cfg=LfdConfig(self.alpha, self.use_alternative_rollout_policy,
                              self.lfd_max_iterations),
            schedule_c=self.schedule_c,
            window_cap=self.window_cap,
            total_iterations=self.total_iterations,
            eval_every=self.eval_every,
            eval_games=self.eval_games,
            filter_dominated=self.filter_dominated,
            cv_folds=self.cv_folds,
        )


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def parse_config(text):
    """Parse flat ``key = value`` lines (``#`` comments) into ExperimentConfig.

    Unknown keys fail fast with the full list of offenders.
    """
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values = {}
    unknown = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in types:
            unknown.append(key)
            continue
        values[key] = _convert(key, val, types[key])
    if unknown:
        raise ValueError(f"invalid config keys: {', '.join(unknown)}")
    return ExperimentConfig(**values)


def _convert(key, val, typ):
    if typ is bool or typ == "bool":
        try:
            return _BOOL[val.lower()]
        except KeyError:
            raise ValueError(f"{key}: expected a boolean, got {val!r}") from None
    if typ is int or typ == "int":
        return int(float(val)) if "e" in val.lower() else int(val)
    if typ is float or typ == "float":
        return float(val)
    if key == "variants":
        return val
    return val


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def replication_seed(master_seed, variant, replication):
    return derive(derive(master_seed, stable_id(variant)), replication)


@dataclass
class ReplicationResult:
    variant: str
    replication: int
    trace: object
    meter_total: int = 0
    aborted: bool = False


def run_replication(config, variant, replication):
    seed = replication_seed(config.master_seed, variant, replication)
    rng = SplitMix64(derive(seed, 0))
    eval_base = derive(seed, 1)
    env = TetrisEnv(config.width, config.height)
    lcfg = config.learner_config(variant)

    def evaluator(iteration, weights):
        return evaluate_policy(weights, config.eval_games, derive(eval_base, iteration),
                               config.eval_step_cap, config.width, config.height)

    meter = CallMeter()
    trace = run_variant(lcfg, env, rng, meter, evaluator)
    return ReplicationResult(variant, replication, trace, meter.calls, trace.aborted)


def _run_job(args):
    return run_replication(*args)


LEARNING_CURVE_HEADER = ["variant", "replication", "iteration", "phase", "mean_score",
                         "std_score", "games", "capped_games"]
WEIGHTS_HEADER = (["variant", "replication", "iteration", "phase", "lambda"]
                  + [f"beta_{n}" for n in FEATURE_NAMES] + ["rescaled_flag"])
DIRECTIONS_HEADER = ["variant", "replication", "feature", "direction", "decided_at_iteration",
                     "n_plus", "n_minus"]
METER_HEADER = ["variant", "replication", "iteration", "generative_calls"]
TRACE_HEADER = (["iteration", "phase", "lambda", "window", "generative_calls", "terminal",
                 "n_actions", "fit_converged", "fit_capped"]
                + [f"w_{n}" for n in FEATURE_NAMES] + ["mean_score"])
AGGREGATE_HEADER = ["variant", "iteration", "mean_score", "replications"]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def curve_rows(res):
    out = []
    tr = res.trace
    phases = {r.iteration: r.phase for r in tr.rows}
    for it, ev in tr.curve():
        phase = phases.get(it, "LFD" if tr.variant in ("ipse", "lfd_only") else "M")
        out.append([res.variant, res.replication, it, phase, ev.mean_score, ev.std_score,
                    ev.games, ev.capped_games])
    return out


def weight_rows(res):
    out = []
    for r in res.trace.rows:
        scaled, ok = rescale_weights_for_report(r.weights)
        out.append([res.variant, res.replication, r.iteration, r.phase, r.lam, *scaled, ok])
    return out


def direction_rows(res):
    ds = res.trace.direction_state
    if ds is None:
        return []
    return [
        [res.variant, res.replication, name, int(ds.directions[i]), int(ds.decided_at[i]),
         int(ds.n_plus[i]), int(ds.n_minus[i])]
        for i, name in enumerate(FEATURE_NAMES)
    ]


def meter_rows(res):
    return [[res.variant, res.replication, r.iteration, r.meter_delta] for r in res.trace.rows]


def trace_rows(res):
    out = []
    for r in res.trace.rows:
        score = r.evaluation.mean_score if r.evaluation is not None else None
        out.append([r.iteration, r.phase, r.lam, r.window, r.meter_delta, r.terminal,
                    r.n_actions, r.fit_converged, r.fit_capped, *r.weights, score])
    return out


def aggregate_curves(curve):
    """Pointwise mean of replication curves per (variant, iteration)."""
    groups = {}
    for variant, _, it, _, mean, *_ in curve:
        groups.setdefault((variant, it), []).append(mean)
    return [[v, it, float(np.mean(vals)), len(vals)] for (v, it), vals in groups.items()]


@dataclass
class ExperimentSummary:
    results: list = field(default_factory=list)
    aborted: list = field(default_factory=list)
    files: list = field(default_factory=list)


def run_experiment(config):
    """Run every (variant, replication) and write the CSV files.

    Output layout below ``config.output_dir``: ``learning_curve.csv``,
    ``weights.csv``, ``directions.csv``, ``meter.csv``,
    ``aggregate_curve.csv`` and one ``traces/<variant>_rep<r>.csv`` per run.
    """
    out = config.output_dir
    os.makedirs(os.path.join(out, "traces"), exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out!r} is not writable")
    jobs = [(config, v, r) for v in config.variants for r in range(config.replications)]
    if config.parallel > 1 and len(jobs) > 1:
        with Pool(min(config.parallel, len(jobs))) as pool:
            results = pool.map(_run_job, jobs, chunksize=1)
    else:
        results = []
        for job in jobs:
            log.info("running %s replication %d", job[1], job[2])
            results.append(_run_job(job))
    summary = ExperimentSummary(results)
    curve, weights, dirs, meter = [], [], [], []
    for res in results:
        curve += curve_rows(res)
        weights += weight_rows(res)
        dirs += direction_rows(res)
        meter += meter_rows(res)
        if res.aborted:
            summary.aborted.append((res.variant, res.replication))
        path = os.path.join(out, "traces", f"{res.variant}_rep{res.replication}.csv")
        _write_csv(path, TRACE_HEADER, trace_rows(res))
        summary.files.append(path)
    for name, header, rows in (
        ("learning_curve.csv", LEARNING_CURVE_HEADER, curve),
        ("weights.csv", WEIGHTS_HEADER, weights),
        ("directions.csv", DIRECTIONS_HEADER, dirs),
        ("meter.csv", METER_HEADER, meter),
        ("aggregate_curve.csv", AGGREGATE_HEADER, aggregate_curves(curve)),
    ):
        path = os.path.join(out, name)
        _write_csv(path, header, rows)
        summary.files.append(path)
    return summary


def directions_csv(rows_by_replication, variant="lfd_only"):
    """Render direction rows as CSV text (used by the ``lfd`` command)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIRECTIONS_HEADER)
    for r, ds in rows_by_replication:
        for i, name in enumerate(FEATURE_NAMES):
            w.writerow([variant, r, name, int(ds.directions[i]), int(ds.decided_at[i]),
                        int(ds.n_plus[i]), int(ds.n_minus[i])])
    return buf.getvalue()
