import csv
import filecmp
import os

import numpy as np
import pytest

from ipse.features import BCTS_DIRECTIONS, BCTS_WEIGHTS, FEATURE_NAMES
from ipse.harness import (
    DIRECTIONS_HEADER,
    LEARNING_CURVE_HEADER,
    METER_HEADER,
    WEIGHTS_HEADER,
    ExperimentConfig,
    evaluate_policy,
    parse_config,
    replication_seed,
    rescale_weights_for_report,
    run_experiment,
    run_replication,
)
from ipse.rng import SplitMix64

SMALL = """\
# tiny experiment
variants = m_stew_schedule, ipse
replications = 3
master_seed = 17
total_iterations = 12
eval_every = 6
eval_games = 2
eval_step_cap = 2000
M = 3
T = 4
"""


def test_zero_weights_play_badly():
    assert evaluate_policy(np.zeros(8), 30, 1).mean_score < 5


def test_evaluation_deterministic_per_seed():
    a = evaluate_policy(BCTS_DIRECTIONS, 5, 3, step_cap=5000)
    b = evaluate_policy(BCTS_DIRECTIONS, 5, 3, step_cap=5000)
    assert a == b
    rng1, rng2 = SplitMix64(8), SplitMix64(8)
    assert evaluate_policy(BCTS_DIRECTIONS, 3, rng1) == evaluate_policy(BCTS_DIRECTIONS, 3, rng2)


def test_negated_directions_do_worse():
    good = evaluate_policy(BCTS_DIRECTIONS, 10, 4, step_cap=20_000).mean_score
    bad = evaluate_policy(-np.asarray(BCTS_DIRECTIONS), 10, 4, step_cap=20_000).mean_score
    assert bad <= good


def test_step_cap_flags_games():
    res = evaluate_policy(BCTS_WEIGHTS, 3, 0, step_cap=50)
    assert res.capped_games == 3


def test_evaluation_rejects_no_games():
    with pytest.raises(ValueError):
        evaluate_policy(np.zeros(8), 0, 0)


def test_rescale():
    beta = np.arange(1.0, 9.0)
    beta[-1] = -4.0
    scaled, ok = rescale_weights_for_report(beta)
    assert ok and scaled[-1] == -1.0 and scaled[0] == 0.25
    beta[-1] = 0.0
    same, ok = rescale_weights_for_report(beta)
    assert not ok and np.array_equal(same, beta)


def test_parse_config():
    cfg = parse_config(SMALL)
    assert cfg.variants == ("m_stew_schedule", "ipse")
    assert cfg.replications == 3 and cfg.M == 3 and cfg.gamma == 0.9
    assert parse_config("filter_dominated = yes").filter_dominated is True


def test_parse_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="colour, speed"):
        parse_config("colour = red\nM = 3\nspeed = 2\n")
    with pytest.raises(ValueError):
        parse_config("M 3")
    with pytest.raises(ValueError):
        parse_config("variants = m_unregularized, cbmpi")
    with pytest.raises(ValueError):
        parse_config("use_alternative_rollout_policy = maybe")


def test_replication_seed_independent_of_other_runs():
    assert replication_seed(1, "ipse", 0) != replication_seed(1, "ipse", 1)
    assert replication_seed(1, "ipse", 0) != replication_seed(1, "lfd_only", 0)
    cfg_a = parse_config(SMALL)
    cfg_b = parse_config(SMALL.replace("m_stew_schedule, ipse", "ipse"))
    ra, rb = run_replication(cfg_a, "ipse", 1), run_replication(cfg_b, "ipse", 1)
    assert repr(ra.trace.rows) == repr(rb.trace.rows)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = parse_config(SMALL)
    cfg.output_dir = str(out)
    return cfg, run_experiment(cfg)


def test_output_files(experiment):
    cfg, summary = experiment
    out = cfg.output_dir
    traces = sorted(os.listdir(os.path.join(out, "traces")))
    assert traces == [f"{v}_rep{r}.csv" for v in ("ipse", "m_stew_schedule") for r in range(3)]
    assert _read(os.path.join(out, "learning_curve.csv"))[0] == LEARNING_CURVE_HEADER
    assert _read(os.path.join(out, "weights.csv"))[0] == WEIGHTS_HEADER
    assert _read(os.path.join(out, "directions.csv"))[0] == DIRECTIONS_HEADER
    assert _read(os.path.join(out, "meter.csv"))[0] == METER_HEADER
    assert WEIGHTS_HEADER[5:13] == [f"beta_{n}" for n in FEATURE_NAMES]


def test_curve_rows(experiment):
    cfg, _ = experiment
    rows = _read(os.path.join(cfg.output_dir, "learning_curve.csv"))[1:]
    assert len(rows) == 2 * 3 * 3  # iterations 0, 6, 12
    assert {r[2] for r in rows} == {"0", "6", "12"}
    assert all(int(r[6]) == 2 for r in rows)


def test_meter_bound(experiment):
    cfg, _ = experiment
    rows = _read(os.path.join(cfg.output_dir, "meter.csv"))[1:]
    assert len(rows) == 2 * 3 * 12
    assert all(int(r[3]) <= 34 * cfg.T * cfg.M + 34 for r in rows)
    total = sum(int(r[3]) for r in rows)
    assert total <= 2 * 3 * cfg.total_iterations * (34 * cfg.T * cfg.M + 34)


def test_directions_only_for_lfd_variants(experiment):
    cfg, _ = experiment
    rows = _read(os.path.join(cfg.output_dir, "directions.csv"))[1:]
    assert {r[0] for r in rows} <= {"ipse"}
    assert len(rows) in (0, 8, 16, 24)


def test_byte_identical_rerun(experiment, tmp_path):
    cfg, summary = experiment
    cfg2 = parse_config(SMALL)
    cfg2.output_dir = str(tmp_path)
    cfg2.parallel = 2
    summary2 = run_experiment(cfg2)
    for a, b in zip(summary.files, summary2.files):
        assert os.path.basename(a) == os.path.basename(b)
        assert filecmp.cmp(a, b, shallow=False), a


def test_unwritable_output(tmp_path):
    target = tmp_path / "file"
    target.write_text("")
    cfg = parse_config(SMALL)
    cfg.output_dir = str(target / "sub")
    with pytest.raises(OSError):
        run_experiment(cfg)


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(replications=0)
    with pytest.raises(ValueError):
        ExperimentConfig(variants=("nope",))
