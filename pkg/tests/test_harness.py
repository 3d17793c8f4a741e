import csv
import json
import os

import numpy as np
import pytest

from cmaes_sop.benchmarks import build_instance
from cmaes_sop import harness
from cmaes_sop.exceptions import ConfigurationError
from cmaes_sop.harness import (
    CSV_HEADER,
    PLOT_HEADER,
    Cell,
    ExperimentConfig,
    TrialRecord,
    aggregate,
    instance_for_trial,
    read_results,
    run_experiment,
    run_trial,
    trajectory_quantiles,
)


def _rec(success, evals, traj=(), lam=10):
    return TrialRecord("cma-es-sop", 0, success, evals, "success" if success else "evaluation-budget", 0.0, lam, list(traj))


def test_aggregate_examples():
    res = aggregate([_rec(True, 100), _rec(True, 200), _rec(False, 500), _rec(False, 500)])
    assert res.success_rate == 0.5 and res.sp1 == 300.0 and res.mean_evals_success == 150.0
    none = aggregate([_rec(False, 10)] * 3)
    assert none.success_rate == 0.0 and none.sp1 is None
    assert aggregate([_rec(True, 70)] * 25).sp1 == 70.0
    with pytest.raises(ValueError):
        aggregate([])


def test_trajectory_quantiles_forward_fill():
    recs = [_rec(True, 20, [5.0, 1.0], lam=10), _rec(False, 40, [9.0, 8.0, 7.0, 6.0], lam=10), _rec(True, 10, [3.0], lam=10)]
    data = trajectory_quantiles(recs, 40)
    assert data[:, 0].tolist() == [10, 20, 30, 40]
    # columns at 40 evals: held values 1, 6, 3
    assert data[-1, 1] == 3.0
    assert data[0, 1] == 5.0
    np.testing.assert_allclose(data[-1, 2:], np.percentile([1.0, 6.0, 3.0], [25, 75]))


def test_forced_success_first_batch():
    inst = build_instance("sphere", 4, 2, 1, "discrete", 0)
    rec = run_trial(inst, "cma-es", 3)
    assert rec.success and rec.evaluations == rec.population_size and rec.termination == "success"


def test_minimal_budget_one_batch():
    inst = build_instance("sphere", 10, 2, 10, "discrete", 0)
    rec = run_trial(inst, "cma-es-sop", 0, max_evaluations=10)
    assert rec.evaluations == 10 and len(rec.trajectory) == 1


def test_trial_determinism():
    cell = Cell("ellipsoid", 4, 2, 10, "discrete")
    a = run_trial(instance_for_trial(cell, 5), "cma-es-sop", 5, max_evaluations=600)
    b = run_trial(instance_for_trial(cell, 5), "cma-es-sop", 5, max_evaluations=600)
    assert a == b


def test_config_grid_expansion():
    cfg = ExperimentConfig.from_json({
        "grid": {"functions": ["sphere", "ellipsoid", "rosenbrock"], "N": [10, 20, 30], "NkLk": [[2, 10], [5, 40]], "mode": "discrete"},
        "algorithms": ["cma-es", "cma-es-sop"],
    })
    assert len(cfg.cells) * len(cfg.algorithms) == 36
    assert cfg.trials == 25 and cfg.base_seed == 0


@pytest.mark.parametrize(
    "bad",
    [
        {"cells": []},
        {"cells": [{"function": "sphere", "N": 10, "Nk": 3, "Lk": 10, "mode": "discrete"}]},
        {"cells": [{"function": "sphere", "N": 4, "Nk": 2, "Lk": 10, "mode": "discrete"}], "trials": 0},
        {"cells": [{"function": "sphere", "N": 4, "Nk": 2, "Lk": 10, "mode": "discrete"}], "algorithms": ["pso"]},
        {"cells": [{"function": "ackley", "N": 4, "Nk": 2, "Lk": 10, "mode": "discrete"}]},
    ],
)
def test_config_validation(bad):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_json(bad)


def _small_config(**kw):
    base = {
        "cells": [{"function": "sphere", "N": 4, "Nk": 2, "Lk": 5, "mode": "discrete"}],
        "algorithms": ["cma-es-sop"],
        "trials": 1,
        "max_evaluations": 400,
    }
    base.update(kw)
    return ExperimentConfig.from_json(base)


def test_run_experiment_files(tmp_path):
    results = run_experiment(_small_config(), tmp_path)
    assert len(results) == 1
    with open(tmp_path / "results.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER and len(rows) == 2
    plots = list((tmp_path / "plots").iterdir())
    assert len(plots) == 1
    assert plots[0].read_text().splitlines()[0] == ",".join(PLOT_HEADER)
    lines = (tmp_path / "trials.jsonl").read_text().splitlines()
    assert len(lines) == 1 and json.loads(lines[0])["algorithm"] == "cma-es-sop"


def test_byte_identical_rerun(tmp_path):
    cfg = _small_config(trials=3, algorithms=["cma-es", "cma-es-sop"])
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("results.csv", "trials.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_matches_serial(tmp_path):
    cfg = _small_config(trials=4, algorithms=["cma-es", "cma-es-sop"])
    run_experiment(cfg, tmp_path / "serial")
    run_experiment(cfg, tmp_path / "par", jobs=2)
    assert (tmp_path / "serial" / "results.csv").read_bytes() == (tmp_path / "par" / "results.csv").read_bytes()


def test_sp1_consistency_with_records(tmp_path):
    cfg = ExperimentConfig.from_json({
        "cells": [{"function": "sphere", "N": 4, "Nk": 2, "Lk": 10, "mode": "discrete"}],
        "algorithms": ["cma-es"],
        "trials": 8,
        "max_evaluations": 300,
    })
    run_experiment(cfg, tmp_path)
    row = read_results(tmp_path)[0]
    recs = [json.loads(l) for l in (tmp_path / "trials.jsonl").read_text().splitlines()]
    wins = [r["evaluations"] for r in recs if r["success"]]
    sr = len(wins) / len(recs)
    assert float(row["success_rate"]) == sr
    if wins:
        assert float(row["sp1"]) == float(np.mean(wins)) / sr
    else:
        assert row["sp1"] == "" and row["mean_evals_success"] == ""


def test_empty_sp1_when_no_success(tmp_path):
    cfg = ExperimentConfig.from_json({
        "cells": [{"function": "ellipsoid", "N": 10, "Nk": 2, "Lk": 10, "mode": "discrete"}],
        "algorithms": ["cma-es"],
        "trials": 1,
        "seed": 3,
        "max_evaluations": 10,
    })
    run_experiment(cfg, tmp_path)
    row = read_results(tmp_path)[0]
    assert row["success_rate"] == "0.0" and row["sp1"] == ""


def test_seed_changes_outcomes_not_schema(tmp_path):
    a = run_experiment(_small_config(trials=3, seed=0), tmp_path / "a")
    b = run_experiment(_small_config(trials=3, seed=50), tmp_path / "b")
    assert a.keys() == b.keys()
    ra = [r.evaluations for r in next(iter(a.values())).records]
    rb = [r.evaluations for r in next(iter(b.values())).records]
    assert ra != rb
    assert sorted(os.listdir(tmp_path / "a" / "plots")) == sorted(os.listdir(tmp_path / "b" / "plots"))


def test_unwritable_output_fails_before_trials(tmp_path, monkeypatch):
    def boom(_):
        raise AssertionError("a trial ran")

    monkeypatch.setattr(harness, "_run_one", boom)
    f = tmp_path / "file"
    f.write_text("x")
    with pytest.raises(OSError):
        run_experiment(_small_config(), f)
    with pytest.raises(OSError):
        run_experiment(_small_config(), f / "sub")
