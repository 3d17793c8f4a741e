"""Seeded trial batteries, success rate / SP1 aggregation and result files."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .benchmarks import FUNCTIONS, MODES, ProblemInstance, build_instance
from .exceptions import ConfigurationError
from .optimizer import CMAESSoP, OptimizerConfig

log = logging.getLogger(__name__)

# name -> (margin_enabled, adaptation_enabled)
ALGORITHMS = {
    "cma-es": (False, False),
    "cma-es-sop": (True, True),
    "cma-es-sop-fixed-margin": (True, False),
}

CSV_HEADER = ["function", "mode", "N", "Nk", "Lk", "algorithm", "trials", "success_rate", "sp1", "mean_evals_success"]
PLOT_HEADER = ["evaluations", "median", "q1", "q3"]


@dataclass(frozen=True)
class Cell:
    function: str
    N: int
    Nk: int
    Lk: int
    mode: str

    def validate(self) -> None:
        if self.function not in FUNCTIONS:
            raise ConfigurationError(f"unknown function {self.function!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        # building a throwaway instance runs every structural check
        build_instance(self.function, self.N, self.Nk, self.Lk, self.mode, 0)

    @property
    def slug(self) -> str:
        return f"{self.function}_{self.mode}_N{self.N}_Nk{self.Nk}_Lk{self.Lk}"


@dataclass
class ExperimentConfig:
    cells: list[Cell]
    algorithms: list[str] = field(default_factory=lambda: ["cma-es", "cma-es-sop"])
    trials: int = 25
    base_seed: int = 0
    max_evaluations: Optional[int] = None  # default: N * 10^4 per cell

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not self.cells:
            raise ConfigurationError("config has no cells")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigurationError(f"unknown algorithm {a!r}; choose from {sorted(ALGORITHMS)}")
        for c in self.cells:
            c.validate()

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        cells = [Cell(c["function"], int(c["N"]), int(c["Nk"]), int(c["Lk"]), c["mode"]) for c in data.get("cells", [])]
        grid = data.get("grid")
        if grid is not None:
            for mode in _as_list(grid.get("mode", "discrete")):
                for nk, lk in grid["NkLk"]:
                    for n in grid["N"]:
                        for fn in grid["functions"]:
                            cells.append(Cell(fn, int(n), int(nk), int(lk), mode))
        cfg = cls(
            cells=cells,
            algorithms=list(data.get("algorithms", ["cma-es", "cma-es-sop"])),
            trials=int(data.get("trials", 25)),
            base_seed=int(data.get("seed", 0)),
            max_evaluations=data.get("max_evaluations"),
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _as_list(v):
    return v if isinstance(v, list) else [v]


@dataclass
class TrialRecord:
    algorithm: str
    seed: int
    success: bool
    evaluations: int
    termination: str
    best_fitness: float
    population_size: int
    # best-so-far after each iteration; entry i covers (i + 1) * population_size evaluations
    trajectory: list[float] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("trajectory")
        return d


@dataclass
class CellResult:
    success_rate: float
    sp1: Optional[float]
    mean_evals_success: Optional[float]
    records: list[TrialRecord] = field(repr=False)


def trial_streams(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence, np.random.SeedSequence]:
    """Independent (instance, initial mean, optimizer) seed streams for one trial."""
    inst, init, opt = np.random.SeedSequence(seed).spawn(3)
    return inst, init, opt


def instance_for_trial(cell: Cell, seed: int) -> ProblemInstance:
    inst = build_instance(cell.function, cell.N, cell.Nk, cell.Lk, cell.mode, trial_streams(seed)[0])
    inst.seed = seed
    return inst


def run_trial(
    instance: ProblemInstance,
    algorithm: str,
    seed: int,
    max_evaluations: Optional[int] = None,
) -> TrialRecord:
    """One run from m0 ~ U[1, 5]^N, C0 = I, sigma0 = 2 until a stop condition fires."""
    margin, adapt = ALGORITHMS[algorithm]
    _, init_seq, opt_seq = trial_streams(seed)
    n = instance.function.dim
    m0 = np.random.default_rng(init_seq).uniform(1.0, 5.0, n)
    opt = CMAESSoP(
        OptimizerConfig(
            space=instance.space,
            mean=m0,
            step_size=2.0,
            max_evaluations=max_evaluations if max_evaluations is not None else n * 10_000,
            seed=opt_seq,
            margin_enabled=margin,
            adaptation_enabled=adapt,
            success=instance.is_success,
        )
    )
    trajectory = []
    while not opt.stopped:
        x = opt.ask()
        opt.tell(instance.evaluate(x))
        trajectory.append(opt.best.fitness)
    return TrialRecord(
        algorithm=algorithm,
        seed=int(seed),
        success=opt.termination.value == "success",
        evaluations=opt.evaluations,
        termination=opt.termination.value,
        best_fitness=opt.best.fitness,
        population_size=opt.population_size,
        trajectory=trajectory,
    )


def aggregate(records: Sequence[TrialRecord]) -> CellResult:
    if not records:
        raise ValueError("aggregate() needs at least one record")
    wins = [r.evaluations for r in records if r.success]
    sr = len(wins) / len(records)
    if not wins:
        return CellResult(sr, None, None, list(records))
    mean = float(np.mean(wins))
    return CellResult(sr, mean / sr, mean, list(records))


def trajectory_quantiles(records: Sequence[TrialRecord], max_evaluations: int) -> np.ndarray:
    """Rows ``(evaluations, median, q1, q3)`` on the batch grid up to the budget.

    Each trajectory is held at its last best value after the trial stops.
    """
    lam = records[0].population_size
    steps = max(1, max_evaluations // lam)
    grid = lam * np.arange(1, steps + 1)
    table = np.empty((len(records), steps))
    for i, r in enumerate(records):
        t = np.asarray(r.trajectory[:steps], dtype=float)
        table[i, : t.size] = t
        table[i, t.size :] = t[-1] if t.size else np.inf
    q1, med, q3 = np.percentile(table, [25, 50, 75], axis=0)
    return np.column_stack([grid, med, q1, q3])


def _run_one(args) -> TrialRecord:
    cell, algorithm, seed, budget = args
    return run_trial(instance_for_trial(cell, seed), algorithm, seed, budget)


def _fmt(v: Optional[float]) -> str:
    return "" if v is None else repr(float(v))


def _check_writable(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write-probe"
    probe.write_text("")
    probe.unlink()


def run_experiment(
    config: ExperimentConfig,
    out_dir,
    jobs: int = 1,
) -> dict[tuple[Cell, str], CellResult]:
    """Run every (cell, algorithm, trial) and write ``results.csv``, ``trials.jsonl``
    and one ``plots/<cell>_<algorithm>.csv`` per (cell, algorithm)."""
    config.validate()
    out = Path(out_dir)
    _check_writable(out)
    (out / "plots").mkdir(exist_ok=True)

    tasks = []
    for cell in config.cells:
        budget = config.max_evaluations or cell.N * 10_000
        for alg in config.algorithms:
            for t in range(config.trials):
                tasks.append((cell, alg, config.base_seed + t, budget))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, tasks, chunksize=1))
    else:
        records = [_run_one(t) for t in tasks]

    results: dict[tuple[Cell, str], CellResult] = {}
    rows = []
    with open(out / "trials.jsonl", "w") as jf:
        i = 0
        for cell in config.cells:
            budget = config.max_evaluations or cell.N * 10_000
            for alg in config.algorithms:
                recs = records[i : i + config.trials]
                i += config.trials
                res = aggregate(recs)
                results[(cell, alg)] = res
                log.info("%s %s: SR=%.2f SP1=%s", cell.slug, alg, res.success_rate, _fmt(res.sp1) or "--")
                rows.append(
                    [cell.function, cell.mode, cell.N, cell.Nk, cell.Lk, alg, config.trials,
                     repr(res.success_rate), _fmt(res.sp1), _fmt(res.mean_evals_success)]
                )
                for r in recs:
                    jf.write(json.dumps({**asdict(cell), **r.summary()}) + "\n")
                _write_plot(out / "plots" / f"{cell.slug}_{alg}.csv", trajectory_quantiles(recs, budget))

    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(rows)
    return results


def _write_plot(path: Path, data: np.ndarray) -> None:
    buf = io.StringIO()
    buf.write(",".join(PLOT_HEADER) + "\n")
    for e, med, q1, q3 in data:
        buf.write(f"{int(e)},{med!r},{q1!r},{q3!r}\n")
    path.write_text(buf.getvalue())


def read_results(out_dir) -> list[dict]:
    with open(Path(out_dir) / "results.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def format_table(rows: Iterable[dict]) -> str:
    cols = ["function", "mode", "N", "Nk", "Lk", "algorithm", "SR", "SP1"]
    body = [
        [r["function"], r["mode"], r["N"], r["Nk"], r["Lk"], r["algorithm"],
         f"{float(r['success_rate']):.2f}", f"{float(r['sp1']):.1f}" if r["sp1"] else "--"]
        for r in rows
    ]
    widths = [max(len(c), *(len(b[i]) for b in body)) if body else len(c) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def default_jobs() -> int:
    return max(1, (os.cpu_count() or 1))
