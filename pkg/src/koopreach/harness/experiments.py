"""Monte Carlo drivers: Hausdorff-distance distribution and convergence grid.

Both drivers compare the empirical reach-time set of each trial with a
ground-truth set computed once from reference eigenpairs evaluated on dense
grids, and record the error budget Delta next to the observed distance.
Trials run in a thread pool sized by ``KOOPREACH_THREADS``; rows are sorted
by trial index so output files do not depend on scheduling.
"""
from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import gaussian_kde

from ..dynamics import analytic_eigenpairs_example1, generate_snapshots, get_system
from ..errors import KoopreachError
from ..guarantees import hausdorff
from ..reachtime import TimeIntervalSet, enumerate_combos, verify
from ..regions import grid_points, sample_iid
from .benchmarks import Benchmark, get_benchmark
from .pipeline import VerifyConfig, learn_model, quantities_for, verify_model

log = logging.getLogger(__name__)

GROUND_TRUTH_POINTS = 100_000


def n_workers() -> int:
    env = os.environ.get("KOOPREACH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map(fn, items) -> list:
    workers = n_workers()
    if workers == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def ground_truth_set(eigenpairs, X0, XF, t_max: float, n_points: int = GROUND_TRUTH_POINTS,
                     max_weight: int = 3, seed: int = 0) -> TimeIntervalSet:
    """Reach-time set of reference eigenpairs from a dense grid plus iid points per set."""
    rng = np.random.default_rng(seed)
    P0 = np.concatenate([grid_points(X0, n_points), sample_iid(X0, n_points, rng)])
    PF = np.concatenate([grid_points(XF, n_points), sample_iid(XF, n_points, rng)])
    qs = quantities_for(eigenpairs, P0, PF)
    return verify(qs, enumerate_combos(len(qs), max_weight), t_max).final


def _write_csv(rows: list[dict], columns: list[str], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in columns})


def _trial(bench: Benchmark, degree: int, n_samples: int, trial_seed: int, references, truth: TimeIntervalSet,
           eps: float | None) -> dict:
    """One fresh-data, fresh-sample run; returns d_H to ground truth and the budget."""
    system = get_system(bench.system)
    ds = generate_snapshots(system, bench.data_domain, bench.n_traj, bench.n_steps, bench.dt, seed=trial_seed)
    model = learn_model(ds, degree, targets=bench.targets)
    cfg = VerifyConfig.from_dict({**bench.verify, "n_samples": n_samples, "eps": eps})
    report = verify_model(model, bench.X0, bench.XF, cfg, seed=trial_seed, references=references)
    final = TimeIntervalSet(tuple(tuple(iv) for iv in report.final), report.t_max)
    return {"d_H": hausdorff(final, truth), "bound": report.guarantee["delta_total"],
            "eps": report.guarantee["eps"]}


@dataclass
class HausdorffStudy:
    rows: list
    truth: TimeIntervalSet
    n_failed: int

    @property
    def distances(self) -> np.ndarray:
        return np.array([r["d_H"] for r in self.rows if r["status"] == "ok"])

    @property
    def coverage(self) -> float:
        ok = [r for r in self.rows if r["status"] == "ok"]
        return float(np.mean([r["within_budget"] for r in ok])) if ok else 0.0


def experiment_hausdorff(n_trials: int = 200, base_seed: int = 0, n_samples: int = 5000,
                         eps: float | None = None, out_csv=None) -> HausdorffStudy:
    """Per-trial d_H between the empirical example1 set and its analytic ground truth.

    With ``eps=None`` the sampling tolerance is the one ``n_samples`` certify.
    """
    bench = get_benchmark("example1")
    refs = analytic_eigenpairs_example1()
    truth = ground_truth_set(refs, bench.X0, bench.XF, bench.verify["t_max"], seed=base_seed)
    seeds = [base_seed * 100_003 + 1 + i for i in range(n_trials)]

    def run(i):
        row = {"trial": i, "seed": seeds[i]}
        try:
            out = _trial(bench, bench.degree, n_samples, seeds[i], refs, truth, eps)
        except (KoopreachError, ValueError, ArithmeticError) as exc:
            log.warning("trial %d (seed %d) failed: %s", i, seeds[i], exc)
            return {**row, "d_H": float("nan"), "delta": float("nan"), "within_budget": False,
                    "status": f"failed: {type(exc).__name__}"}
        return {**row, "d_H": out["d_H"], "delta": out["bound"], "within_budget": out["d_H"] <= out["bound"],
                "status": "ok"}

    rows = sorted(_map(run, range(n_trials)), key=lambda r: r["trial"])
    n_failed = sum(r["status"] != "ok" for r in rows)
    if out_csv is not None:
        _write_csv(rows, ["trial", "seed", "d_H", "delta", "within_budget", "status"], out_csv)
    return HausdorffStudy(rows, truth, n_failed)


def count_modes(values, grid_size: int = 512, rel_height: float = 0.05) -> int:
    """Number of local maxima of a Gaussian KDE that rise above ``rel_height`` of the peak."""
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if len(values) < 3 or np.ptp(values) == 0:
        return 1
    kde = gaussian_kde(values)
    span = np.ptp(values)
    xs = np.linspace(values.min() - 0.1 * span, values.max() + 0.1 * span, grid_size)
    ys = kde(xs)
    interior = (ys[1:-1] > ys[:-2]) & (ys[1:-1] >= ys[2:]) & (ys[1:-1] >= rel_height * ys.max())
    return int(np.count_nonzero(interior))


@dataclass
class ExperimentGrid:
    degrees: list = field(default_factory=lambda: [6, 8, 10])
    sample_counts: list = field(default_factory=lambda: [50, 5000])
    n_trials: int = 20
    base_seed: int = 0

    def __post_init__(self):
        if not self.degrees or not self.sample_counts:
            raise ValueError("degrees and sample_counts must be nonempty")
        if self.n_trials < 1:
            raise ValueError("n_trials must be positive")

    @classmethod
    def from_dict(cls, d: dict | None) -> "ExperimentGrid":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown grid options: {sorted(unknown)}")
        return cls(**d)

    def cells(self) -> list[tuple[int, int, int]]:
        return [(deg, n, t) for deg in self.degrees for n in self.sample_counts for t in range(self.n_trials)]


def duffing_reference(seed: int = 0):
    """Degree-14 Duffing eigenpairs learned from 10^5 snapshot pairs."""
    from .benchmarks import reference_eigenpairs
    return reference_eigenpairs(get_benchmark("duffing"), seed)


def experiment_convergence(grid: ExperimentGrid | None = None, out_csv=None) -> list[dict]:
    """d_H to the high-fidelity Duffing set across degrees and sample counts.

    Each row also carries the error budget for its setting, with the sampling
    tolerance derived from its own sample count.
    """
    grid = grid or ExperimentGrid()
    bench = get_benchmark("duffing")
    refs = duffing_reference(grid.base_seed)
    truth = ground_truth_set(refs, bench.X0, bench.XF, bench.verify["t_max"], seed=grid.base_seed)
    cells = grid.cells()

    def run(idx):
        deg, n, t = cells[idx]
        # data seed shared across sample counts so only the sample count varies within a pair
        seed = grid.base_seed * 100_003 + 1000 * deg + t
        row = {"index": idx, "degree": deg, "n_samples": n, "trial": t, "seed": seed}
        try:
            out = _trial(bench, deg, n, seed, refs, truth, None)
        except (KoopreachError, ValueError, ArithmeticError) as exc:
            log.warning("cell degree=%d n=%d trial=%d failed: %s", deg, n, t, exc)
            return {**row, "d_H": float("nan"), "bound": float("nan"), "eps": float("nan"),
                    "status": f"failed: {type(exc).__name__}"}
        return {**row, **out, "status": "ok"}

    rows = sorted(_map(run, range(len(cells))), key=lambda r: r["index"])
    if out_csv is not None:
        _write_csv(rows, ["degree", "n_samples", "trial", "seed", "d_H", "bound", "eps", "status"], out_csv)
    return rows


def median_by_cell(rows) -> dict:
    """Median d_H keyed by (degree, n_samples), over successful rows."""
    out = {}
    for key in sorted({(r["degree"], r["n_samples"]) for r in rows}):
        vals = [r["d_H"] for r in rows if (r["degree"], r["n_samples"]) == key and r["status"] == "ok"]
        out[key] = float(np.median(vals)) if vals else float("nan")
    return out

