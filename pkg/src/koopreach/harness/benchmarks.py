"""Canned pipelines for the three benchmark systems.

Each benchmark simulates data, learns principal eigenpairs, verifies
reachability between its sets and checks the outcome against fixed
thresholds: distance to a reference reach-time interval (or an empty
verdict), agreement with simulated first-entry times, and wall time.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import (DEFAULT_STEP, analytic_eigenpairs_example1, first_entry_times, generate_snapshots,
                        get_system)
from ..guarantees import hausdorff
from ..reachtime import TimeIntervalSet
from ..regions import Box, bump_sublevel, sample_iid
from .pipeline import VerificationReport, VerifyConfig, learn_model, verify_model

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Benchmark:
    name: str
    system: str
    data_domain: Box
    n_traj: int
    n_steps: int
    dt: float
    degree: int
    targets: tuple
    X0: object
    XF: object
    verify: dict
    expected: tuple | None  # reference interval, None when the verdict must be empty
    max_dh: float = 0.0
    runtime_budget: float = 60.0
    n_entry_samples: int = 500
    reference_degree: int | None = None
    reference_traj: int = 0
    seed: int = 7


def example1() -> Benchmark:
    return Benchmark(
        name="example1", system="example1",
        data_domain=Box([-0.5, -1.5], [2.5, 1.5]), n_traj=1000, n_steps=10, dt=0.05,
        degree=6, targets=(-1.0, 2.5),
        X0=bump_sublevel(0.05, 1.15, 1, 2, 0.05, -0.1),
        XF=bump_sublevel(1.85, -0.75, 5, 8, 0.1, -0.7),
        verify={"t_max": 5.0, "n_samples": 5000, "eps": 0.02, "delta": 0.1},
        expected=(0.70, 0.97), max_dh=0.15, runtime_budget=60.0,
    )


def duffing() -> Benchmark:
    # data box kept inside the basin of (1, 0); its boundary makes the eigenfunctions singular
    lam = complex(-0.25, np.sqrt(1.9375))
    return Benchmark(
        name="duffing", system="duffing",
        data_domain=Box([0.6, -0.4], [1.4, 1.1]), n_traj=2000, n_steps=10, dt=0.1,
        degree=12, targets=(lam, lam.conjugate()),
        X0=Box([1.0, 1.0], [1.1, 1.1]), XF=Box([0.6, 0.2], [0.7, 0.3]),
        verify={"t_max": 6.0, "n_samples": 5000, "eps": 0.02, "delta": 0.1},
        expected=(3.57, 4.15), max_dh=0.3, runtime_budget=120.0,
        reference_degree=14, reference_traj=10_000,
    )


def roessler() -> Benchmark:
    # targets: Jacobian eigenvalues at the equilibrium near the origin
    lam = complex(0.09700086, 0.99519349)
    return Benchmark(
        name="roessler", system="roessler",
        data_domain=Box([-12.0, -12.0, -1.0], [12.0, 12.0, 1.0]), n_traj=2000, n_steps=10, dt=0.05,
        degree=3, targets=(lam, lam.conjugate()),
        X0=Box([-0.5, -9.0, -0.5], [0.5, -8.0, 0.5]),
        XF=Box([10.5, -4.4, -0.6], [11.0, -3.9, -0.1]),
        verify={"t_max": 1.0, "n_samples": 5000, "eps": 0.02, "delta": 0.1},
        expected=None, runtime_budget=180.0, n_entry_samples=10_000,
    )


BENCHMARKS = {"example1": example1, "duffing": duffing, "roessler": roessler}


def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name]()
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None


def reference_eigenpairs(bench: Benchmark, seed: int = 0):
    """Ground-truth eigenpairs: analytic where known, else a high-fidelity fit."""
    if bench.system == "example1":
        return analytic_eigenpairs_example1()
    if bench.reference_degree is None:
        return None
    system = get_system(bench.system)
    ds = generate_snapshots(system, bench.data_domain, bench.reference_traj, bench.n_steps, bench.dt,
                            seed=10_000 + seed)
    return learn_model(ds, bench.reference_degree, targets=bench.targets).eigenpairs


@dataclass
class BenchmarkOutcome:
    name: str
    passed: bool
    checks: dict
    report: VerificationReport
    entry_times: list = field(default_factory=list)
    runtime: float = 0.0

    def summary(self) -> str:
        lines = [f"benchmark {self.name}: {'PASS' if self.passed else 'FAIL'} ({self.runtime:.1f} s)"]
        lines.append(f"  verdict {self.report.verdict}, interval {self.report.final}, "
                     f"Delta {self.report.guarantee['delta_total']:.4g}")
        for k, (ok, detail) in self.checks.items():
            lines.append(f"  [{'ok' if ok else 'FAIL'}] {k}: {detail}")
        return "\n".join(lines)


def run_benchmark(name: str, seed: int | None = None, overrides: dict | None = None) -> BenchmarkOutcome:
    bench = get_benchmark(name)
    seed = bench.seed if seed is None else seed
    t0 = time.perf_counter()
    system = get_system(bench.system)
    ds = generate_snapshots(system, bench.data_domain, bench.n_traj, bench.n_steps, bench.dt, seed=seed)
    model = learn_model(ds, bench.degree, targets=bench.targets)
    refs = reference_eigenpairs(bench, seed)
    cfg = VerifyConfig.from_dict({**bench.verify, **(overrides or {})})
    report = verify_model(model, bench.X0, bench.XF, cfg, seed=seed, references=refs)
    final = TimeIntervalSet(tuple(tuple(iv) for iv in report.final), report.t_max)
    delta = report.guarantee["delta_total"]

    starts = sample_iid(bench.X0, bench.n_entry_samples, seed + 1)
    times = first_entry_times(system, starts, bench.XF, report.t_max, DEFAULT_STEP)
    hits = [t for t in times if t is not None]
    report.metadata.update({
        "benchmark": name, "entry_time_resolution": DEFAULT_STEP, "n_entry_samples": len(times),
        "n_entries": len(hits),
        "entry_time_range": [min(hits), max(hits)] if hits else [],
    })
    runtime = time.perf_counter() - t0

    checks = {}
    if bench.expected is not None:
        expected = TimeIntervalSet((bench.expected,), report.t_max)
        dh = hausdorff(final, expected)
        checks["interval"] = (bool(final) and dh <= bench.max_dh,
                              f"d_H to {list(bench.expected)} = {dh:.4f} (limit {bench.max_dh})")
        inflated = final.inflate(delta + DEFAULT_STEP)
        bad = [t for t in hits if not inflated.contains(t)]
        checks["entry_times"] = (not bad and len(hits) > 0,
                                 f"{len(hits)} entries, {len(bad)} outside the interval inflated by Delta + step")
    else:
        checks["verdict"] = (report.verdict == "UnreachableCertified", report.verdict)
        checks["simulation"] = (not hits, f"{len(hits)} of {len(times)} simulated trajectories enter the target")
    checks["runtime"] = (runtime <= bench.runtime_budget, f"{runtime:.1f} s (budget {bench.runtime_budget:g} s)")
    passed = all(ok for ok, _ in checks.values())
    report.timings["total"] = runtime
    return BenchmarkOutcome(name, passed, checks, report, times, runtime)
