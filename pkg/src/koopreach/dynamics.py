"""Benchmark systems, fixed-step RK4 flow and snapshot generation.

Vector fields act on the last axis so a whole batch of states ``(k, n)``
advances in one call; :func:`integrate_flow` and friends rely on this.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DivergenceError, SingularJacobianError
from .regions import Box, Region, as_generator, contains, sample_iid

log = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3
SINGULAR_DET = 1e-12


@dataclass(frozen=True)
class SystemModel:
    name: str
    dimension: int
    vector_field: Callable[[np.ndarray], np.ndarray]
    domain: Box

    def __call__(self, x):
        return self.vector_field(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SnapshotDataset:
    """Snapshot pairs ``y[k] = s_dt(x[k])`` stored row-wise."""

    x: np.ndarray
    y: np.ndarray
    dt: float
    system: str = ""
    seed: int | None = None
    n_dropped: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape:
            raise ValueError(f"x and y shapes differ: {x.shape} vs {y.shape}")
        if len(x) == 0:
            raise ValueError("dataset needs at least one pair")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dimension(self) -> int:
        return self.x.shape[1]

    def __len__(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class AnalyticEigenpair:
    lambda_: complex
    psi: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __call__(self, x):
        return np.asarray(self.psi(np.asarray(x, dtype=float)))


def _rk4_step(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_schedule(t: float, step: float) -> tuple[int, float]:
    n = int(math.floor(t / step + 1e-9))
    rest = t - n * step
    if rest <= 1e-12 * max(1.0, t):
        rest = 0.0
    return n, rest


def integrate_flow(system: SystemModel, x0, t: float, step: float = DEFAULT_STEP) -> np.ndarray:
    """Approximate ``s_t(x0)`` with classic RK4 at a fixed step.

    A final partial step covers any remainder of ``t`` not divisible by
    ``step``. ``x0`` may be a single state or a ``(k, n)`` batch.

    Raises
    ------
    DivergenceError
        If any state becomes non-finite; ``.time`` holds the step time.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.array(x0, dtype=float)
    if x.shape[-1] != system.dimension:
        raise ValueError(f"state has dimension {x.shape[-1]}, system {system.name} expects {system.dimension}")
    n, rest = _step_schedule(t, step)
    f = system.vector_field
    now = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            x = _rk4_step(f, x, step)
            now = (i + 1) * step
            if not np.all(np.isfinite(x)):
                raise DivergenceError(f"{system.name}: state blew up at t={now:g}", now)
        if rest:
            x = _rk4_step(f, x, rest)
            now = t
            if not np.all(np.isfinite(x)):
                raise DivergenceError(f"{system.name}: state blew up at t={now:g}", now)
    return x


def _propagate(system: SystemModel, x: np.ndarray, t: float, step: float) -> np.ndarray:
    """Like integrate_flow but lets rows go non-finite instead of raising."""
    n, rest = _step_schedule(t, step)
    f = system.vector_field
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(n):
            x = _rk4_step(f, x, step)
        if rest:
            x = _rk4_step(f, x, rest)
    return x


def generate_snapshots(system: SystemModel, domain: Box, n_traj: int, n_steps: int, dt: float,
                       seed: int = 0, step: float = DEFAULT_STEP, guard: Box | None = None) -> SnapshotDataset:
    """Simulate ``n_traj`` trajectories of ``n_steps`` steps of length ``dt``.

    Initial states are uniform on ``domain``. Trajectories that leave the
    guard box (default: ``system.domain`` inflated by 2) or blow up are
    discarded whole; the number of dropped pairs is kept in ``n_dropped``.
    """
    if n_traj < 1 or n_steps < 1:
        raise ValueError("n_traj and n_steps must be positive")
    guard = guard if guard is not None else system.domain.inflate(2.0)
    x = sample_iid(domain, n_traj, as_generator(seed))
    h = min(step, dt)
    states = [x]
    for _ in range(n_steps):
        x = _propagate(system, x, dt, h)
        states.append(x)
    traj = np.stack(states, axis=1)  # (n_traj, n_steps + 1, n)
    ok = np.all(np.isfinite(traj), axis=(1, 2))
    ok[ok] = np.all(contains(guard, traj[ok].reshape(-1, system.dimension)).reshape(-1, n_steps + 1), axis=1)
    n_bad = int(np.count_nonzero(~ok))
    if n_bad:
        log.warning("%s: dropped %d of %d trajectories leaving the guard box", system.name, n_bad, n_traj)
    kept = traj[ok]
    xs = kept[:, :-1].reshape(-1, system.dimension)
    ys = kept[:, 1:].reshape(-1, system.dimension)
    return SnapshotDataset(xs, ys, dt, system=system.name, seed=seed, n_dropped=n_bad * n_steps,
                           meta={"n_traj": n_traj, "n_steps": n_steps, "step": h})


def first_entry_times(system: SystemModel, x0_samples, target: Region, t_max: float,
                      step: float = DEFAULT_STEP, return_flags: bool = False):
    """First grid time at which each trajectory is inside ``target``.

    Time is resolved to the integrator step (no event localization). Entries
    are ``None`` when the target is not hit within ``[0, t_max]``; diverging
    trajectories also give ``None`` and are flagged.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.array(x0_samples, dtype=float).reshape(-1, system.dimension)
    times = np.full(len(x), np.nan)
    diverged = np.zeros(len(x), dtype=bool)
    active = np.ones(len(x), dtype=bool)

    def check(now):
        nonlocal active
        finite = np.all(np.isfinite(x), axis=1)
        newly_bad = active & ~finite
        diverged[newly_bad] = True
        active &= finite
        if active.any():
            idx = np.flatnonzero(active)
            hit = contains(target, x[idx])
            times[idx[hit]] = now
            active[idx[hit]] = False

    n, rest = _step_schedule(t_max, step)
    check(0.0)
    f = system.vector_field
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            x[idx] = _rk4_step(f, x[idx], step)
            check((i + 1) * step)
        if rest and active.any():
            idx = np.flatnonzero(active)
            x[idx] = _rk4_step(f, x[idx], rest)
            check(t_max)
    if diverged.any():
        log.warning("%s: %d trajectories diverged before reaching the target", system.name, diverged.sum())
    out = [None if np.isnan(v) else float(v) for v in times]
    if return_flags:
        return out, diverged
    return out


# --- benchmark systems ---------------------------------------------------

EXAMPLE1_EIGS = (-1.0, 2.5)


def _psi1(x):
    return x[..., 0] ** 2 + 2.0 * x[..., 1] + x[..., 1] ** 3


def _psi2(x):
    return x[..., 0] + np.sin(x[..., 1]) + x[..., 0] ** 3


def _example1_field(x):
    x1 = x[..., 0]
    x2 = x[..., 1]
    # rows of the eigenfunction Jacobian
    a, b = 2.0 * x1, 2.0 + 3.0 * x2**2
    c, d = 1.0 + 3.0 * x1**2, np.cos(x2)
    det = a * d - b * c
    if np.any(np.abs(det) < SINGULAR_DET):
        raise SingularJacobianError("eigenfunction Jacobian is singular at a queried state")
    r1 = EXAMPLE1_EIGS[0] * _psi1(x)
    r2 = EXAMPLE1_EIGS[1] * _psi2(x)
    return np.stack([(d * r1 - b * r2) / det, (a * r2 - c * r1) / det], axis=-1)


def example1_system() -> SystemModel:
    """System built so that psi1, psi2 are exact eigenfunctions with eigenvalues -1, 2.5."""
    return SystemModel("example1", 2, _example1_field, Box([-0.5, -1.5], [2.5, 1.5]))


def _duffing_field(x):
    x1 = x[..., 0]
    x2 = x[..., 1]
    return np.stack([x2, -0.5 * x2 - x1 * (x1**2 - 1.0)], axis=-1)


def duffing_system() -> SystemModel:
    return SystemModel("duffing", 2, _duffing_field, Box([-2.0, -2.0], [2.0, 2.0]))


def _roessler_field(x):
    x1 = x[..., 0]
    x2 = x[..., 1]
    x3 = x[..., 2]
    return np.stack([-x2 - x3, x1 + 0.2 * x2, 0.2 + x3 * (x1 - 5.7)], axis=-1)


def roessler_system() -> SystemModel:
    return SystemModel("roessler", 3, _roessler_field, Box([-15.0, -15.0, -5.0], [15.0, 15.0, 25.0]))


SYSTEMS = {
    "example1": example1_system,
    "duffing": duffing_system,
    "roessler": roessler_system,
}


def get_system(name: str) -> SystemModel:
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise ValueError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None


def analytic_eigenpairs_example1() -> list[AnalyticEigenpair]:
    return [
        AnalyticEigenpair(complex(EXAMPLE1_EIGS[0]), _psi1, "psi1"),
        AnalyticEigenpair(complex(EXAMPLE1_EIGS[1]), _psi2, "psi2"),
    ]
