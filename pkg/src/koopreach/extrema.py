"""Sample-based extrema of eigenfunction magnitude and phase, and sample sizing.

Log-magnitudes are in nats, phases in radians. Phases are unwrapped into a
window of width 2*pi centered on a branch point (by default the circular
mean), so two sets compared through :func:`A_hat` must share that center;
:func:`estimate_on_sets` takes care of it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchMismatchError, DegenerateEigenfunctionError

log = logging.getLogger(__name__)

MAG_FLOOR = 1e-12
WIDE_SPREAD = 1.9 * math.pi


@dataclass(frozen=True)
class ExtremaEstimate:
    sup_log_mag: float
    inf_log_mag: float
    sup_phase: float
    inf_phase: float
    n_samples: int
    n_skipped: int = 0
    branch_center: float = 0.0

    def __post_init__(self):
        if self.sup_log_mag < self.inf_log_mag or self.sup_phase < self.inf_phase:
            raise ValueError("extrema estimate has sup < inf")


@dataclass(frozen=True)
class SamplingPlan:
    per_extremum_sigma: float
    eps: float
    n_required: int
    p_eps_assumed: float
    delta: float = 0.0
    m_eigenpairs: int = 1
    n_extrema_per_pair: int = 8

    def to_dict(self) -> dict:
        return {
            "per_extremum_sigma": self.per_extremum_sigma, "eps": self.eps,
            "n_required": self.n_required, "p_eps_assumed": self.p_eps_assumed,
            "delta": self.delta, "m_eigenpairs": self.m_eigenpairs,
            "n_extrema_per_pair": self.n_extrema_per_pair,
        }


def circular_mean(phases) -> float:
    z = np.mean(np.exp(1j * np.asarray(phases, dtype=float)))
    return float(np.angle(z)) if abs(z) > 1e-12 else 0.0


def wrap_to(phases, center: float) -> np.ndarray:
    """Map angles into (center - pi, center + pi]."""
    d = np.mod(np.asarray(phases, dtype=float) - center + math.pi, 2 * math.pi) - math.pi
    # np.mod lands on -pi for the upper edge; move it to +pi
    d = np.where(d == -math.pi, math.pi, d)
    return center + d


def estimate_extrema(psi_values, branch_center: float | None = None) -> ExtremaEstimate:
    """Empirical sup/inf of log|psi| and of the unwrapped phase of psi."""
    v = np.asarray(psi_values, dtype=complex).ravel()
    mag = np.abs(v)
    ok = mag >= MAG_FLOOR
    n_skipped = int(np.count_nonzero(~ok))
    if not ok.any():
        raise DegenerateEigenfunctionError(f"all {len(v)} eigenfunction values are below {MAG_FLOOR:g} in magnitude")
    v, mag = v[ok], mag[ok]
    raw = np.angle(v)
    center = circular_mean(raw) if branch_center is None else float(branch_center)
    ph = wrap_to(raw, center)
    logm = np.log(mag)
    est = ExtremaEstimate(float(logm.max()), float(logm.min()), float(ph.max()), float(ph.min()),
                          int(len(v)), n_skipped, center)
    if est.sup_phase - est.inf_phase >= WIDE_SPREAD:
        log.warning("phase spread %.3f rad is close to 2*pi; phase bounds are unreliable",
                    est.sup_phase - est.inf_phase)
    return est


def estimate_on_sets(values_from, values_to) -> tuple[ExtremaEstimate, ExtremaEstimate]:
    """Estimates over two sets sharing the circular mean of their pooled phases."""
    a = np.asarray(values_from, dtype=complex).ravel()
    b = np.asarray(values_to, dtype=complex).ravel()
    pooled = np.concatenate([a, b])
    pooled = pooled[np.abs(pooled) >= MAG_FLOOR]
    center = circular_mean(np.angle(pooled)) if len(pooled) else 0.0
    return estimate_extrema(a, center), estimate_extrema(b, center)


def L_hat(from_est: ExtremaEstimate, to_est: ExtremaEstimate) -> float:
    """log(sup|psi| on the destination / inf|psi| on the origin)."""
    return to_est.sup_log_mag - from_est.inf_log_mag


def A_hat(from_est: ExtremaEstimate, to_est: ExtremaEstimate) -> float:
    """Sup phase on the destination minus inf phase on the origin."""
    if from_est.branch_center != to_est.branch_center:
        raise BranchMismatchError(
            f"phase estimates use different branch centers ({from_est.branch_center} vs {to_est.branch_center})"
        )
    return to_est.sup_phase - from_est.inf_phase


def required_samples(sigma: float, p_eps: float) -> int:
    """Smallest N with (1 - p_eps)^N <= sigma."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if p_eps <= 0 or p_eps > 1:
        raise ValueError("p_eps must lie in (0, 1]")
    if p_eps == 1:
        return 1
    return max(1, math.ceil(math.log(sigma) / math.log(1.0 - p_eps)))


def plan_sampling(delta: float, m_eigenpairs: int, p_eps: float, n_extrema_per_pair: int = 8,
                  eps: float = 0.0) -> SamplingPlan:
    """Split the failure budget delta evenly over eigenpairs, then over extrema."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if m_eigenpairs < 1 or n_extrema_per_pair < 1:
        raise ValueError("m_eigenpairs and n_extrema_per_pair must be positive")
    sigma = delta / m_eigenpairs / n_extrema_per_pair
    return SamplingPlan(sigma, eps, required_samples(sigma, p_eps), p_eps, delta, m_eigenpairs,
                        n_extrema_per_pair)
