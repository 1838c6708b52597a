"""Error budget for empirical reach-time intervals.

Two error sources are combined: eigenfunction model error, captured by an
:class:`~koopreach.spectral.ErrorField`, and one-sided sampling error of
the extrema, bounded by a tolerance ``eps`` that holds with probability
``1 - delta`` when enough samples are drawn (see
:func:`koopreach.extrema.plan_sampling`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BudgetUndefinedError
from .reachtime import IM_FLOOR, RE_FLOOR, TimeIntervalSet
from .spectral import ErrorField


@dataclass(frozen=True)
class ErrorBudget:
    eps: float
    delta_L: float
    delta_A: float
    min_abs_re: float
    min_abs_im: float | None
    delta_total: float
    confidence: float

    def to_dict(self) -> dict:
        return {
            "eps": self.eps, "delta_L": self.delta_L, "delta_A": self.delta_A,
            "min_abs_re": self.min_abs_re, "min_abs_im": self.min_abs_im,
            "delta_total": self.delta_total, "confidence": self.confidence,
        }


def model_error_envelope(measured: float, eps_field: ErrorField, direction: str = "fwd") -> tuple[float, float]:
    """Range of the true L quantity given the one computed from an approximate eigenfunction.

    For direction "fwd" (W = X0, V = XF) the true value lies in
    ``[measured - L_eps(X0, XF), measured + L_eps(XF, X0)]``; "bwd" swaps
    the roles.
    """
    if direction == "fwd":
        return measured - eps_field.L_eps_fwd, measured + eps_field.L_eps_bwd
    if direction == "bwd":
        return measured - eps_field.L_eps_bwd, measured + eps_field.L_eps_fwd
    raise ValueError(f"direction must be 'fwd' or 'bwd', got {direction!r}")


def model_error_envelope_phase(measured: float, eps_field: ErrorField, direction: str = "fwd") -> tuple[float, float]:
    """Phase counterpart of :func:`model_error_envelope`."""
    if direction == "fwd":
        return measured - eps_field.A_eps_fwd, measured + eps_field.A_eps_bwd
    if direction == "bwd":
        return measured - eps_field.A_eps_bwd, measured + eps_field.A_eps_fwd
    raise ValueError(f"direction must be 'fwd' or 'bwd', got {direction!r}")


def delta_bound(pairs, eps: float, delta: float = 0.0) -> ErrorBudget:
    """Hausdorff error budget over eigenpairs given as ``(lambda, ErrorField)``.

    delta_total = max((eps + delta_L) / min|Re lambda|, (eps + delta_A) / min|Im lambda|),
    where the phase term only enters when some eigenpair is complex.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one eigenpair")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    re = [abs(complex(lam).real) for lam, _ in pairs]
    min_re = min(re)
    if min_re <= RE_FLOOR:
        raise BudgetUndefinedError("an eigenvalue has zero real part; the magnitude error budget is unbounded")
    delta_L = max(ef.delta_L for _, ef in pairs)
    complex_pairs = [(lam, ef) for lam, ef in pairs if abs(complex(lam).imag) > IM_FLOOR]
    total = (eps + delta_L) / min_re
    if complex_pairs:
        min_im = min(abs(complex(lam).imag) for lam, _ in complex_pairs)
        delta_A = max(ef.delta_A for _, ef in complex_pairs)
        total = max(total, (eps + delta_A) / min_im)
    else:
        min_im, delta_A = None, 0.0
    return ErrorBudget(eps, delta_L, delta_A, min_re, min_im, total, 1.0 - delta)


def hausdorff(a: TimeIntervalSet, b: TimeIntervalSet) -> float:
    """Hausdorff distance between two finite unions of closed intervals.

    Conventions: both empty gives 0, exactly one empty gives +inf.
    """
    if a.is_empty and b.is_empty:
        return 0.0
    if a.is_empty or b.is_empty:
        return math.inf
    return max(_directed(a.intervals, b.intervals), _directed(b.intervals, a.intervals))


def _dist(t: float, ivs) -> float:
    return min(0.0 if lo <= t <= hi else min(abs(t - lo), abs(t - hi)) for lo, hi in ivs)


def _directed(src, dst) -> float:
    # d(., dst) is piecewise linear with peaks at gap midpoints of dst
    cands = [t for iv in src for t in iv]
    for (_, h0), (l1, _) in zip(dst, dst[1:]):
        mid = 0.5 * (h0 + l1)
        if any(lo <= mid <= hi for lo, hi in src):
            cands.append(mid)
    return max(_dist(t, dst) for t in cands)


@dataclass(frozen=True)
class CertifiedStatement:
    text: str
    confidence: float
    delta_total: float
    empty: bool
    assumptions: tuple = field(default=())

    def to_dict(self) -> dict:
        return {"text": self.text, "confidence": self.confidence, "delta_total": self.delta_total,
                "empty": self.empty, "assumptions": list(self.assumptions)}


def certify(empirical: TimeIntervalSet, budget: ErrorBudget, assumptions=()) -> CertifiedStatement:
    conf = budget.confidence
    d = budget.delta_total
    if empirical.is_empty:
        text = (
            f"With probability at least {conf:.4g}, the ideal reach-time over-approximation is within "
            f"Hausdorff distance {d:.4g} of the empty set: no trajectory from the initial set reaches the "
            f"target within [0, {empirical.t_max:g}], unless the true reach-time set consists of intervals "
            f"of width at most {d:.4g} that the empirical estimate missed."
        )
    else:
        ivs = ", ".join(f"[{lo:.4g}, {hi:.4g}]" for lo, hi in empirical.intervals)
        text = (
            f"With probability at least {conf:.4g}, the ideal reach-time over-approximation lies within "
            f"Hausdorff distance {d:.4g} of {ivs}; reaching the target is only possible at those times."
        )
    return CertifiedStatement(text, conf, d, empirical.is_empty, tuple(assumptions))
