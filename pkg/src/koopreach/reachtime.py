"""Reach-time intervals from eigenfunction extrema.

For an eigenpair (lambda, psi) and sets X0, XF, any time T at which a
trajectory from X0 is inside XF satisfies

    Re(lambda) T in [-L(XF, X0), L(X0, XF)]
    Im(lambda) T in [-A(XF, X0), A(X0, XF)] + 2 m pi   for some integer m

where L(W, V) = log(sup_V |psi| / inf_W |psi|) and A(W, V) is the analogous
phase difference. Products of eigenfunctions with nonnegative weights give
more constraints; intersecting them all is a necessary condition for
reachability, so an empty intersection certifies unreachability.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonTooLongError

RE_FLOOR = 1e-9
IM_FLOOR = 1e-9
MERGE_GAP = 1e-12
MAX_WINDOWS = 1_000_000


@dataclass(frozen=True)
class TimeIntervalSet:
    """Sorted, disjoint, closed intervals inside ``[0, t_max]``."""

    intervals: tuple = ()
    t_max: float = math.inf

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        object.__setattr__(self, "intervals", _normalize(self.intervals, self.t_max))

    @classmethod
    def full(cls, t_max: float) -> "TimeIntervalSet":
        return cls(((0.0, t_max),), t_max)

    @classmethod
    def empty(cls, t_max: float) -> "TimeIntervalSet":
        return cls((), t_max)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def __bool__(self) -> bool:
        return not self.is_empty

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    def hull(self) -> "TimeIntervalSet":
        if self.is_empty:
            return self
        return TimeIntervalSet(((self.lo, self.hi),), self.t_max)

    def intersect(self, other: "TimeIntervalSet") -> "TimeIntervalSet":
        out = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return TimeIntervalSet(tuple(out), min(self.t_max, other.t_max))

    __and__ = intersect

    def union(self, other: "TimeIntervalSet") -> "TimeIntervalSet":
        return TimeIntervalSet(self.intervals + other.intervals, max(self.t_max, other.t_max))

    __or__ = union

    def inflate(self, amount: float) -> "TimeIntervalSet":
        """Widen every interval by ``amount`` on both sides (clipped to the horizon)."""
        if amount < 0:
            raise ValueError("inflation must be nonnegative")
        return TimeIntervalSet(tuple((lo - amount, hi + amount) for lo, hi in self.intervals), self.t_max)

    def contains(self, t: float) -> bool:
        return any(lo <= t <= hi for lo, hi in self.intervals)

    def is_subset(self, other: "TimeIntervalSet", tol: float = 0.0) -> bool:
        return all(any(olo - tol <= lo and hi <= ohi + tol for olo, ohi in other.intervals)
                   for lo, hi in self.intervals)

    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def to_list(self) -> list:
        return [[lo, hi] for lo, hi in self.intervals]


def _normalize(intervals, t_max: float) -> tuple:
    clipped = []
    for lo, hi in intervals:
        lo, hi = max(float(lo), 0.0), min(float(hi), t_max)
        if lo <= hi:
            clipped.append((lo, hi))
    clipped.sort()
    merged: list[list[float]] = []
    for lo, hi in clipped:
        if merged and lo - merged[-1][1] < MERGE_GAP:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


@dataclass(frozen=True)
class EigenpairQuantities:
    """Extremal quantities of one eigenfunction between X0 and XF.

    ``L_fwd`` = L(X0, XF), ``L_bwd`` = L(XF, X0); ``A_fwd``/``A_bwd`` likewise
    for phase (radians).
    """

    lambda_: complex
    L_fwd: float
    L_bwd: float
    A_fwd: float = 0.0
    A_bwd: float = 0.0

    @property
    def has_phase(self) -> bool:
        return abs(self.lambda_.imag) > IM_FLOOR

    def scaled(self, weight: float) -> "EigenpairQuantities":
        return EigenpairQuantities(self.lambda_ * weight, self.L_fwd * weight, self.L_bwd * weight,
                                   self.A_fwd * weight, self.A_bwd * weight)

    def __add__(self, other: "EigenpairQuantities") -> "EigenpairQuantities":
        return EigenpairQuantities(self.lambda_ + other.lambda_, self.L_fwd + other.L_fwd,
                                   self.L_bwd + other.L_bwd, self.A_fwd + other.A_fwd,
                                   self.A_bwd + other.A_bwd)


def weighted(quantities, alphas) -> EigenpairQuantities:
    """Quantities of the product eigenfunction prod psi_i^alpha_i (relaxed bounds)."""
    if len(quantities) != len(alphas):
        raise ValueError("one weight per eigenpair required")
    if any(a < 0 for a in alphas) or not any(a > 0 for a in alphas):
        raise ValueError(f"weights must be nonnegative with at least one positive entry, got {alphas}")
    total = EigenpairQuantities(0j, 0.0, 0.0, 0.0, 0.0)
    for q, a in zip(quantities, alphas):
        if a:
            total = total + q.scaled(a)
    return total


def interval_mag(q: EigenpairQuantities, t_max: float) -> TimeIntervalSet:
    """Times consistent with the growth or decay of |psi|."""
    re = q.lambda_.real
    lo_num, hi_num = -q.L_bwd, q.L_fwd
    if abs(re) <= RE_FLOOR:
        if lo_num <= 0.0 <= hi_num:
            return TimeIntervalSet.full(t_max)
        return TimeIntervalSet.empty(t_max)
    if re > 0:
        lo, hi = lo_num / re, hi_num / re
    else:
        lo, hi = hi_num / re, lo_num / re
    if lo > hi:
        return TimeIntervalSet.empty(t_max)
    return TimeIntervalSet(((lo, hi),), t_max)


def interval_phase(q: EigenpairQuantities, t_max: float) -> TimeIntervalSet:
    """Union over winding numbers of the times consistent with the phase of psi."""
    if not q.has_phase:
        return TimeIntervalSet.full(t_max)
    im = q.lambda_.imag
    w = abs(im)
    if im > 0:
        lo_num, hi_num = -q.A_bwd, q.A_fwd
    else:
        lo_num, hi_num = -q.A_fwd, q.A_bwd
    if lo_num > hi_num:
        return TimeIntervalSet.empty(t_max)
    two_pi = 2.0 * math.pi
    # windows [(lo_num + 2 m pi)/w, (hi_num + 2 m pi)/w] meeting [0, t_max]
    m_lo = math.ceil(-hi_num / two_pi)
    m_hi = math.floor((w * t_max - lo_num) / two_pi)
    if m_hi - m_lo + 1 > MAX_WINDOWS:
        raise HorizonTooLongError(f"{m_hi - m_lo + 1} phase windows over horizon {t_max:g}; shorten t_max")
    windows = tuple(((lo_num + two_pi * m) / w, (hi_num + two_pi * m) / w) for m in range(m_lo, m_hi + 1))
    return TimeIntervalSet(windows, t_max)


def combine_eigenpair(q: EigenpairQuantities, t_max: float) -> TimeIntervalSet:
    return interval_mag(q, t_max) & interval_phase(q, t_max)


def enumerate_combos(m_pairs: int, max_weight: int = 3) -> list[tuple[int, ...]]:
    """Unit weights first, then every integer weight vector with 2 <= sum <= max_weight."""
    if m_pairs < 1:
        raise ValueError("need at least one eigenpair")
    units = [tuple(int(i == j) for j in range(m_pairs)) for i in range(m_pairs)]
    out = list(units)
    seen = set(units)
    for total in range(2, max_weight + 1):
        for combo in itertools.combinations_with_replacement(range(m_pairs), total):
            alphas = tuple(combo.count(j) for j in range(m_pairs))
            if alphas not in seen:
                seen.add(alphas)
                out.append(alphas)
    return out


class Verdict(str, enum.Enum):
    UNREACHABLE_CERTIFIED = "UnreachableCertified"
    INCONCLUSIVE_WITH_BOUND = "InconclusiveWithBound"


@dataclass(frozen=True)
class ComboResult:
    alphas: tuple
    lambda_: complex
    mag: TimeIntervalSet
    phase: TimeIntervalSet
    combined: TimeIntervalSet

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "lambda": [self.lambda_.real, self.lambda_.imag],
            "mag": self.mag.to_list(),
            "phase": self.phase.to_list(),
            "combined": self.combined.to_list(),
        }


@dataclass(frozen=True)
class VerifyResult:
    final: TimeIntervalSet
    verdict: Verdict
    combos: tuple = field(default=())


def verify(quantities, combos, t_max: float, inflation: float = 0.0) -> VerifyResult:
    """Intersect the reach-time sets of every weighted combination.

    ``inflation`` widens each combination's set before intersecting.
    """
    quantities = list(quantities)
    if not quantities:
        raise ValueError("verify needs at least one eigenpair")
    final = TimeIntervalSet.full(t_max)
    results = []
    for alphas in combos:
        q = weighted(quantities, alphas)
        mag = interval_mag(q, t_max)
        phase = interval_phase(q, t_max)
        combined = mag & phase
        if inflation:
            combined = combined.inflate(inflation)
        results.append(ComboResult(tuple(alphas), q.lambda_, mag, phase, combined))
        final = final & combined
    verdict = Verdict.UNREACHABLE_CERTIFIED if final.is_empty else Verdict.INCONCLUSIVE_WITH_BOUND
    return VerifyResult(final, verdict, tuple(results))
