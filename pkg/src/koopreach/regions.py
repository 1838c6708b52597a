"""Initial sets, target sets and working domains.

Three region shapes are supported: axis-aligned boxes, sublevel sets of a
scalar field (sampled by rejection from a bounding box) and finite unions.
All regions accept a single point ``(n,)`` or a batch ``(k, n)`` in
:func:`contains` and return uniform i.i.d. samples as ``(k, n)`` arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleRegionError

# rejection sampling gives up when fewer than this fraction of proposals land
MIN_ACCEPTANCE = 1e-4
MAX_PROPOSALS = 1_000_000
_VOLUME_PROPOSALS = 10_000


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _points(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError(f"box bounds must be 1-D of equal length, got {lo.shape} and {hi.shape}")
        if np.any(lo > hi):
            raise ValueError(f"box requires lo <= hi componentwise, got lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return self.lo.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def inflate(self, factor: float) -> "Box":
        """Scale the half-widths about the center by ``factor``."""
        half = 0.5 * (self.hi - self.lo) * factor
        return Box(self.center - half, self.center + half)

    def _contains(self, pts: np.ndarray) -> np.ndarray:
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def _sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.random((n, self.dimension))

    def to_dict(self) -> dict:
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True)
class BumpField:
    """Skewed Gaussian bump used to carve out non-convex sets.

    h(x) = -(1 - dx/3 + a (dy/s)^5 + b (dx/s)^3) exp(-((dx/s)^2 + (dy/s)^2))
    with dx = x1 - x1c, dy = x2 - x2c.
    """

    x1c: float
    x2c: float
    a: float
    b: float
    s: float

    name = "bump"

    def __post_init__(self):
        if self.s == 0:
            raise ValueError("bump width s must be nonzero")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dx = x[..., 0] - self.x1c
        dy = x[..., 1] - self.x2c
        u = dx / self.s
        v = dy / self.s
        return -(1.0 - dx / 3.0 + self.a * v**5 + self.b * u**3) * np.exp(-(u**2 + v**2))

    def bounding_box(self, threshold: float, pad: float = 0.25, reach: float = 6.0) -> Box:
        """Box around ``{h <= threshold}`` found on a fine grid, padded by ``pad`` widths of s."""
        g = np.linspace(-reach, reach, 1201) * abs(self.s)
        X1, X2 = np.meshgrid(self.x1c + g, self.x2c + g, indexing="ij")
        inside = self(np.stack([X1, X2], axis=-1)) <= threshold
        if not inside.any():
            raise InfeasibleRegionError(f"sublevel set h <= {threshold} is empty near the bump center", rate=0.0)
        margin = pad * abs(self.s)
        lo = np.array([X1[inside].min(), X2[inside].min()]) - margin
        hi = np.array([X1[inside].max(), X2[inside].max()]) + margin
        return Box(lo, hi)

    def params(self) -> dict:
        return {"x1c": self.x1c, "x2c": self.x2c, "a": self.a, "b": self.b, "s": self.s}


FIELDS: dict[str, Callable[..., object]] = {"bump": BumpField}


@dataclass(frozen=True)
class Sublevel:
    """``{x : field(x) <= threshold}`` restricted to ``bounding_box``.

    The box is checked at construction: no point sampled on its boundary may
    fall inside the set, otherwise the box would clip it.
    """

    field: Callable
    threshold: float
    bounding_box: Box
    validate: bool = True

    def __post_init__(self):
        if self.validate:
            self._check_box(as_generator(12345))

    def _check_box(self, rng, per_face: int = 2000) -> None:
        box = self.bounding_box
        pts = []
        for axis in range(box.dimension):
            for bound in (box.lo[axis], box.hi[axis]):
                p = box._sample(per_face, rng)
                p[:, axis] = bound
                pts.append(p)
        pts = np.concatenate(pts)
        if np.any(self.field(pts) <= self.threshold):
            raise ValueError("bounding box boundary intersects the sublevel set; enlarge the box")

    @property
    def dimension(self) -> int:
        return self.bounding_box.dimension

    def _contains(self, pts: np.ndarray) -> np.ndarray:
        return self.bounding_box._contains(pts) & (self.field(pts) <= self.threshold)

    def _sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = []
        got = 0
        proposed = 0
        batch = max(1024, 4 * n)
        while got < n:
            if proposed >= MAX_PROPOSALS and got < MIN_ACCEPTANCE * proposed:
                raise InfeasibleRegionError(
                    f"acceptance rate {got / proposed:.2e} below {MIN_ACCEPTANCE:g} after {proposed} proposals",
                    rate=got / proposed,
                )
            prop = self.bounding_box._sample(batch, rng)
            proposed += batch
            keep = prop[self.field(prop) <= self.threshold]
            out.append(keep)
            got += len(keep)
            if got and got < n:
                # aim the next batch at the remaining count given the observed rate
                batch = int(min(MAX_PROPOSALS, max(1024, 1.2 * (n - got) * proposed / got)))
        return np.concatenate(out)[:n]

    def volume(self, seed=0) -> float:
        rng = as_generator(seed)
        prop = self.bounding_box._sample(_VOLUME_PROPOSALS, rng)
        rate = np.mean(self.field(prop) <= self.threshold)
        return float(rate) * self.bounding_box.volume()

    def to_dict(self) -> dict:
        name = getattr(self.field, "name", None)
        if name not in FIELDS:
            raise TypeError(f"field {self.field!r} has no registered serialization")
        return {
            "type": "sublevel",
            "field": {"name": name, **self.field.params()},
            "threshold": self.threshold,
            "bounding_box": self.bounding_box.to_dict(),
        }


@dataclass(frozen=True)
class Union:
    members: tuple
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("union needs at least one member")
        dims = {m.dimension for m in members}
        if len(dims) != 1:
            raise ValueError(f"union members disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "members", members)
        vols = np.array([_volume(m) for m in members])
        object.__setattr__(self, "_weights", vols / vols.sum())

    @property
    def dimension(self) -> int:
        return self.members[0].dimension

    def volume(self) -> float:
        return float(sum(_volume(m) for m in self.members))

    def _contains(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros(len(pts), dtype=bool)
        for m in self.members:
            out |= m._contains(pts)
        return out

    def _sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        counts = rng.multinomial(n, self._weights)
        parts = [m._sample(int(c), rng) for m, c in zip(self.members, counts) if c]
        pts = np.concatenate(parts)
        return pts[rng.permutation(n)]

    def to_dict(self) -> dict:
        return {"type": "union", "members": [m.to_dict() for m in self.members]}


Region = Box | Sublevel | Union


def _volume(region) -> float:
    if isinstance(region, Sublevel):
        return region.volume(seed=0)
    return region.volume()


def contains(region: Region, x):
    """Closed membership test; returns a bool for one point, a bool array for a batch."""
    pts, single = _points(x)
    if pts.shape[1] != region.dimension:
        raise ValueError(f"point dimension {pts.shape[1]} does not match region dimension {region.dimension}")
    inside = region._contains(pts)
    return bool(inside[0]) if single else inside


def sample_iid(region: Region, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` points uniformly from ``region``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = as_generator(seed)
    if n == 0:
        return np.empty((0, region.dimension))
    return region._sample(int(n), rng)


def estimate_eps_measure(region: Region, fn: Callable, eps: float, which: str = "sup",
                         n_probe: int = 10_000, seed=None) -> float:
    """Plug-in estimate of the probability mass of the eps-optimal region of ``fn``.

    The probe extremum stands in for the unknown true extremum, so the value
    is biased upward; it is floored at ``1/n_probe``.
    """
    if which not in ("sup", "inf"):
        raise ValueError(f"which must be 'sup' or 'inf', got {which!r}")
    if n_probe < 1000:
        raise ValueError("n_probe must be at least 1000")
    pts = sample_iid(region, n_probe, seed)
    vals = np.asarray(fn(pts), dtype=float)
    if which == "sup":
        frac = np.mean(vals.max() - vals <= eps)
    else:
        frac = np.mean(vals - vals.min() <= eps)
    return float(max(frac, 1.0 / n_probe))


def region_from_dict(d: dict) -> Region:
    kind = d.get("type")
    if kind == "box":
        return Box(d["lo"], d["hi"])
    if kind == "sublevel":
        spec = dict(d["field"])
        name = spec.pop("name")
        if name not in FIELDS:
            raise ValueError(f"unknown scalar field {name!r}")
        fld = FIELDS[name](**spec)
        threshold = float(d["threshold"])
        if "bounding_box" in d:
            box = region_from_dict(d["bounding_box"])
        else:
            box = fld.bounding_box(threshold)
        return Sublevel(fld, threshold, box)
    if kind == "union":
        return Union(tuple(region_from_dict(m) for m in d["members"]))
    raise ValueError(f"unknown region type {kind!r}")


def bump_sublevel(x1c: float, x2c: float, a: float, b: float, s: float, threshold: float) -> Sublevel:
    fld = BumpField(x1c, x2c, a, b, s)
    return Sublevel(fld, threshold, fld.bounding_box(threshold))


def bounding_box_of(region: Region) -> Box:
    if isinstance(region, Box):
        return region
    if isinstance(region, Sublevel):
        return region.bounding_box
    boxes = [bounding_box_of(m) for m in region.members]
    return Box(np.min([b.lo for b in boxes], axis=0), np.max([b.hi for b in boxes], axis=0))


def grid_points(region: Region, n_target: int) -> np.ndarray:
    """Points of a regular grid over the region's bounding box that lie in the region.

    The grid resolution is chosen so roughly ``n_target`` grid nodes fall in
    the bounding box.
    """
    box = bounding_box_of(region)
    per_axis = max(2, int(math.ceil(n_target ** (1.0 / box.dimension))))
    axes = [np.linspace(l, h, per_axis) for l, h in zip(box.lo, box.hi)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dimension)
    return mesh[region._contains(mesh)]
