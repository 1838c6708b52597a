"""Monomial dictionaries in graded-lexicographic order."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import CapacityError

MAX_SIZE = 5000


@dataclass(frozen=True)
class Dictionary:
    dimension: int
    degree: int
    exponents: np.ndarray  # (size, dimension) nonnegative ints

    @property
    def size(self) -> int:
        return len(self.exponents)

    def __len__(self) -> int:
        return self.size

    def to_dict(self) -> dict:
        return {"dim": self.dimension, "degree": self.degree}

    def labels(self) -> list[str]:
        out = []
        for e in self.exponents:
            terms = [f"x{i + 1}" + (f"^{p}" if p > 1 else "") for i, p in enumerate(e) if p]
            out.append("*".join(terms) or "1")
        return out


def build_dictionary(dimension: int, degree: int, max_size: int = MAX_SIZE) -> Dictionary:
    """All monomials of total degree <= ``degree``.

    Ordered by total degree, then lexicographically descending in the
    exponent tuple, so for two variables: 1, x1, x2, x1^2, x1 x2, x2^2, ...
    """
    if dimension < 1:
        raise ValueError("dimension must be positive")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    size = comb(dimension + degree, degree)
    if size > max_size:
        raise CapacityError(f"dictionary of dimension {dimension}, degree {degree} has {size} terms (cap {max_size})")
    rows = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(dimension), d):
            e = [0] * dimension
            for i in combo:
                e[i] += 1
            rows.append(e)
    exps = np.array(rows, dtype=np.int64).reshape(-1, dimension)
    exps.setflags(write=False)
    return Dictionary(dimension, degree, exps)


def evaluate_batch(dictionary: Dictionary, X) -> np.ndarray:
    """Feature matrix with one row per point and one column per monomial."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, dictionary.dimension) if X.size else X.reshape(0, dictionary.dimension)
    if X.shape[1] != dictionary.dimension:
        raise ValueError(f"points have dimension {X.shape[1]}, dictionary expects {dictionary.dimension}")
    k = len(X)
    # powers[p, j, i] = X[j, i] ** p by repeated multiplication; 0**0 == 1
    powers = np.empty((dictionary.degree + 1, k, dictionary.dimension))
    powers[0] = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for p in range(1, dictionary.degree + 1):
            powers[p] = powers[p - 1] * X
        out = np.ones((k, dictionary.size))
        for i in range(dictionary.dimension):
            out *= powers[dictionary.exponents[:, i], :, i].T
    return out


def evaluate(dictionary: Dictionary, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dictionary.dimension,):
        raise ValueError(f"expected a point of shape ({dictionary.dimension},), got {x.shape}")
    return evaluate_batch(dictionary, x[None, :])[0]
