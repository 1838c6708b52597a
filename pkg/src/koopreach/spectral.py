"""Koopman eigenpairs from snapshot data.

Operator regression over a monomial dictionary (EDMD normal equations),
per-eigenpair residuals in the ResDMD sense, selection of principal
eigenpairs and the multiplicative error field against a reference.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SnapshotDataset
from .errors import ConditioningError, DecompositionError, SelectionError
from .extrema import estimate_on_sets, L_hat, A_hat, MAG_FLOOR
from .observables import Dictionary, evaluate_batch
from .regions import Region, as_generator, sample_iid

log = logging.getLogger(__name__)

DEFAULT_REG = 1e-10
TRIVIAL_TOL = 1e-6
COMBO_TOL = 1e-3
COMBO_MAX_ORDER = 4


@dataclass(eq=False)
class OperatorFit:
    """Gram matrices in column-scaled coordinates plus the regression matrix.

    ``scale`` holds the per-column max-abs factors; coefficient vectors
    found in scaled coordinates map back via ``g / scale``.
    """

    G: np.ndarray
    A: np.ndarray
    L: np.ndarray
    K: np.ndarray
    scale: np.ndarray
    dictionary: Dictionary
    dt: float
    n_pairs: int
    reg: float


@dataclass(eq=False)
class Candidate:
    mu: complex
    coeffs: np.ndarray  # over the unscaled dictionary
    residual: float


@dataclass(eq=False)
class Eigenpair:
    lambda_: complex
    mu: complex
    coeffs: np.ndarray
    residual: float
    dictionary: Dictionary
    dt: float

    def __call__(self, X) -> np.ndarray:
        return evaluate_batch(self.dictionary, X) @ self.coeffs

    @property
    def is_complex(self) -> bool:
        return abs(self.lambda_.imag) > 1e-9

    def to_dict(self) -> dict:
        return {
            "lambda": [self.lambda_.real, self.lambda_.imag],
            "mu": [self.mu.real, self.mu.imag],
            "residual": self.residual,
            "coeffs": [[c.real, c.imag] for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict, dictionary: Dictionary, dt: float) -> "Eigenpair":
        coeffs = np.array([complex(re, im) for re, im in d["coeffs"]])
        return cls(complex(*d["lambda"]), complex(*d["mu"]), coeffs, float(d["residual"]), dictionary, dt)


@dataclass
class ErrorField:
    """Extremal log-magnitude and phase spreads of the aligned ratio eps(x).

    ``L_eps_fwd`` is |L^eps(X0, XF)|, ``L_eps_bwd`` is |L^eps(XF, X0)|, and
    likewise for the phase channel. ``source`` is "measured" when computed
    against a reference eigenfunction and "assumed" for user-supplied bounds.
    """

    L_eps_fwd: float
    L_eps_bwd: float
    A_eps_fwd: float
    A_eps_bwd: float
    scale: complex = 1.0 + 0.0j
    source: str = "measured"
    n_skipped: int = 0

    def __post_init__(self):
        vals = (self.L_eps_fwd, self.L_eps_bwd, self.A_eps_fwd, self.A_eps_bwd)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise ValueError(f"error-field bounds must be finite and nonnegative, got {vals}")
        if self.scale == 0:
            raise ValueError("alignment scale must be nonzero")

    @classmethod
    def assumed(cls, L_bound: float, A_bound: float = 0.0) -> "ErrorField":
        return cls(L_bound, L_bound, A_bound, A_bound, source="assumed")

    @property
    def delta_L(self) -> float:
        return max(self.L_eps_fwd, self.L_eps_bwd)

    @property
    def delta_A(self) -> float:
        return max(self.A_eps_fwd, self.A_eps_bwd)

    def to_dict(self) -> dict:
        return {
            "L_eps_fwd": self.L_eps_fwd, "L_eps_bwd": self.L_eps_bwd,
            "A_eps_fwd": self.A_eps_fwd, "A_eps_bwd": self.A_eps_bwd,
            "scale": [self.scale.real, self.scale.imag], "source": self.source,
            "n_skipped": self.n_skipped,
        }


def fit_operator(dataset: SnapshotDataset, dictionary: Dictionary, reg: float = DEFAULT_REG) -> OperatorFit:
    """Least-squares Koopman matrix ``K = (G + reg I)^{-1} A`` on scaled features."""
    if dataset.dimension != dictionary.dimension:
        raise ValueError(f"dataset dimension {dataset.dimension} != dictionary dimension {dictionary.dimension}")
    n = len(dataset)
    if n < dictionary.size:
        log.warning("only %d snapshot pairs for %d dictionary functions", n, dictionary.size)
    PX = evaluate_batch(dictionary, dataset.x)
    PY = evaluate_batch(dictionary, dataset.y)
    if not (np.all(np.isfinite(PX)) and np.all(np.isfinite(PY))):
        raise ConditioningError("dictionary evaluation overflowed on the dataset")
    scale = np.max(np.abs(PX), axis=0)
    scale[scale == 0] = 1.0
    PX = PX / scale
    PY = PY / scale
    G = PX.T @ PX / n
    A = PX.T @ PY / n
    L = PY.T @ PY / n
    if reg == 0:
        rank = np.linalg.matrix_rank(G)
        if rank < dictionary.size:
            raise ConditioningError(
                f"Gram matrix has rank {rank} < {dictionary.size}; pass a positive reg (e.g. {DEFAULT_REG:g})"
            )
    K = np.linalg.solve(G + reg * np.eye(dictionary.size), A)
    return OperatorFit(G, A, L, K, scale, dictionary, dataset.dt, n, reg)


def eigendecompose_with_residuals(fit: OperatorFit) -> list[Candidate]:
    """Eigenpairs of ``K`` with residuals, lowest residual first.

    residual^2 = g*(L - conj(mu) A - mu A^* + |mu|^2 G) g / (g* G g), the
    relative one-step misfit ||Psi_Y g - mu Psi_X g|| / ||Psi_X g||.
    """
    try:
        mus, V = np.linalg.eig(fit.K)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigensolver failed: {exc}") from exc
    G, A, L = fit.G, fit.A, fit.L
    out = []
    for mu, g in zip(mus, V.T):
        num = np.vdot(g, L @ g) - np.conj(mu) * np.vdot(g, A @ g) - mu * np.vdot(g, A.conj().T @ g) \
            + abs(mu) ** 2 * np.vdot(g, G @ g)
        den = np.vdot(g, G @ g).real
        r2 = num.real / den if den > 0 else np.inf
        coeffs = _normalize(g / fit.scale)
        out.append(Candidate(complex(mu), coeffs, float(np.sqrt(max(r2, 0.0)))))
    out.sort(key=lambda c: c.residual)
    return out


def _normalize(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    top = c[np.argmax(np.abs(c))]
    return c / top


def to_continuous(mu: complex, dt: float) -> complex:
    """Principal-branch logarithm divided by ``dt``."""
    if mu == 0:
        raise ValueError("discrete eigenvalue 0 has no logarithm")
    if dt <= 0:
        raise ValueError("dt must be positive")
    return complex(np.log(abs(mu)), np.angle(mu)) / dt


def _to_eigenpair(c: Candidate, fit: OperatorFit) -> Eigenpair:
    return Eigenpair(to_continuous(c.mu, fit.dt), c.mu, c.coeffs, c.residual, fit.dictionary, fit.dt)


def _is_combination(lam: complex, accepted: list[complex]) -> bool:
    if not accepted:
        return False
    m = len(accepted)
    for total in range(1, COMBO_MAX_ORDER + 1):
        for combo in itertools.combinations_with_replacement(range(m), total):
            if abs(lam - sum(accepted[i] for i in combo)) < COMBO_TOL:
                return True
    return False


def select_principal(candidates: list[Candidate], fit: OperatorFit, max_residual: float = np.inf,
                     targets=None, count: int = 2, tol: float = 0.1) -> list[Eigenpair]:
    """Pick principal eigenpairs among the candidates.

    The trivial eigenvalue (mu = 1, the constant function) is always skipped.
    With ``targets``, each target gets the lowest-residual candidate whose
    continuous eigenvalue lies within ``tol``. Otherwise the ``count``
    lowest-residual candidates are taken, skipping any whose eigenvalue is
    a small nonnegative integer combination of ones already taken.
    """
    if not candidates:
        raise ValueError("no candidates to select from")
    pairs = [_to_eigenpair(c, fit) for c in candidates]
    nontrivial = [p for p in pairs if abs(p.lambda_) > TRIVIAL_TOL]
    passing = sorted((p for p in nontrivial if p.residual <= max_residual), key=lambda p: p.residual)
    best = sorted(p.residual for p in nontrivial)[:5]
    if not passing:
        raise SelectionError(f"no nontrivial eigenpair with residual <= {max_residual:g}; best residuals {best}", best)
    chosen: list[Eigenpair] = []
    if targets is not None:
        for target in targets:
            target = complex(target)
            near = [p for p in passing if abs(p.lambda_ - target) <= tol and all(p is not c for c in chosen)]
            if not near:
                closest = min(passing, key=lambda p: abs(p.lambda_ - target))
                raise SelectionError(
                    f"no eigenvalue within {tol:g} of target {target:.4g}; closest is {closest.lambda_:.4g}", best
                )
            chosen.append(near[0])
        return chosen
    accepted: list[complex] = []
    for p in passing:
        if len(chosen) == count:
            break
        if _is_combination(p.lambda_, accepted):
            continue
        chosen.append(p)
        accepted.append(p.lambda_)
    if len(chosen) < count:
        log.warning("only %d independent eigenpairs available (asked for %d)", len(chosen), count)
    return chosen


def learn_eigenpairs(dataset: SnapshotDataset, dictionary: Dictionary, reg: float = DEFAULT_REG, **select):
    fit = fit_operator(dataset, dictionary, reg)
    return select_principal(eigendecompose_with_residuals(fit), fit, **select)


def align_and_error_field(approx, reference, X0: Region, XF: Region, n_val: int = 20_000,
                          seed=None) -> ErrorField:
    """Align ``approx`` to ``reference`` by a complex scale and bound the ratio.

    The scale minimizes sum |c approx(x) - reference(x)|^2 over validation
    points drawn from both sets; eps(x) = c approx(x) / reference(x).
    Points with |reference| below the magnitude floor are skipped.
    """
    rng = as_generator(seed)
    P0 = sample_iid(X0, n_val, rng)
    PF = sample_iid(XF, n_val, rng)
    pts = np.concatenate([P0, PF])
    a = np.asarray(approx(pts), dtype=complex)
    r = np.asarray(reference(pts), dtype=complex)
    ok = np.abs(r) >= MAG_FLOOR
    n_skipped = int(np.count_nonzero(~ok))
    if n_skipped:
        log.warning("skipped %d validation points where the reference vanishes", n_skipped)
    c = np.vdot(a[ok], r[ok]) / np.vdot(a[ok], a[ok]).real
    eps = np.full(len(pts), np.nan + 0j)
    eps[ok] = c * a[ok] / r[ok]
    e0, eF = eps[: len(P0)], eps[len(P0):]
    est0, estF = estimate_on_sets(e0[np.isfinite(e0)], eF[np.isfinite(eF)])
    return ErrorField(
        L_eps_fwd=abs(L_hat(est0, estF)),
        L_eps_bwd=abs(L_hat(estF, est0)),
        A_eps_fwd=abs(A_hat(est0, estF)),
        A_eps_bwd=abs(A_hat(estF, est0)),
        scale=complex(c),
        source="measured",
        n_skipped=n_skipped,
    )
