"""Learning and verification pipelines shared by the CLI, benchmarks and experiments."""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import __version__
from ..dynamics import SnapshotDataset
from ..extrema import (L_hat, A_hat, MAG_FLOOR, circular_mean, estimate_on_sets, plan_sampling, wrap_to)
from ..guarantees import certify, delta_bound
from ..observables import build_dictionary
from ..reachtime import EigenpairQuantities, enumerate_combos, verify
from ..regions import as_generator, estimate_eps_measure, sample_iid
from ..spectral import (DEFAULT_REG, ErrorField, align_and_error_field, eigendecompose_with_residuals,
                        fit_operator, select_principal)
from .persistence import KoopmanModel, dataset_hash

log = logging.getLogger(__name__)

PHASE_RULE = "[-A(XF,X0), A(X0,XF)]"


@dataclass
class VerifyConfig:
    delta: float = 0.1
    eps: float | None = 0.02
    n_samples: int = 5000
    max_weight: int = 3
    t_max: float | None = None
    n_probe: int = 10_000
    n_val: int = 20_000
    assumed_L: float = 0.0
    assumed_A: float = 0.0
    inflation: float = 0.0

    @classmethod
    def from_dict(cls, d: dict | None) -> "VerifyConfig":
        d = dict(d or {})
        known = {k: d.pop(k) for k in list(d) if k in cls.__dataclass_fields__}
        if d:
            raise ValueError(f"unknown verify options: {sorted(d)}")
        return cls(**known)


def learn_model(dataset: SnapshotDataset, degree: int, targets=None, max_residual: float = math.inf,
                count: int = 2, tol: float = 0.1, reg: float = DEFAULT_REG) -> KoopmanModel:
    dictionary = build_dictionary(dataset.dimension, degree)
    fit = fit_operator(dataset, dictionary, reg)
    candidates = eigendecompose_with_residuals(fit)
    pairs = select_principal(candidates, fit, max_residual=max_residual, targets=targets, count=count, tol=tol)
    prov = {"seed": dataset.seed, "n_pairs": len(dataset), "reg": reg, "system": dataset.system,
            "dataset_hash": dataset_hash(dataset), "degree": degree}
    return KoopmanModel(dictionary, dataset.dt, pairs, prov)


def _channels(pair, pooled_values):
    """Scalar fields whose extrema enter the reach-time bounds for one eigenpair."""
    chans = [lambda P: np.log(np.maximum(np.abs(pair(P)), MAG_FLOOR))]
    if abs(pair.lambda_.imag) > 1e-9:
        center = circular_mean(np.angle(pooled_values))
        chans.append(lambda P, c=center: wrap_to(np.angle(pair(P)), c))
    return chans


def _probe_gaps(eigenpairs, regions, n_probe, rng):
    """Distance-to-extremum samples for every (eigenpair, set, channel, sup/inf)."""
    probes = [sample_iid(r, n_probe, rng) for r in regions]
    gaps = []
    for p in eigenpairs:
        vals = [p(P) for P in probes]
        for chan in _channels(p, np.concatenate(vals)):
            for P in probes:
                v = chan(P)
                gaps.append(v.max() - v)
                gaps.append(v - v.min())
    return gaps


def plugin_p_eps(eigenpairs, regions, eps: float, n_probe: int, seed) -> float:
    """Smallest plug-in eps-optimal measure across all extrema (tolerance eps/2 each)."""
    rng = as_generator(seed)
    probe_seed = int(rng.integers(2**31))
    vals = []
    for p in eigenpairs:
        pooled = np.concatenate([p(sample_iid(r, 1000, probe_seed)) for r in regions])
        for chan in _channels(p, pooled):
            for r in regions:
                for which in ("sup", "inf"):
                    vals.append(estimate_eps_measure(r, chan, eps / 2, which, n_probe, probe_seed))
    return min(vals)


def eps_for_samples(eigenpairs, regions, n: int, sigma: float, n_probe: int, seed) -> float:
    """Smallest tolerance that ``n`` samples per set certify at per-extremum risk ``sigma``.

    Each extremum needs a plug-in measure of at least 1 - sigma^(1/n); the
    matching half-tolerance is that quantile of the probe gaps.
    """
    p_needed = 1.0 - sigma ** (1.0 / n)
    gaps = _probe_gaps(eigenpairs, regions, n_probe, as_generator(seed))
    half = max(float(np.quantile(g[np.isfinite(g)], min(1.0, p_needed))) for g in gaps)
    return 2.0 * half


def quantities_for(eigenpairs, P0, PF) -> list[EigenpairQuantities]:
    out = []
    for p in eigenpairs:
        e0, eF = estimate_on_sets(p(P0), p(PF))
        out.append(EigenpairQuantities(complex(p.lambda_), L_hat(e0, eF), L_hat(eF, e0), A_hat(e0, eF), A_hat(eF, e0)))
    return out


def match_reference(lam: complex, references):
    return min(references, key=lambda r: abs(complex(r.lambda_) - lam))


@dataclass
class VerificationReport:
    verdict: str
    final: list
    t_max: float
    eigenpairs: list
    combos: list
    guarantee: dict
    sampling: dict
    provenance: dict
    assumptions: list
    statement: str
    phase_rule: str = PHASE_RULE
    metadata: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(**d)

    def payload(self) -> dict:
        """Report content minus wall-clock timings, for reproducibility checks."""
        d = self.to_dict()
        d.pop("timings")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def verify_model(model: KoopmanModel, X0, XF, config: VerifyConfig | None = None, seed: int = 0,
                 references=None) -> VerificationReport:
    """Sample plan, extrema, intervals, verdict and error budget for one model.

    ``references`` are exact (or higher-fidelity) eigenpairs; when given,
    each learned eigenpair's error field is measured against the nearest
    one. Otherwise the configured assumed bounds are used and flagged.
    """
    cfg = config or VerifyConfig()
    timings = {}
    t0 = time.perf_counter()
    pairs = model.eigenpairs
    m = len(pairs)
    rng = np.random.default_rng(seed)
    seeds = rng.integers(2**31, size=4)
    regions = (X0, XF)

    n_extrema = 8
    sigma = cfg.delta / m / n_extrema
    if cfg.eps is None:
        eps = eps_for_samples(pairs, regions, cfg.n_samples, sigma, cfg.n_probe, int(seeds[0]))
        p_eps = 1.0 - sigma ** (1.0 / cfg.n_samples)
    else:
        eps = cfg.eps
        p_eps = plugin_p_eps(pairs, regions, eps, cfg.n_probe, int(seeds[0]))
    plan = plan_sampling(cfg.delta, m, p_eps, n_extrema, eps=eps)
    n = max(plan.n_required, cfg.n_samples)
    timings["plan"] = time.perf_counter() - t0

    P0 = sample_iid(X0, n, int(seeds[1]))
    PF = sample_iid(XF, n, int(seeds[2]))
    qs = quantities_for(pairs, P0, PF)
    timings["extrema"] = time.perf_counter() - t0

    t_max = cfg.t_max
    if t_max is None:
        t_max = 10.0 / min(max(abs(q.lambda_.real), 1e-9) for q in qs)
    combos = enumerate_combos(m, cfg.max_weight)
    result = verify(qs, combos, t_max, cfg.inflation)
    timings["intervals"] = time.perf_counter() - t0

    assumptions = [
        f"sampling guarantee conditional on P_eps >= {p_eps:.4g} (plug-in estimate from {cfg.n_probe} probe samples per set)",
        "eigenvalues treated as exact (delta_lambda = 0)",
        "phase windows Im(lambda) T in [-A(XF,X0), A(X0,XF)] + 2 m pi",
    ]
    fields = []
    for p in pairs:
        if references:
            ref = match_reference(complex(p.lambda_), references)
            ef = align_and_error_field(p, ref, X0, XF, cfg.n_val, int(seeds[3]))
        else:
            ef = ErrorField.assumed(cfg.assumed_L, cfg.assumed_A)
        fields.append(ef)
    if references:
        assumptions.append("error fields measured against reference eigenfunctions on validation samples")
    else:
        assumptions.append(f"error fields assumed: L <= {cfg.assumed_L:g}, A <= {cfg.assumed_A:g} (not measured)")
    budget = delta_bound([(p.lambda_, ef) for p, ef in zip(pairs, fields)], eps, cfg.delta)
    statement = certify(result.final, budget, assumptions)
    timings["budget"] = time.perf_counter() - t0

    eig_rows = []
    for p, q, ef in zip(pairs, qs, fields):
        eig_rows.append({
            "lambda": [p.lambda_.real, p.lambda_.imag],
            "residual": p.residual,
            "L_fwd": q.L_fwd, "L_bwd": q.L_bwd, "A_fwd": q.A_fwd, "A_bwd": q.A_bwd,
            "error_field": ef.to_dict(),
        })
    guarantee = budget.to_dict()
    guarantee["assumptions"] = list(assumptions)
    prov = dict(model.provenance)
    prov.update({"verify_seed": seed, "n_samples": n, "version": __version__})
    return VerificationReport(
        verdict=result.verdict.value,
        final=result.final.to_list(),
        t_max=t_max,
        eigenpairs=eig_rows,
        combos=[c.to_dict() for c in result.combos],
        guarantee=guarantee,
        sampling=plan.to_dict(),
        provenance=prov,
        assumptions=assumptions,
        statement=statement.text,
        timings=timings,
    )
