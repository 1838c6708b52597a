import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from koopreach.dynamics import analytic_eigenpairs_example1
from koopreach.errors import BranchMismatchError, DegenerateEigenfunctionError
from koopreach.extrema import (A_hat, L_hat, circular_mean, estimate_extrema, estimate_on_sets, plan_sampling,
                               required_samples, wrap_to)
from koopreach.regions import Box, bump_sublevel, grid_points, sample_iid


def rotation_eigenfunction(X):
    """x1 + i x2 is an exact eigenfunction of x' = [[a, -b], [b, a]] x."""
    return X[:, 0] + 1j * X[:, 1]


def test_magnitude_extrema():
    est = estimate_extrema([1, math.e, math.e**2])
    assert est.sup_log_mag == pytest.approx(2.0)
    assert est.inf_log_mag == pytest.approx(0.0)


def test_phase_extrema():
    est = estimate_extrema(np.exp(1j * np.array([0.1, 0.3])))
    assert est.sup_phase == pytest.approx(0.3)
    assert est.inf_phase == pytest.approx(0.1)


def test_phase_across_branch_cut():
    est = estimate_extrema(np.exp(1j * np.array([3.1, -3.1])))
    assert est.sup_phase - est.inf_phase == pytest.approx(2 * math.pi - 6.2, abs=1e-12)


def test_degenerate_values():
    with pytest.raises(DegenerateEigenfunctionError):
        estimate_extrema([0.0, 1e-14])
    est = estimate_extrema([0.0, 1.0, 2.0])
    assert est.n_skipped == 1 and est.n_samples == 2


def test_wrap_to_window():
    c = 2.0
    w = wrap_to(np.linspace(-20, 20, 1001), c)
    assert np.all(w > c - math.pi) and np.all(w <= c + math.pi)
    np.testing.assert_allclose(np.exp(1j * w), np.exp(1j * np.linspace(-20, 20, 1001)), atol=1e-12)
    assert wrap_to([c - math.pi], c)[0] == pytest.approx(c + math.pi)


def test_circular_mean():
    assert circular_mean([3.1, -3.1]) == pytest.approx(math.pi, abs=1e-12)
    assert circular_mean([0.1, 0.3]) == pytest.approx(0.2)


def test_L_hat_examples():
    a = estimate_extrema([2.0, 2.0])
    assert L_hat(a, a) == 0.0
    w = estimate_extrema([1.0, 2.0])
    v = estimate_extrema([1.5, math.e])
    assert L_hat(w, v) == pytest.approx(1.0)
    assert L_hat(v, w) == pytest.approx(math.log(2.0) - math.log(1.5))


def test_A_hat_same_set():
    vals = np.exp(1j * np.array([0.2, 0.5, 0.9]))
    a, b = estimate_on_sets(vals, vals)
    assert A_hat(a, b) == pytest.approx(0.7)


def test_A_hat_branch_mismatch():
    a = estimate_extrema(np.exp(1j * np.array([0.2, 0.5])), branch_center=0.0)
    b = estimate_extrema(np.exp(1j * np.array([0.2, 0.5])), branch_center=0.1)
    with pytest.raises(BranchMismatchError):
        A_hat(a, b)


@settings(max_examples=50, deadline=None)
@given(theta=st.floats(-10, 10), scale=st.floats(0.01, 100), seed=st.integers(0, 10_000))
def test_invariance_under_complex_scaling(theta, scale, seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.5, 2, 40) * np.exp(1j * rng.uniform(-1, 1, 40))
    v = rng.uniform(0.5, 2, 40) * np.exp(1j * rng.uniform(-1, 1, 40))
    c = scale * np.exp(1j * theta)
    a0, b0 = estimate_on_sets(u, v)
    a1, b1 = estimate_on_sets(c * u, c * v)
    assert L_hat(a1, b1) == pytest.approx(L_hat(a0, b0), abs=1e-12)
    assert L_hat(b1, a1) == pytest.approx(L_hat(b0, a0), abs=1e-12)
    assert A_hat(a1, b1) == pytest.approx(A_hat(a0, b0), abs=1e-12)
    assert A_hat(b1, a1) == pytest.approx(A_hat(b0, a0), abs=1e-12)


def test_dense_grid_oracle_example1():
    X0 = bump_sublevel(0.05, 1.15, 1, 2, 0.05, -0.1)
    XF = bump_sublevel(1.85, -0.75, 5, 8, 0.1, -0.7)
    G0, GF = grid_points(X0, 10**6), grid_points(XF, 10**6)
    S0, SF = sample_iid(X0, 100_000, 1), sample_iid(XF, 100_000, 2)
    for psi in analytic_eigenpairs_example1():
        g0, gf = estimate_on_sets(psi(G0), psi(GF))
        s0, sf = estimate_on_sets(psi(S0), psi(SF))
        assert abs(L_hat(s0, sf) - L_hat(g0, gf)) <= 1e-3
        assert abs(L_hat(sf, s0) - L_hat(gf, g0)) <= 1e-3


def test_dense_grid_oracle_phase():
    X0, XF = Box([1.0, 0.2], [1.3, 0.6]), Box([-0.4, 0.9], [0.1, 1.2])
    G0, GF = grid_points(X0, 10**6), grid_points(XF, 10**6)
    g0, gf = estimate_on_sets(rotation_eigenfunction(G0), rotation_eigenfunction(GF))
    s0, sf = estimate_on_sets(rotation_eigenfunction(sample_iid(X0, 100_000, 3)),
                              rotation_eigenfunction(sample_iid(XF, 100_000, 4)))
    for est, ref in ((A_hat(s0, sf), A_hat(g0, gf)), (A_hat(sf, s0), A_hat(gf, g0)),
                     (L_hat(s0, sf), L_hat(g0, gf)), (L_hat(sf, s0), L_hat(gf, g0))):
        assert abs(est - ref) <= 2e-3


def test_one_sided_nested_samples():
    X0 = bump_sublevel(0.05, 1.15, 1, 2, 0.05, -0.1)
    XF = bump_sublevel(1.85, -0.75, 5, 8, 0.1, -0.7)
    G0, GF = grid_points(X0, 10**6), grid_points(XF, 10**6)
    S0, SF = sample_iid(X0, 20_000, 5), sample_iid(XF, 20_000, 6)
    for psi in analytic_eigenpairs_example1():
        true = estimate_on_sets(psi(np.concatenate([G0, S0])), psi(np.concatenate([GF, SF])))
        prev = None
        for n in (50, 500, 5000, 20_000):
            est = estimate_on_sets(psi(S0[:n]), psi(SF[:n]))
            cur = (L_hat(*est), L_hat(est[1], est[0]))
            assert cur[0] <= L_hat(*true) and cur[1] <= L_hat(true[1], true[0])
            if prev is not None:
                assert cur[0] >= prev[0] and cur[1] >= prev[1]
            prev = cur


def test_one_sided_phase_fixed_center():
    X0, XF = Box([1.0, 0.2], [1.3, 0.6]), Box([-0.4, 0.9], [0.1, 1.2])
    S0, SF = sample_iid(X0, 20_000, 7), sample_iid(XF, 20_000, 8)
    v0, vF = rotation_eigenfunction(S0), rotation_eigenfunction(SF)
    c = circular_mean(np.angle(np.concatenate([v0, vF])))
    full = A_hat(estimate_extrema(v0, c), estimate_extrema(vF, c))
    prev = -np.inf
    for n in (50, 500, 5000):
        cur = A_hat(estimate_extrema(v0[:n], c), estimate_extrema(vF[:n], c))
        assert prev <= cur <= full
        prev = cur


@pytest.mark.parametrize("sigma, p, n", [(0.5, 0.5, 1), (0.05, 0.01, 299), (0.01, 0.1, 44), (0.05, 0.05, 59)])
def test_required_samples(sigma, p, n):
    assert required_samples(sigma, p) == n


def test_required_samples_domain():
    assert required_samples(0.1, 1.0) == 1
    for bad in ((0.1, 0.0), (0.1, -0.2), (0.0, 0.5), (1.0, 0.5), (0.1, 1.5)):
        with pytest.raises(ValueError):
            required_samples(*bad)


def test_plan_sampling():
    plan = plan_sampling(0.2, 1, 0.05)
    assert plan.per_extremum_sigma == pytest.approx(0.025)
    assert plan.n_required == 72
    assert plan_sampling(0.2, 2, 0.05).n_required > plan.n_required
    assert plan_sampling(0.999, 1, 1.0).n_required == 1
    with pytest.raises(ValueError):
        plan_sampling(1.0, 1, 0.5)


def test_sup_coverage_small():
    # uniform x on [0, 1]: the eps-optimal mass of the sup is exactly eps
    sigma, eps = 0.05, 0.05
    n = required_samples(sigma, eps)
    rng = np.random.default_rng(0)
    misses = np.mean(rng.uniform(size=(2000, n)).max(axis=1) < 1 - eps)
    assert misses <= sigma + 0.02
