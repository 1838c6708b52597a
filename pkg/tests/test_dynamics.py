import math

import numpy as np
import pytest

from koopreach import dynamics
from koopreach.dynamics import (analytic_eigenpairs_example1, duffing_system, example1_system, first_entry_times,
                                generate_snapshots, get_system, integrate_flow, roessler_system)
from koopreach.errors import DivergenceError, SingularJacobianError
from koopreach.regions import Box, sample_iid

from conftest import linear_system


def fd_jacobian(system, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    J = np.empty((len(x), len(x)))
    for j in range(len(x)):
        e = np.zeros(len(x))
        e[j] = h
        J[:, j] = (system(x + e) - system(x - e)) / (2 * h)
    return J


def test_exponential_decay():
    sys_ = linear_system([[-1.0]])
    x = integrate_flow(sys_, [1.0], 1.0, 1e-3)
    assert x[0] == pytest.approx(math.exp(-1), abs=1e-6)


def test_partial_final_step():
    sys_ = linear_system([[-1.0]])
    x = integrate_flow(sys_, [1.0], 0.255, 0.01)
    assert x[0] == pytest.approx(math.exp(-0.255), abs=1e-9)


def test_zero_time_is_identity():
    sys_ = duffing_system()
    np.testing.assert_array_equal(integrate_flow(sys_, [0.3, -0.2], 0.0), [0.3, -0.2])


@pytest.mark.parametrize("t", [0.7, 3.0, 10.0])
def test_duffing_equilibrium_fixed(t):
    np.testing.assert_array_equal(integrate_flow(duffing_system(), [1.0, 0.0], t), [1.0, 0.0])


def test_roessler_step_self_consistency():
    sys_ = roessler_system()
    coarse = integrate_flow(sys_, [0.0, -8.5, 0.0], 1.0, 1e-3)
    fine = integrate_flow(sys_, [0.0, -8.5, 0.0], 1.0, 1e-5)
    assert np.max(np.abs(coarse - fine)) < 1e-4


@pytest.mark.parametrize("system, x0", [
    (example1_system(), [0.3, 0.2]),
    (duffing_system(), [1.5, 0.5]),
    (roessler_system(), [0.0, -8.5, 0.0]),
])
def test_fourth_order_convergence(system, x0):
    ref = integrate_flow(system, x0, 1.0, 1e-4)
    steps = np.array([0.1, 0.05, 0.025])
    errs = [np.max(np.abs(integrate_flow(system, x0, 1.0, h) - ref)) for h in steps]
    slope = np.polyfit(np.log(steps), np.log(errs), 1)[0]
    assert slope >= 3.5


def test_batched_integration_matches_rows():
    sys_ = duffing_system()
    X = np.array([[1.2, 0.3], [0.7, -0.4], [1.0, 1.0]])
    batch = integrate_flow(sys_, X, 0.5)
    for x, b in zip(X, batch):
        np.testing.assert_array_equal(integrate_flow(sys_, x, 0.5), b)


def test_divergence_reports_time():
    sys_ = linear_system([[0.0]], name="blowup")
    sys_ = dynamics.SystemModel("blowup", 1, lambda x: x**2, sys_.domain)
    with pytest.raises(DivergenceError) as info:
        integrate_flow(sys_, [1.0], 2.0, 1e-2)
    assert 0.9 < info.value.time <= 2.0


def test_bad_arguments():
    sys_ = duffing_system()
    with pytest.raises(ValueError):
        integrate_flow(sys_, [1.0, 0.0], -1.0)
    with pytest.raises(ValueError):
        integrate_flow(sys_, [1.0, 0.0], 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_flow(sys_, [1.0, 0.0, 0.0], 1.0)


def test_example1_snapshot_count(example1_dataset):
    ds = example1_dataset
    assert len(ds) == 10_000
    assert ds.n_dropped == 0
    assert ds.dt == 0.05


def test_snapshots_match_integrator_exactly(example1_dataset):
    ds = example1_dataset
    sys_ = example1_system()
    y = integrate_flow(sys_, ds.x[:500], ds.dt, ds.meta["step"])
    np.testing.assert_array_equal(y, ds.y[:500])


def test_single_linear_pair():
    sys_ = linear_system([[-1.0]])
    ds = generate_snapshots(sys_, Box([0.5], [1.5]), 1, 1, 0.1, seed=3)
    assert len(ds) == 1
    assert ds.y[0, 0] == pytest.approx(ds.x[0, 0] * math.exp(-0.1), abs=1e-8)


def test_snapshots_chain_along_trajectories():
    sys_ = duffing_system()
    ds = generate_snapshots(sys_, Box([0.6, -0.4], [1.4, 1.1]), 5, 4, 0.1, seed=1)
    x = ds.x.reshape(5, 4, 2)
    y = ds.y.reshape(5, 4, 2)
    np.testing.assert_array_equal(x[:, 1:], y[:, :-1])


def test_snapshots_deterministic():
    sys_ = duffing_system()
    a = generate_snapshots(sys_, sys_.domain, 50, 5, 0.1, seed=11)
    b = generate_snapshots(sys_, sys_.domain, 50, 5, 0.1, seed=11)
    c = generate_snapshots(sys_, sys_.domain, 50, 5, 0.1, seed=12)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    assert not np.array_equal(a.x, c.x)


def test_guard_box_drops_whole_trajectories():
    sys_ = linear_system([[1.0]], half_width=1.0)
    ds = generate_snapshots(sys_, Box([-1.0], [1.0]), 200, 5, 0.3, seed=0, guard=Box([-2.0], [2.0]))
    assert ds.n_dropped > 0
    assert ds.n_dropped % 5 == 0
    assert len(ds) + ds.n_dropped == 1000
    assert np.all(np.abs(ds.y) <= 2.0)


def test_example1_equilibrium():
    np.testing.assert_array_equal(example1_system()([0.0, 0.0]), [0.0, 0.0])


def test_example1_linearization_spectrum():
    eig = np.sort(np.linalg.eigvals(fd_jacobian(example1_system(), [0.0, 0.0])).real)
    np.testing.assert_allclose(eig, [-1.0, 2.5], atol=1e-6)


def test_duffing_linearization_spectrum():
    eig = np.linalg.eigvals(fd_jacobian(duffing_system(), [1.0, 0.0]))
    eig = sorted(eig, key=lambda z: z.imag)
    assert eig[0] == pytest.approx(complex(-0.25, -1.39194), abs=1e-5)
    assert eig[1] == pytest.approx(complex(-0.25, 1.39194), abs=1e-5)


def test_example1_singular_jacobian(monkeypatch):
    # the Jacobian determinant is bounded away from zero on real states, so raise the threshold
    monkeypatch.setattr(dynamics, "SINGULAR_DET", 1e3)
    with pytest.raises(SingularJacobianError):
        example1_system()([0.5, 0.5])


def test_analytic_values():
    psi1, psi2 = analytic_eigenpairs_example1()
    assert psi1.lambda_ == -1 and psi2.lambda_ == 2.5
    assert psi1([0.0, 0.0]) == 0.0
    assert psi2([1.0, 0.0]) == pytest.approx(2.0)


def test_analytic_eigen_equation():
    sys_ = example1_system()
    X = sample_iid(sys_.domain, 1000, 0)
    h = 1e-6
    for pair in analytic_eigenpairs_example1():
        grad = np.stack([(pair(X + h * e) - pair(X - h * e)) / (2 * h) for e in np.eye(2)], axis=-1)
        lhs = np.sum(grad * sys_(X), axis=1)
        psi = pair(X)
        assert np.all(np.abs(lhs - pair.lambda_.real * psi) <= 1e-4 * (1 + np.abs(psi)))


def test_analytic_eigenfunction_along_flow():
    sys_ = example1_system()
    psi1 = analytic_eigenpairs_example1()[0]
    X = sample_iid(Box([0.5, 0.2], [1.0, 0.6]), 20, 1)
    for t in (0.1, 0.25, 0.5):
        ratio = psi1(integrate_flow(sys_, X, t)) / psi1(X)
        np.testing.assert_allclose(ratio, math.exp(-t), atol=1e-3)


def test_first_entry_growth():
    sys_ = linear_system([[1.0]], half_width=10.0)
    times = first_entry_times(sys_, [[1.0]], Box([math.e], [100.0]), 2.0, 1e-3)
    assert times[0] == pytest.approx(1.0, abs=1e-3 + 1e-9)


def test_first_entry_at_start_and_never():
    sys_ = linear_system([[-1.0]])
    target = Box([0.5], [2.0])
    times = first_entry_times(sys_, [[1.0], [0.1]], target, 1.0)
    assert times == [0.0, None]


def test_first_entry_divergence_flagged():
    sys_ = dynamics.SystemModel("blowup", 1, lambda x: x**2, Box([-1.0], [1.0]))
    times, flags = first_entry_times(sys_, [[1.0]], Box([-5.0], [-4.0]), 2.0, 1e-2, return_flags=True)
    assert times == [None]
    assert flags[0]


def test_duffing_entry_times_in_baseline():
    sys_ = duffing_system()
    X0 = sample_iid(Box([1.0, 1.0], [1.1, 1.1]), 500, 5)
    times = first_entry_times(sys_, X0, Box([0.6, 0.2], [0.7, 0.3]), 5.0)
    hits = [t for t in times if t is not None]
    assert len(hits) == 500
    assert 3.57 - 0.1 <= min(hits) and max(hits) <= 4.15 + 0.1


def test_get_system():
    assert get_system("roessler").dimension == 3
    with pytest.raises(ValueError):
        get_system("lorenz")
