import numpy as np
import pytest

from koopreach.dynamics import SystemModel, example1_system, generate_snapshots
from koopreach.harness.pipeline import learn_model
from koopreach.regions import Box


def linear_system(D, name="linear", half_width=2.0):
    """x' = D x on a box around the origin."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    return SystemModel(name, n, lambda x: x @ D.T, Box(-half_width * np.ones(n), half_width * np.ones(n)))


@pytest.fixture(scope="session")
def example1_dataset():
    sys_ = example1_system()
    return generate_snapshots(sys_, sys_.domain, 1000, 10, 0.05, seed=7)


@pytest.fixture(scope="session")
def example1_model(example1_dataset):
    return learn_model(example1_dataset, 6, targets=[-1.0, 2.5])


def _L(values_from, values_to):
    return np.log(np.abs(values_to)).max() - np.log(np.abs(values_from)).min()


def _A(values_from, values_to):
    return np.angle(values_to).max() - np.angle(values_from).min()


def envelope_trial(seed, n_grid=4000):
    """Random boxes W, V; psi~ = psi (1 + 0.01 x1) e^{0.05 i x2}; dense-grid check of the envelopes."""
    from koopreach.guarantees import model_error_envelope, model_error_envelope_phase
    from koopreach.regions import grid_points
    from koopreach.spectral import ErrorField

    rng = np.random.default_rng(seed)
    boxes = []
    for _ in range(2):
        lo = rng.uniform(-1.0, 0.5, 2)
        boxes.append(Box(lo, lo + rng.uniform(0.1, 0.5, 2)))
    W, V = (grid_points(b, n_grid) for b in boxes)
    psi = lambda X: (X[:, 0] + 3.0 + 0.5j * X[:, 1]) * np.exp(0.3 * X[:, 1])
    eps = lambda X: (1.0 + 0.01 * X[:, 0]) * np.exp(0.05j * X[:, 1])
    tilde = lambda X: psi(X) * eps(X)
    ef = ErrorField(abs(_L(eps(W), eps(V))), abs(_L(eps(V), eps(W))),
                    abs(_A(eps(W), eps(V))), abs(_A(eps(V), eps(W))))
    ok = True
    for direction, (a, b) in (("fwd", (W, V)), ("bwd", (V, W))):
        lo, hi = model_error_envelope(_L(tilde(a), tilde(b)), ef, direction)
        ok &= lo - 1e-12 <= _L(psi(a), psi(b)) <= hi + 1e-12
        lo, hi = model_error_envelope_phase(_A(tilde(a), tilde(b)), ef, direction)
        ok &= lo - 1e-12 <= _A(psi(a), psi(b)) <= hi + 1e-12
    return bool(ok)


def random_interval(rng, t_max=10.0):
    a, b = np.sort(rng.uniform(0, t_max, 2))
    return (float(a), float(b))
