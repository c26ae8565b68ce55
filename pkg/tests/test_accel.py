import numpy as np
import pytest

from sigtaylor import _accel

backends = ["numba", "numpy"]


def _inputs(rng, P=4, n=30):
    dt = rng.uniform(0.0, 0.1, (P, n))
    dx = rng.standard_normal((P, n)) * 0.3
    return dt, dx


@pytest.mark.parametrize("depth", [1, 3, 5])
def test_fold_backends_agree(depth):
    rng = np.random.default_rng(depth)
    dt, dx = _inputs(rng)
    a = _accel.KERNELS["numba"]["sig_fold"](dt, dx, depth)
    b = _accel.KERNELS["numpy"]["sig_fold"](dt, dx, depth)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


def test_running_and_levels_agree():
    rng = np.random.default_rng(1)
    dt, dx = _inputs(rng, 1, 40)
    for name in ("sig_running", "strat_levels"):
        a = _accel.KERNELS["numba"][name](dt[0], dx[0], 4)
        b = _accel.KERNELS["numpy"][name](dt[0], dx[0], 4)
        assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


def test_chen_product_agree():
    rng = np.random.default_rng(2)
    a = rng.standard_normal(_accel.n_coords(4))
    b = rng.standard_normal(_accel.n_coords(4))
    x = _accel.KERNELS["numba"]["chen_product"](a, b, 4)
    y = _accel.KERNELS["numpy"]["chen_product"](a, b, 4)
    assert np.allclose(x, y)


@pytest.mark.parametrize("backend", backends)
def test_bridge_max_law(backend):
    # a bridge from 0 to 0 with variance dt: P(M > m) = exp(-2 m^2 / dt)
    rng = np.random.default_rng(5)
    n = 200_000
    vals = np.zeros((n, 2))
    u = 1.0 - rng.random((n, 1))
    M = _accel.KERNELS[backend]["bridge_max"](vals, np.array([0.5]), u)
    for m in (0.1, 0.3, 0.6):
        p = np.exp(-2 * m * m / 0.5)
        assert abs(np.mean(M > m) - p) < 4 * np.sqrt(p * (1 - p) / n)


def test_bridge_max_backends_agree():
    rng = np.random.default_rng(6)
    v = np.cumsum(rng.standard_normal((50, 9)), axis=1)
    dt = np.full(8, 0.1)
    u = 1.0 - rng.random((50, 8))
    a = _accel.KERNELS["numba"]["bridge_max"](v, dt, u)
    b = _accel.KERNELS["numpy"]["bridge_max"](v, dt, u)
    assert np.allclose(a, b)
    assert np.all(a >= v.max(axis=1))
