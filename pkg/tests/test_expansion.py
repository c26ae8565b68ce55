import numpy as np
import pytest

from sigtaylor.expansion import (chaos_coeffs, chaos_reconstruct, chaos_to_signature, fte,
                                 fte_backward, gaussian_price_functional, ive_expand,
                                 ive_kernel_reconstruct, maclaurin, radius_estimate,
                                 remainder_bound, remainder_bound_lip, sig_lipschitz_bound,
                                 word_identity_check)
from sigtaylor.funcderiv import (DiffConfig, Functional, OrderError, exp_of, sig_coordinate,
                                 sig_linear, terminal, time_integral)
from sigtaylor.pathcore import Path, PathError, random_lipschitz_path, refine
from sigtaylor.signature import signature
from sigtaylor.words import enumerate_words


def test_fte_exact_on_signature_span(paths):
    f = sig_linear({"": 0.5, "1": 1.0, "01": -2.0, "110": 3.0})
    for X in paths[:3]:
        Y = random_lipschitz_path(np.random.default_rng(1), 5, 0.5)
        r = fte(f, X, Y, 4)
        assert r.remainder == pytest.approx(0.0, abs=1e-9)
        m = maclaurin(f, X, 4)
        assert m.truncation == pytest.approx(f(X), abs=1e-9)
        assert m.partial(4) == pytest.approx(m.truncation)
        assert len(m.table()) == len(enumerate_words(3))


def test_fte_rejects_jumpy_perturbation():
    X = Path([0, 1], [0, 1])
    Y = Path([0, 0.5, 0.5, 1], [0, 0, 1, 1])
    with pytest.raises(PathError):
        fte(sig_coordinate("1"), X, Y, 2)
    with pytest.raises(ValueError):
        fte(sig_coordinate("1"), X, Path([0, 1], [0, 0]), 0)


@pytest.mark.parametrize("w", ["0", "1", "10", "011", "0101"])
def test_backward_expansion_signs(w, rng):
    X = random_lipschitz_path(rng, 8, 1.0, 0.5)
    f = sig_coordinate(w)
    r = fte_backward(f, X, 0.4, 0.9, len(w) + 1)
    assert r.remainder == pytest.approx(0.0, abs=1e-9)


def test_maclaurin_remainder_shrinks_smooth():
    X = random_lipschitz_path(np.random.default_rng(3), 6, 0.3, 0.3)
    f = exp_of(terminal(lambda x: x, relative=True))
    rems = [abs(maclaurin(f, X, K).remainder) for K in range(1, 5)]
    assert all(b < a for a, b in zip(rems[:-1], rems[1:]))


def test_remainder_bound_components():
    X = Path([0, 0.2, 0.4], [0.0, 0.3, -0.1])
    f = exp_of(terminal(lambda x: x, relative=True))
    rb = remainder_bound(f, X, 2)
    # t = 0.4 and sup |x - x0| = 0.3 give rho = 0.8
    assert rb.rho == pytest.approx(0.8)
    assert set(rb.per_word) == {"00", "01", "10", "11"}
    assert rb.CK_rhoK == pytest.approx(rb.CK * 0.64)
    assert rb.bound <= rb.total
    assert abs(maclaurin(f, X, 2).remainder) <= rb.total


def test_lipschitz_bounds_and_radius():
    Y = Path([0, 0.5], [0, 1.0])        # Lip 2
    assert remainder_bound_lip(1.0, 1.0, Y, 3) == pytest.approx(2.0 ** 3)
    assert sig_lipschitz_bound(Y, "011") == pytest.approx(4 * 0.125 / 6)
    assert radius_estimate(2.0, 1.5) == 0.0
    assert radius_estimate(2.0, 1.0) == float("inf")
    assert radius_estimate(2.0, 0.5) == pytest.approx(0.25)
    assert radius_estimate(0.1, 0.5) == pytest.approx(1.0)


def test_ive_signature_coordinate_homogeneous():
    # S_w depends on x only through |w|_1 increments: only that order survives
    X = refine(random_lipschitz_path(np.random.default_rng(5), 3, 1.0, 0.6, uneven=False), 4)
    f = sig_coordinate("01")
    r = ive_expand(f, X, 3, DiffConfig(use_exact=False))
    assert r.base_value == pytest.approx(0.0, abs=1e-12)
    assert r.order_terms[1] == pytest.approx(0.0, abs=1e-6)
    assert r.order_terms[0] == pytest.approx(f(X), rel=2e-2)


def test_ive_terminal_value_exact():
    X = refine(random_lipschitz_path(np.random.default_rng(6), 4, 1.0), 3)
    g = Functional(lambda P: P.x_end, "x_T")
    r = ive_expand(g, X, 2)
    assert r.residual == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(OrderError):
        ive_expand(g, X, 5)


def test_ive_square_of_average_converges():
    g = Functional(lambda P: time_integral(lambda x: x, relative=True)(P) ** 2, "(int x)^2")
    X = random_lipschitz_path(np.random.default_rng(8), 3, 1.0, 0.8, uneven=False)
    res = [abs(ive_expand(g, refine(X, m), 3).residual) for m in (3, 6)]
    assert res[1] < res[0] / 3


def test_kernel_reconstruction():
    T = 1.0
    f = time_integral(lambda x: x, relative=True)
    # D_t of int x is T - t
    for t1 in (0.0, 0.3, 0.8):
        assert ive_kernel_reconstruct(f, T, [t1], 3) == pytest.approx(T - t1, abs=1e-6)
    g = Functional(lambda P: time_integral(lambda x: x, relative=True)(P) * (P.x_end - P.x0), "int x x_T")
    # second kernel at t1 <= t2: (T - t1) + (T - t2)
    v = ive_kernel_reconstruct(g, T, [0.2, 0.5], 4)
    assert v == pytest.approx(0.8 + 0.5, abs=1e-3)


def test_chaos_polynomials():
    T = 0.7
    c3 = chaos_coeffs([0, 0, 0, 1], 1.0, T, 5)
    assert np.allclose(c3, [0, 3 * T, 0, 6, 0, 0])
    c2 = chaos_coeffs([0, 0, 1], 1.0, T, 3)
    assert np.allclose(c2, [T, 0, 2, 0])
    assert np.allclose(chaos_coeffs([2.5], 1.0, T, 2), [2.5, 0, 0])
    h = lambda x: x ** 3
    assert np.allclose(chaos_coeffs(h, 1.0, T, 5, method="hermite"), c3, atol=1e-10)
    with pytest.raises(ValueError):
        chaos_coeffs(np.exp, 1.0, T, 2, method="exact")


def test_chaos_reconstruct_polynomial_and_signature_form():
    T = 0.6
    c2 = chaos_coeffs([0, 0, 1], 1.0, T, 2)
    for x in (-1.0, 0.3, 2.0):
        assert chaos_reconstruct(c2, T, x) == pytest.approx(x * x)
    wp = chaos_to_signature(c2)
    X = Path([0, 0.2, 0.6], [0, 0.5, -0.4])
    S = signature(X, 2)
    # the word combination matches x_T^2 - (T - t) at t = T
    assert wp.evaluate(S) == pytest.approx(X.x_end ** 2, abs=1e-12)
    # independent of the route taken to the same endpoint
    X2 = Path([0, 0.3, 0.6], [0, -0.7, -0.4])
    assert wp.evaluate(signature(X2, 2)) == pytest.approx(wp.evaluate(S), abs=1e-12)


def test_chaos_sigma_scaling():
    T, s = 0.5, 0.7
    c = chaos_coeffs([0, 0, 1], s, T, 2)
    assert c[0] == pytest.approx(s * s * T)
    assert chaos_reconstruct(c, T, 0.9, sigma=s) == pytest.approx(0.81)


def test_word_identity_on_gaussian_price():
    f = gaussian_price_functional(np.cos, 1.0, 1.0)
    rows = word_identity_check(f, 3)
    for w, lhs, rhs in rows:
        assert lhs == pytest.approx(rhs, abs=5e-5), w
