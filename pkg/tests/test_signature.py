from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigtaylor.pathcore import Path, PathError, bump, concat, random_lipschitz_path, refine
from sigtaylor.signature import (IveKernel, chen_concat, hermite_combination, hermite_prob,
                                 ito_iterated, ito_iterated_sum, ive_kernel_eval,
                                 iterated_strat_with_kernel, kernel_quadrature_study,
                                 kernel_strat_tensor, running_coordinate, running_signature,
                                 seg_signature, signature, signature_batch, signature_strat)
from sigtaylor.words import enumerate_words


def test_unit_line():
    S = signature(Path([0, 1], [0, 1]), 4)
    for w in enumerate_words(4):
        assert S[w] == pytest.approx(1.0 / factorial(len(w)))
    assert S["01"] == 0.5


def test_segment_formula():
    S = seg_signature(2.0, -3.0, 3)
    assert S["001"] == pytest.approx(2.0 * 2.0 * -3.0 / 6)
    with pytest.raises(ValueError):
        seg_signature(-1.0, 0.0, 2)


def test_invariants(paths):
    for X in paths:
        S = signature(X, 5)
        t, dx = X.t_end, X.x_end - X.x0
        assert S[""] == 1.0
        for k in range(6):
            assert S["0" * k] == pytest.approx(t ** k / factorial(k), rel=1e-12)
            assert S["1" * k] == pytest.approx(dx ** k / factorial(k), rel=1e-10, abs=1e-14)
        # time and space letters: T S_1 = S_01 + S_10
        assert t * S["1"] == pytest.approx(S["01"] + S["10"], rel=1e-12, abs=1e-14)


def test_chen(rng):
    for _ in range(10):
        X = random_lipschitz_path(rng, 6)
        Y = random_lipschitz_path(rng, 4, 0.7, x0=5.0)
        a = signature(concat(X, Y), 5).coords
        b = chen_concat(signature(X, 5), signature(Y, 5)).coords
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_jumps_rejected_unless_allowed():
    X = bump(Path([0, 1], [0, 1]), 1.0)
    with pytest.raises(PathError):
        signature(X, 2)
    S = signature(X, 2, allow_jumps=True)
    assert S["1"] == 2.0
    # the vertical piece has no time extent
    assert S["10"] == pytest.approx(0.5)


def test_strat_converges_second_order(rng):
    X = random_lipschitz_path(rng, 5)
    exact = signature(X, 4).coords
    errs = [np.max(np.abs(signature_strat(refine(X, f), 4).coords - exact)) for f in (4, 8, 16)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.8)


def test_running_and_batch(rng):
    X = random_lipschitz_path(rng, 6)
    R = running_signature(X, 3)
    assert np.allclose(R[-1], signature(X, 3).coords)
    assert np.allclose(running_coordinate(X, "10")[3], signature(Path(X.times[:4], X.values[:4]), 2)["10"])
    t = np.linspace(0, 1, 5)
    vals = rng.standard_normal((3, 5))
    B = signature_batch(t, vals, 3)
    for p in range(3):
        assert np.allclose(B[p], signature(Path(t, vals[p]), 3).coords)


def test_hermite():
    x = np.linspace(-3, 3, 7)
    assert np.allclose(hermite_prob(3, x), x ** 3 - 3 * x)
    assert np.allclose(hermite_prob(4, x), x ** 4 - 6 * x ** 2 + 3)
    for k in range(8):
        assert ito_iterated(0.7, 1.3, k) == pytest.approx(ito_iterated_sum(0.7, 1.3, k), rel=1e-12)
    # J_2 = (x^2 - t)/2
    assert ito_iterated(2.0, 3.0, 2) == pytest.approx(3.5)
    assert hermite_combination(2).terms == {"0": (-0.5,), "11": (1,)}


@given(st.integers(0, 2 ** 31))
@settings(max_examples=20, deadline=None)
def test_hermite_partition(seed):
    rng = np.random.default_rng(seed)
    X = random_lipschitz_path(rng, 6, rng.uniform(0.2, 2.0))
    S = signature(X, 6)
    for k in range(7):
        want = ito_iterated(X.t_end, X.x_end - X.x0, k)
        assert hermite_combination(k).evaluate(S) == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_kernel_examples():
    T = 2.0
    assert ive_kernel_eval(IveKernel("10", T), 0.5) == pytest.approx(1.5)
    assert ive_kernel_eval(IveKernel("01", T), 0.5) == pytest.approx(0.5)
    assert ive_kernel_eval(IveKernel("111", T), 0.1, 0.2, 0.3) == 1.0
    assert IveKernel("0100", T).gammas == (1, 2) and IveKernel("0100", T).order == 1
    with pytest.raises(ValueError):
        ive_kernel_eval(IveKernel("11", T), 0.5, 0.2)
    with pytest.raises(ValueError):
        ive_kernel_eval(IveKernel("11", T), 0.5)


def test_kernel_quadrature_s10(rng):
    X = refine(random_lipschitz_path(rng, 8, uneven=False), 50)
    val = iterated_strat_with_kernel(IveKernel("10", X.t_end), X)
    assert val == pytest.approx(signature(X, 2)["10"], rel=1e-6)
    one = iterated_strat_with_kernel(IveKernel("1", X.t_end), X)
    assert one == pytest.approx(X.x_end - X.x0)


def test_kernel_tensor_matches_slot_recursion(rng):
    X = refine(random_lipschitz_path(rng, 4), 5)
    t = X.times
    T = X.t_end
    for w in ["011", "101", "0110", "1101", "111"]:
        k = IveKernel(w, T)
        n = t.size
        A = np.zeros((n,) * k.order)
        for idx in np.ndindex(*A.shape):
            if all(a <= b for a, b in zip(idx[:-1], idx[1:])):
                A[idx] = ive_kernel_eval(k, *[t[i] for i in idx])
        assert kernel_strat_tensor(A, X) == pytest.approx(iterated_strat_with_kernel(k, X), rel=1e-12)


def test_kernel_quadrature_order(rng):
    X = refine(random_lipschitz_path(rng, 6, uneven=False), 10)
    exact, errs = kernel_quadrature_study("0110", X, levels=3)
    rates = np.log2(errs[:-1] / errs[1:])
    assert np.all(rates > 1.9)
