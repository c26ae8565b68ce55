"""Truncated signatures of time-augmented paths.

Two independent routes are provided: the exact one folds segment
exponentials with Chen's rule, the quadrature one integrates level by level
with the trapezoid (Stratonovich) rule on the grid.  Letter 1 always
integrates the increment x - x_0.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial, sqrt

import numpy as np

from . import _accel
from .pathcore import PathError, refine
from .words import (WordPoly, enumerate_words, word_rank, words_with_weight,
                    n_zeros, zero_blocks)

MAX_DEPTH = 12
DEFAULT_DEPTH = 6


def _check_depth(K):
    if not 0 <= K <= MAX_DEPTH:
        raise ValueError(f"depth must be in 0..{MAX_DEPTH}, got {K}")


class Signature:
    """Flat array of iterated integrals indexed by graded-lex word rank."""

    __slots__ = ("depth", "coords", "x0", "length")

    def __init__(self, depth, coords, x0=0.0, length=0.0):
        _check_depth(depth)
        c = np.asarray(coords, dtype=float)
        if c.shape != (_accel.n_coords(depth),):
            raise ValueError("coordinate array has the wrong size for this depth")
        c.flags.writeable = False
        self.depth = depth
        self.coords = c
        self.x0 = float(x0)
        self.length = float(length)

    def __getitem__(self, w):
        if len(w) > self.depth:
            raise KeyError(f"word {w!r} longer than depth {self.depth}")
        return float(self.coords[word_rank(w)])

    def words(self):
        return enumerate_words(self.depth)

    def as_dict(self):
        return {w: float(v) for w, v in zip(self.words(), self.coords)}

    def truncate(self, K):
        return Signature(K, self.coords[:_accel.n_coords(K)], self.x0, self.length)

    def __repr__(self):
        return f"Signature(depth={self.depth}, length={self.length:.6g})"


def trivial_signature(K, x0=0.0):
    c = np.zeros(_accel.n_coords(K))
    c[0] = 1.0
    return Signature(K, c, x0, 0.0)


def seg_signature(dt, dx, K):
    """Exact signature of one linear segment: dt^{|a|_0} dx^{|a|_1} / |a|!."""
    _check_depth(K)
    if dt < 0:
        raise ValueError("negative time increment")
    return Signature(K, _accel.seg_coords(dt, dx, K), 0.0, dt)


def chen_concat(S1, S2):
    """Signature of the concatenation from the two pieces."""
    if S1.depth != S2.depth:
        raise ValueError("depth mismatch")
    c = _accel.chen_product(S1.coords, S2.coords, S1.depth)
    return Signature(S1.depth, c, S1.x0, S1.length + S2.length)


def _reject_jumps(X):
    if X.has_jumps:
        raise PathError("signature is defined here for continuous paths only")


def signature(X, K=DEFAULT_DEPTH, allow_jumps=False):
    """Exact signature of a piecewise-linear path.

    With allow_jumps=True a jump is treated as a vertical segment, which is
    the geometric (Stratonovich-compatible) convention.
    """
    _check_depth(K)
    if not allow_jumps:
        _reject_jumps(X)
    if X.times.size == 1:
        return trivial_signature(K, X.x0)
    c = _accel.sig_fold(X.dt[None, :], X.dx[None, :], K)[0]
    return Signature(K, c, X.x0, X.t_end)


def signature_batch(times, values, K):
    """Signatures of many paths on a common grid; values has shape (P, n)."""
    _check_depth(K)
    values = np.asarray(values, dtype=float)
    dt = np.diff(np.asarray(times, dtype=float))
    dx = np.diff(values, axis=1)
    return _accel.sig_fold(np.broadcast_to(dt, dx.shape), dx, K)


def signature_strat(X, K=DEFAULT_DEPTH):
    """Signature by trapezoid iterated integrals on the path's own grid."""
    _check_depth(K)
    _reject_jumps(X)
    if X.times.size == 1:
        return trivial_signature(K, X.x0)
    r = _accel.strat_levels(X.dt, X.dx, K)
    return Signature(K, r[-1], X.x0, X.t_end)


def running_signature(X, K, allow_jumps=False):
    """Exact signatures of every prefix X|[0, t_i], shape (n, W)."""
    _check_depth(K)
    if not allow_jumps:
        _reject_jumps(X)
    if X.times.size == 1:
        return trivial_signature(K).coords[None, :].copy()
    return _accel.sig_running(X.dt, X.dx, K)


def running_coordinate(X, w):
    """Values of S_w(X_u) at every grid time u."""
    return running_signature(X, len(w))[:, word_rank(w)]


# ---------------------------------------------------------------------------
# Ito iterated integrals and Hermite combinations

def hermite_prob(k, x):
    """Probabilists' Hermite polynomial by H_{k+1} = x H_k - k H_{k-1}."""
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), x
    if k == 0:
        return h_prev
    for j in range(1, k):
        h_prev, h = h, x * h - j * h_prev
    return h


def ito_iterated(t, x, k):
    """J_k(t, x) = t^{k/2}/k! H_k(x / sqrt t)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 1.0
    if t <= 0:
        return 0.0
    r = sqrt(t)
    return float(r ** k / factorial(k) * hermite_prob(k, x / r))


def ito_iterated_sum(t, x, k):
    """J_k from the monomial expansion over 2 l0 + l1 = k (reference form)."""
    acc = 0.0
    for l0 in range(k // 2 + 1):
        l1 = k - 2 * l0
        acc += (-0.5) ** l0 * t ** l0 / factorial(l0) * x ** l1 / factorial(l1)
    return acc


def hermite_combination(k):
    """sum over words of weight k of (-2)^{-|a|_0} a."""
    if k < 0:
        raise ValueError("k must be >= 0")
    from fractions import Fraction
    return WordPoly({w: Fraction(1, (-2) ** n_zeros(w)) for w in words_with_weight(k)})


# ---------------------------------------------------------------------------
# kernels of the intrinsic value expansion

@dataclass(frozen=True)
class IveKernel:
    """Polynomial kernel attached to a word: prod_l (t_{l+1} - t_l)^{g_l} / g_l!."""
    word: str
    horizon: float

    @property
    def gammas(self):
        return zero_blocks(self.word)

    @property
    def order(self):
        return self.word.count("1")


def ive_kernel_eval(kern, *ts):
    """Kernel value at ordered times t_1 <= ... <= t_k."""
    g = kern.gammas
    k = len(g) - 1
    if len(ts) == 1 and np.ndim(ts[0]) == 1 and k != 1:
        ts = tuple(ts[0])
    if len(ts) != k:
        raise ValueError(f"kernel of order {k} needs {k} times")
    pts = (0.0,) + tuple(float(t) for t in ts) + (kern.horizon,)
    if any(b < a for a, b in zip(pts[:-1], pts[1:])):
        raise ValueError("times must satisfy 0 <= t_1 <= ... <= t_k <= T")
    out = 1.0
    for gl, a, b in zip(g, pts[:-1], pts[1:]):
        out *= (b - a) ** gl / factorial(gl)
    return out


def iterated_strat_with_kernel(kern, X):
    """Nested trapezoid Stratonovich integral of the kernel against dx.

    The product form lets the integral be built one slot at a time:
    G_0(s) = s^{g_0}/g_0!, G_l(s) = int_0^s G_{l-1}(u) (s-u)^{g_l}/g_l! o dx_u,
    and the result is G_k evaluated with s = T in the last factor.
    """
    _reject_jumps(X)
    g = kern.gammas
    T = kern.horizon
    t = X.times
    dx = X.dx
    G = t ** g[0] / factorial(g[0])
    if len(g) == 1:
        return float(T ** g[0] / factorial(g[0]))
    for level, gl in enumerate(g[1:], start=1):
        last = level == len(g) - 1
        s_pts = np.array([T]) if last else t
        # integrand H[s, u] = G(u) (s - u)^{gl} / gl!, used only for u <= s
        diff = s_pts[:, None] - t[None, :]
        H = G[None, :] * np.where(diff >= 0, diff, 0.0) ** gl / factorial(gl)
        inc = 0.5 * (H[:, :-1] + H[:, 1:]) * dx[None, :]
        if last:
            return float(inc.sum())
        # G_l(t_j) sums the first j segments with s = t_j
        cs = np.cumsum(inc, axis=1)
        G = np.concatenate([[0.0], np.diagonal(cs, offset=-1)])
    raise AssertionError("unreachable")


def kernel_strat_tensor(psi, X):
    """Nested trapezoid integral of a kernel tensor psi[i1, ..., ik] against dx.

    psi holds kernel values on the grid of X (only entries with
    i1 <= ... <= ik are used).  Cost is O(n^k).
    """
    _reject_jumps(X)
    dx = X.dx
    A = np.asarray(psi, dtype=float)
    k = A.ndim
    if k == 0:
        return float(A)
    for _ in range(k):
        # integrate out the first axis up to the index of the next axis
        inc = 0.5 * (A[:-1] + A[1:]) * dx.reshape((-1,) + (1,) * (A.ndim - 1))
        cs = np.concatenate([np.zeros((1,) + A.shape[1:]), np.cumsum(inc, axis=0)])
        if A.ndim == 1:
            return float(cs[-1])
        # B[j, rest] = cs[j, j, rest]
        A = np.diagonal(cs, axis1=0, axis2=1)
        A = np.moveaxis(A, -1, 0)
    raise AssertionError("unreachable")


def kernel_quadrature_study(w, X, levels=3):
    """Relative errors of the kernel quadrature under dyadic refinement."""
    exact = signature(X, len(w))[w]
    kern = IveKernel(w, X.t_end)
    errs = []
    Y = X
    for _ in range(levels):
        errs.append(abs(iterated_strat_with_kernel(kern, Y) - exact))
        Y = refine(Y, 2)
    return exact, np.array(errs)
