"""Functional Taylor, Maclaurin and intrinsic value expansions; chaos bridge.

The truncation of order K keeps words with |w| < K, so the exact remainder
R_K collects the words of length K.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import factorial, sqrt

import numpy as np
from numpy.polynomial import hermite_e, polynomial as P

from .funcderiv import (DEFAULT_DIFF, Functional, OrderError, delta_word, intrinsic_embed,
                        malliavin_iter, seminorm_estimate)
from .pathcore import Path, PathError, concat, lipschitz_seminorm, restrict, reverse_restrict, sup_norm
from .signature import (IveKernel, hermite_combination, ito_iterated, ive_kernel_eval,
                        kernel_strat_tensor, signature)
from .words import WordPoly, count_01, enumerate_words, n_ones, n_zeros, words_with_weight


@dataclass
class ExpansionReport:
    base: str
    order: int
    words: list
    coeffs: np.ndarray
    sig: np.ndarray
    truncation: float
    exact: float | None = None
    remainder: float | None = None
    bound: dict | None = None
    meta: dict = field(default_factory=dict)

    @property
    def terms(self):
        return self.coeffs * self.sig

    def table(self):
        """Rows (word, coefficient, signature value, product)."""
        return [(w, float(c), float(s), float(c * s))
                for w, c, s in zip(self.words, self.coeffs, self.sig)]

    def partial(self, K):
        """Truncation keeping only words with |w| < K."""
        keep = np.array([len(w) < K for w in self.words])
        return float(np.sum(self.terms[keep]))


def _try_eval(f, X):
    try:
        return f(X)
    except (PathError, ArithmeticError):
        return None


def fte(f, X, Y, K, cfg=DEFAULT_DIFF, horizon=None, base="X"):
    """f(X + Y) ~ sum_{|w| < K} Delta_w f(X) S_w(Y)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if Y.has_jumps:
        raise PathError("the perturbation path must be continuous")
    if horizon is not None and X.t_end + Y.t_end > horizon * (1 + 1e-12):
        raise PathError("concatenation passes the horizon")
    words = enumerate_words(K - 1)
    coeffs = np.array([delta_word(f, X, w, cfg) for w in words])
    sig = signature(Y, K - 1).coords.copy()
    trunc = float(np.dot(coeffs, sig))
    exact = _try_eval(f, concat(X, Y))
    rem = None if exact is None else exact - trunc
    return ExpansionReport(base, K, words, coeffs, sig, trunc, exact, rem)


def maclaurin(f, X, K, cfg=DEFAULT_DIFF):
    """Expansion around the zero-length path at x_0."""
    return fte(f, Path.point(X.x0), X, K, cfg, base="0")


def fte_backward(f, X, s, t, K, cfg=DEFAULT_DIFF):
    """Expand f(X_s) around X_t using the time reversal of X on [s, t].

    Time runs backwards along the reversed path, so every letter 0 carries a
    factor -1: f(X_s) ~ sum_{|w| < K} Delta_w f(X_t) (-1)^{|w|_0} S_w(rev).
    """
    Xt = restrict(X, 0.0, t)
    Xs = restrict(X, 0.0, s)
    W = reverse_restrict(X, t, s)
    words = enumerate_words(K - 1)
    coeffs = np.array([delta_word(f, Xt, w, cfg) for w in words])
    sgn = np.array([(-1.0) ** n_zeros(w) for w in words])
    sig = signature(W, K - 1).coords * sgn
    trunc = float(np.dot(coeffs, sig))
    exact = _try_eval(f, Xs)
    return ExpansionReport("X_t", K, words, coeffs, sig, trunc, exact,
                           None if exact is None else exact - trunc)


# ---------------------------------------------------------------------------
# remainder bounds

@dataclass
class RemainderBound:
    total: float            # sum of per-word bounds
    CK: float
    rho: float
    CK_rhoK: float
    per_word: dict
    c: dict
    safety: float = 1.0

    @property
    def bound(self):
        return self.safety * min(self.total, self.CK_rhoK)


def remainder_bound(f, X, K, n_eps=3, n_times=6, cfg=DEFAULT_DIFF, safety=1.0):
    """Estimated bound on the Maclaurin remainder R_K(X) from sampled seminorms.

    Paths are measured relative to x_0.  c_w = ||D_w f|| + (t v 1) ||D_{0w} f||,
    per-word bound 2^{|w|_01}/|w|_0! c_w t^{|w|_0} ||X||^{|w|_1};
    C_K = max c_w and rho = 2 (t v ||X||).
    """
    cfg = replace(cfg, max_order=max(cfg.max_order, K + 1))
    t = X.t_end
    xs = sup_norm(X, relative=True)
    tv1 = max(t, 1.0)
    per, cs = {}, {}
    for w in enumerate_words(K)[(1 << K) - 1:]:
        d_w = lambda P, w=w: delta_word(f, P, w, cfg)
        d_0w = lambda P, w=w: delta_word(f, P, "0" + w, cfg)
        c = seminorm_estimate(d_w, X, n_eps, n_times) + tv1 * seminorm_estimate(d_0w, X, n_eps, n_times)
        cs[w] = c
        per[w] = 2.0 ** count_01(w) / factorial(n_zeros(w)) * c * t ** n_zeros(w) * xs ** n_ones(w)
    CK = max(cs.values())
    rho = 2.0 * max(t, xs)
    return RemainderBound(float(sum(per.values())), CK, rho, CK * rho ** K, per, cs, safety)


def remainder_bound_lip(C1, C2, Y, K):
    """(K!)^{C2 - 1} (2 C1 ([Y]_Lip v 1) u)^K for a Lipschitz perturbation Y of length u."""
    rho = 2.0 * C1 * max(lipschitz_seminorm(Y), 1.0) * Y.t_end
    return factorial(K) ** (C2 - 1.0) * rho ** K


def radius_estimate(C1, C2):
    """Radius of convergence from the derivative growth constants."""
    if C2 > 1:
        return 0.0
    if C2 == 1:
        return float("inf")
    return min(1.0 / (2.0 * C1), 1.0) if C1 > 0 else 1.0


def sig_lipschitz_bound(Y, w):
    """[Y]_Lip^{|w|_1} u^{|w|} / |w|!."""
    return lipschitz_seminorm(Y) ** n_ones(w) * Y.t_end ** len(w) / factorial(len(w))


# ---------------------------------------------------------------------------
# intrinsic value expansion

@dataclass
class IveReport:
    order: int
    base_value: float
    order_terms: list
    truncation: float
    exact: float | None
    residual: float | None


def _sym_kernel_tensor(g, flat, k, cfg):
    """D_{t_1..t_k} g(flat) on the grid, filled on the ordered simplex."""
    t = flat.times
    n = t.size
    A = np.zeros((n,) * k)
    for idx in np.ndindex(*(n,) * k):
        if any(b < a for a, b in zip(idx[:-1], idx[1:])):
            continue
        A[idx] = malliavin_iter(g, flat, [t[i] for i in idx], cfg)
    return A


def ive_expand(g, X, K, cfg=DEFAULT_DIFF):
    """g(X_T) ~ g(flat x_0) + sum_{1 <= k < K} int D_{t_1..t_k} g(flat) o dx^k."""
    if X.has_jumps:
        raise PathError("IVE needs a continuous path")
    if K - 1 > cfg.malliavin_max_order:
        raise OrderError("requested IVE order exceeds the Malliavin order limit")
    flat = Path._raw(X.times.copy(), np.full(X.times.size, X.x0))
    base = g(flat)
    terms = []
    for k in range(1, K):
        A = _sym_kernel_tensor(g, flat, k, cfg)
        terms.append(kernel_strat_tensor(A, X))
    trunc = base + float(sum(terms))
    exact = _try_eval(g, X)
    return IveReport(K, base, terms, trunc, exact, None if exact is None else exact - trunc)


def ive_kernel_reconstruct(g, T, times, K_word, cfg=DEFAULT_DIFF, x0=0.0):
    """sum_{|w|_1 = k, |w| <= K_word} Delta_w (iota_0 g)(x_0) phi^w(times)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    k = times.size
    f = intrinsic_embed(g, T)
    base = Path.point(x0)
    acc = 0.0
    for w in enumerate_words(K_word):
        if n_ones(w) != k:
            continue
        c = delta_word(f, base, w, cfg)
        if c != 0.0:
            acc += c * ive_kernel_eval(IveKernel(w, T), *times)
    return acc


# ---------------------------------------------------------------------------
# Wiener chaos bridge for path-independent payoffs

def gaussian_price_functional(h, sigma, T, n_nodes=80):
    """f(X_t) = E[h(x_t + sigma B_{T - t})] by Gauss-Hermite quadrature."""
    z, w = hermite_e.hermegauss(n_nodes)
    w = w / w.sum()

    def fn(X):
        tau = T - X.t_end
        if tau < -1e-12:
            raise PathError("path longer than the horizon")
        s = sigma * sqrt(max(tau, 0.0))
        return float(np.dot(w, h(X.x_end + s * z)))
    return Functional(fn, "E[h]", horizon=T)


def _as_polynomial(h):
    if isinstance(h, P.Polynomial):
        return h
    if isinstance(h, (list, tuple, np.ndarray)):
        return P.Polynomial(h)
    return None


def chaos_coeffs(h, sigma, T, K, cfg=DEFAULT_DIFF, x0=0.0, method="auto", n_nodes=80):
    """Coefficients Delta_{1^k} f(x_0), k = 0..K, of f(X_t) = E[h(x_t + sigma B_{T-t})].

    method: "exact" (h a polynomial, given as coefficients or Polynomial),
            "fd" (finite differences of the quadrature price, k <= max_order),
            "hermite" (Gaussian-weight derivatives by the same quadrature),
            "auto" (exact for polynomials, else hermite).
    """
    poly = _as_polynomial(h)
    if method == "auto":
        method = "exact" if poly is not None else "hermite"
    s = sigma * sqrt(T)
    if method == "exact":
        if poly is None:
            raise ValueError("exact coefficients need a polynomial payoff")
        # smoothed polynomial: E[p(x + s Z)] = sum_j p^{(2j)}(x) s^{2j} / (2^j j!)
        sm = P.Polynomial([0.0])
        d = poly
        j = 0
        while d.degree() >= 0 and np.any(d.coef != 0):
            sm = sm + d * (s ** (2 * j) / (2 ** j * factorial(j)))
            d = d.deriv(2)
            j += 1
            if d.coef.size == 0 or (d.coef.size == 1 and d.coef[0] == 0):
                break
        out = []
        dk = sm
        for k in range(K + 1):
            out.append(float(dk(x0)))
            dk = dk.deriv()
        return np.array(out)
    hf = (lambda x: poly(x)) if poly is not None else h
    if method == "hermite":
        z, w = hermite_e.hermegauss(n_nodes)
        w = w / w.sum()
        vals = hf(x0 + s * z)
        if s == 0:
            raise ValueError("hermite weights need sigma * sqrt(T) > 0")
        return np.array([float(np.dot(w, vals * hermite_e.hermeval(z, [0] * k + [1]))) / s ** k
                         for k in range(K + 1)])
    if method == "fd":
        f = gaussian_price_functional(hf, sigma, T, n_nodes)
        base = Path.point(x0)
        return np.array([delta_word(f, base, "1" * k, cfg) for k in range(K + 1)])
    raise ValueError(f"unknown method {method!r}")


def ito_iterated_sigma(t, x, k, sigma=1.0):
    """sigma^k J_k(t, x / sigma): the iterated integral of sigma-scaled noise."""
    if sigma == 1.0:
        return ito_iterated(t, x, k)
    return sigma ** k * ito_iterated(t, x / sigma, k)


def chaos_reconstruct(coeffs, T, x, x0=0.0, sigma=1.0):
    """sum_k coeff_k J_k(T, x - x_0)."""
    return float(sum(c * ito_iterated_sigma(T, x - x0, k, sigma) for k, c in enumerate(coeffs)))


def chaos_to_signature(coeffs, K=None, sigma=1.0):
    """sum_k coeff_k sum_{w: ||w|| = k} (-sigma^2/2)^{|w|_0} w."""
    if K is None:
        K = len(coeffs) - 1
    s2 = Fraction(sigma) ** 2
    out = WordPoly()
    for k in range(min(K, len(coeffs) - 1) + 1):
        c = Fraction(float(coeffs[k]))
        if c == 0:
            continue
        if s2 == 1:
            out = out + hermite_combination(k).scale(c)
        else:
            out = out + WordPoly({w: c * (-s2 / 2) ** n_zeros(w) for w in words_with_weight(k)})
    return out


def word_identity_check(f, max_weight=4, cfg=DEFAULT_DIFF, x0=0.0, sigma=1.0):
    """Rows (w, Delta_w f(x0), (-sigma^2/2)^{|w|_0} Delta_{1^{||w||}} f(x0)) by finite differences."""
    base = Path.point(x0)
    ones_cache = {}
    rows = []
    for k in range(max_weight + 1):
        for w in words_with_weight(k):
            if len(w) > cfg.max_order:
                continue
            if k not in ones_cache:
                ones_cache[k] = delta_word(f, base, "1" * k, cfg)
            lhs = delta_word(f, base, w, cfg)
            rhs = (-sigma ** 2 / 2.0) ** n_zeros(w) * ones_cache[k]
            rows.append((w, lhs, rhs))
    return rows
