"""Bachelier Monte Carlo, price embeddings and signature pricing.

Continuations are simulated as a unit Brownian motion W on [0, 1] with a
fixed number of steps and mapped to x + sigma sqrt(tau) W(s / tau).  With
the normals frozen this makes the price a smooth function of both the
current value and the remaining time, which the finite differences need.

Every path draws from its own Philox stream keyed by (seed, stream index);
antithetic partners share a stream, so results do not depend on chunking.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import exp, factorial, pi, sqrt

import numpy as np
from scipy.special import ndtr

from . import _accel
from .funcderiv import DEFAULT_DIFF, Functional, delta_word, intrinsic_embed
from .pathcore import Path, PathError
from .signature import signature
from .words import enumerate_words, word_rank

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class BachelierMeasure:
    sigma: float = 1.0
    x0: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class MCConfig:
    n_paths: int = 200_000
    seed: int = 42
    antithetic: bool = True
    n_steps: int = 512          # grid step is horizon / n_steps
    chunk: int = 8192

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError("n_paths must be >= 2")
        if self.antithetic and (self.n_paths % 2 or self.chunk % 2):
            raise ValueError("antithetic sampling needs even n_paths and chunk")
        if self.n_steps < 1 or self.chunk < 2:
            raise ValueError("n_steps must be >= 1 and chunk >= 2")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# ---------------------------------------------------------------------------
# random streams

def _stream(seed, i):
    key = np.array([seed & _MASK64, i], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_block(cfg, start, stop, with_uniforms=False):
    """Normals (and bridge uniforms) for paths start .. stop - 1."""
    n = cfg.n_steps
    count = stop - start
    Z = np.empty((count, n))
    U = np.empty((count, n)) if with_uniforms else None
    if cfg.antithetic:
        for j in range(count // 2):
            g = _stream(cfg.seed, start // 2 + j)
            z = g.standard_normal(n)
            Z[2 * j] = z
            Z[2 * j + 1] = -z
            if with_uniforms:
                u = 1.0 - g.random(n)   # (0, 1]
                U[2 * j] = u
                U[2 * j + 1] = u
    else:
        for j in range(count):
            g = _stream(cfg.seed, start + j)
            Z[j] = g.standard_normal(n)
            if with_uniforms:
                U[j] = 1.0 - g.random(n)
    return Z, U


def unit_bm(Z):
    """Brownian values on the uniform grid of [0, 1] from step normals."""
    n = Z.shape[1]
    W = np.zeros((Z.shape[0], n + 1))
    np.cumsum(Z, axis=1, out=W[:, 1:])
    W *= 1.0 / sqrt(n)
    return W


def _chunks(cfg):
    for start in range(0, cfg.n_paths, cfg.chunk):
        yield start, min(start + cfg.chunk, cfg.n_paths)


class _UnitPaths:
    """Unit Brownian blocks (and bridge maxima), optionally kept in memory."""

    def __init__(self, cfg, with_max=False, keep=False):
        self.cfg = cfg
        self.with_max = with_max
        self.keep = keep
        self._cache = None

    def _make(self, start, stop):
        Z, U = draw_block(self.cfg, start, stop, self.with_max)
        W = unit_bm(Z)
        M = None
        if self.with_max:
            n = self.cfg.n_steps
            M = _accel.bridge_max(W, np.full(n, 1.0 / n), U)
        return W, M

    def __iter__(self):
        if self._cache is not None:
            yield from self._cache
            return
        blocks = []
        for start, stop in _chunks(self.cfg):
            b = self._make(start, stop)
            if self.keep:
                blocks.append(b)
            yield b
        if self.keep:
            self._cache = blocks


# ---------------------------------------------------------------------------
# payoffs

def _trapz_rows(times, values):
    dt = np.diff(times)
    return 0.5 * ((values[:, :-1] + values[:, 1:]) * dt).sum(axis=1)


def _exp_mean_rows(times, values, temp):
    # exact int of exp((x - x0) / temp) over linear segments, shifted for range
    y = (values - values[:, :1]) / temp
    top = y.max(axis=1, keepdims=True)
    a = y[:, :-1] - top
    b = y[:, 1:] - top
    d = b - a
    small = np.abs(d) < 1e-8
    ratio = np.where(small, np.exp(a) * (1 + 0.5 * d), (np.exp(b) - np.exp(a)) / np.where(small, 1.0, d))
    integral = (ratio * np.diff(times)).sum(axis=1)
    return top[:, 0], integral


@dataclass
class Payoff:
    """Path functional with a vectorised evaluator and optional closed-form price.

    batch(times, values, extras) evaluates many paths sharing a grid;
    extras may hold 'cont_max', the exact maximum over the simulated part.
    closed(sigma, T, x0) is the Bachelier price at time 0 when known.
    """
    name: str
    batch: object
    closed: object = None
    needs_max: bool = False
    help: str = ""

    def __call__(self, X):
        return float(self.batch(X.times, X.values[None, :], {})[0])

    def functional(self, horizon=None):
        return Functional(self.__call__, self.name, horizon=horizon)


def _lookback(times, v, ex):
    m = v.max(axis=1)
    if "cont_max" in ex:
        m = np.maximum(m, ex["cont_max"])
    return np.maximum(m - v[:, 0], 0.0)


def _asian(times, v, ex):
    T = times[-1]
    return np.maximum(_trapz_rows(times, v) / T - v[:, 0], 0.0)


def european_call(strike=None):
    """(x_T - K)^+; strike None means at the money (K = x_0)."""
    def batch(times, v, ex):
        k = v[:, 0] if strike is None else strike
        return np.maximum(v[:, -1] - k, 0.0)

    def closed(sigma, T, x0):
        k = x0 if strike is None else strike
        s = sigma * sqrt(T)
        if s == 0:
            return max(x0 - k, 0.0)
        d = (x0 - k) / s
        return (x0 - k) * float(ndtr(d)) + s * exp(-0.5 * d * d) / sqrt(2 * pi)
    return Payoff("european" if strike is None else f"call{strike:g}", batch, closed,
                  help="(x_T - K)^+")


def soft_max(temp=0.05):
    """temp log((1/t) int exp((x - x0)/temp) ds), a smooth stand-in for max - x0."""
    if temp <= 0:
        raise ValueError("temperature must be positive")

    def batch(times, v, ex):
        top, integral = _exp_mean_rows(times, v, temp)
        return temp * (top + np.log(integral / times[-1]))
    return Payoff(f"softmax{temp:g}", batch, help="regularised running maximum")


def _exp_sig(times, v, ex):
    # exp(S_1 + S_10): exp of the terminal increment plus the time integral
    inc = v - v[:, :1]
    return np.exp(inc[:, -1] + _trapz_rows(times, inc))


def payoff_library():
    """Registered payoffs by name."""
    lib = [
        Payoff("lookback", _lookback, lambda s, T, x0: s * sqrt(2 * T / pi), True, "(max x - x_0)^+"),
        Payoff("asian", _asian, lambda s, T, x0: s * sqrt(T / (6 * pi)), help="(mean x - x_0)^+"),
        european_call(),
        Payoff("int_x", lambda t, v, e: _trapz_rows(t, v), lambda s, T, x0: x0 * T, help="int x ds"),
        Payoff("exp_int", lambda t, v, e: np.exp(_trapz_rows(t, v - v[:, :1])),
               lambda s, T, x0: exp(s * s * T ** 3 / 6), help="exp(int (x - x_0) ds)"),
        Payoff("int_x_sq", lambda t, v, e: _trapz_rows(t, v) ** 2,
               lambda s, T, x0: (x0 * T) ** 2 + s * s * T ** 3 / 3, help="(int x ds)^2"),
        Payoff("x_sq", lambda t, v, e: v[:, -1] ** 2, lambda s, T, x0: x0 * x0 + s * s * T, help="x_T^2"),
        Payoff("x_cube", lambda t, v, e: v[:, -1] ** 3, lambda s, T, x0: x0 ** 3 + 3 * x0 * s * s * T,
               help="x_T^3"),
        Payoff("exp_x", lambda t, v, e: np.exp(v[:, -1]), lambda s, T, x0: exp(x0 + s * s * T / 2),
               help="exp(x_T)"),
        Payoff("exp_sig", _exp_sig, help="exp(x_T - x_0 + int (x - x_0) ds)"),
        soft_max(),
    ]
    return {p.name: p for p in lib}


# ---------------------------------------------------------------------------
# Monte Carlo estimators

@dataclass
class MCResult:
    value: float
    se: float
    n: int

    def __iter__(self):
        return iter((self.value, self.se))


class _Accumulator:
    def __init__(self):
        self.s = 0.0
        self.s2 = 0.0
        self.n = 0

    def add(self, y):
        self.s += float(np.sum(y))
        self.s2 += float(np.sum(y * y))
        self.n += y.size

    def result(self):
        mean = self.s / self.n
        var = max(self.s2 / self.n - mean * mean, 0.0) * self.n / max(self.n - 1, 1)
        return MCResult(mean, sqrt(var / self.n), self.n)


def _pair_mean(y, cfg):
    return 0.5 * (y[0::2] + y[1::2]) if cfg.antithetic else y


def _mc_over(g, prefix, sigma, tau, cfg, units):
    n = cfg.n_steps
    t_pre, x_pre = prefix.times, prefix.values
    grid = np.linspace(0.0, 1.0, n + 1)
    times = np.concatenate([t_pre, t_pre[-1] + tau * grid[1:]])
    scale = sigma * sqrt(tau)
    x_start = x_pre[-1]
    acc = _Accumulator()
    for W, M in units:
        c = W.shape[0]
        vals = np.empty((c, t_pre.size + n))
        vals[:, :t_pre.size - 1] = x_pre[:-1]
        vals[:, t_pre.size - 1:] = x_start + scale * W
        extras = {"cont_max": x_start + scale * M} if M is not None else {}
        acc.add(_pair_mean(np.asarray(g.batch(times, vals, extras), dtype=float), cfg))
    return acc.result()


def _check_prefix(X, T):
    if X.t_end > T * (1 + 1e-12) + 1e-15:
        raise PathError("prefix longer than the horizon")


def conditioned_expectation(g, X, m, T, cfg=MCConfig()):
    """E[g(X (+) Z)] over Bachelier continuations Z of length T - t_end; returns (value, se)."""
    _check_prefix(X, T)
    tau = T - X.t_end
    if tau <= T * 1e-12 or m.sigma == 0:
        return MCResult(g(X if tau <= T * 1e-12 else _flat_extend(X, tau)), 0.0, cfg.n_paths)
    units = _UnitPaths(cfg, with_max=g.needs_max)
    return _mc_over(g, X, m.sigma, tau, cfg, units)


def _flat_extend(X, tau):
    return Path._raw(np.append(X.times, X.t_end + tau), np.append(X.values, X.x_end))


def price(g, m, T, cfg=MCConfig()):
    """Time-0 price under the Bachelier measure m."""
    return conditioned_expectation(g, Path.point(m.x0), m, T, cfg)


def price_embed(g, m, T, cfg=MCConfig(n_paths=20_000)):
    """X_t -> E[g | X_t] with frozen normals (common random numbers across calls)."""
    if m.sigma == 0:
        return intrinsic_embed(g, T)
    units = _UnitPaths(cfg, with_max=g.needs_max, keep=True)

    def fn(X):
        _check_prefix(X, T)
        tau = T - X.t_end
        if tau <= T * 1e-12:
            return g(X)
        return _mc_over(g, X, m.sigma, tau, cfg, units).value
    return Functional(fn, f"iota[{g.name}, sigma={m.sigma:g}]", horizon=T)


def bachelier_paths(m, T, cfg=MCConfig(n_paths=1000)):
    """Simulated paths as (times, values) arrays of shape (n + 1,), (P, n + 1)."""
    if T <= 0:
        raise ValueError("horizon must be positive")
    times = np.linspace(0.0, T, cfg.n_steps + 1)
    out = [m.x0 + m.sigma * sqrt(T) * W for W, _ in _UnitPaths(cfg)]
    return times, np.concatenate(out, axis=0)


@dataclass
class ExpectedSignature:
    depth: int
    mean: np.ndarray
    se: np.ndarray
    n: int
    combo: MCResult | None = None

    def __getitem__(self, w):
        return float(self.mean[word_rank(w)])

    def words(self):
        return enumerate_words(self.depth)


def expected_signature(m, T, K, cfg=MCConfig(), weights=None):
    """MC mean of the exact (piecewise-linear) signatures of simulated paths.

    With weights (array over word ranks) the mean and SE of the linear
    combination are returned as well.  Time-only coordinates are exact.
    """
    Wn = _accel.n_coords(K)
    s = np.zeros(Wn)
    s2 = np.zeros(Wn)
    combo = _Accumulator() if weights is not None else None
    dt = np.full(cfg.n_steps, T / cfg.n_steps)
    n_units = 0
    scale = m.sigma * sqrt(T)
    for W, _ in _UnitPaths(cfg):
        sig = _accel.sig_fold(dt, scale * np.diff(W, axis=1), K)
        sig = _pair_mean(sig, cfg)
        s += sig.sum(axis=0)
        s2 += (sig * sig).sum(axis=0)
        n_units += sig.shape[0]
        if combo is not None:
            combo.add(sig @ weights)
    mean = s / n_units
    var = np.maximum(s2 / n_units - mean ** 2, 0.0) * n_units / max(n_units - 1, 1)
    se = np.sqrt(var / n_units)
    # deterministic coordinates: words of zeros only
    for k in range(K + 1):
        r = (1 << k) - 1
        mean[r] = T ** k / factorial(k)
        se[r] = 0.0
    return ExpectedSignature(K, mean, se, n_units, combo.result() if combo else None)


@dataclass
class SigPrice:
    price: float
    se: float
    order: int
    terms: list = field(default_factory=list)   # (word, coeff, E[S], product)

    def table(self):
        return self.terms


def sig_coefficients(g, sigma_coeff, K, T, x0=0.0, mc_coeff=MCConfig(n_paths=20_000), diff=DEFAULT_DIFF):
    """Delta_w (iota g)(X_0) for |w| <= K under the coefficient measure."""
    f = price_embed(g, BachelierMeasure(sigma_coeff, x0), T, mc_coeff)
    base = Path.point(x0)
    words = enumerate_words(K)
    return words, np.array([delta_word(f, base, w, diff) for w in words])


def sig_price(g, sigma_coeff, K, m_pricing, T, cfg=MCConfig(),
              mc_coeff=MCConfig(n_paths=20_000), diff=DEFAULT_DIFF, coeffs=None):
    """sum_{|w| <= K} Delta_w (iota_{sigma_coeff} g)(X_0) E^{pricing}[S_w(Y_T)]."""
    if coeffs is None:
        words, c = sig_coefficients(g, sigma_coeff, K, T, m_pricing.x0, mc_coeff, diff)
    else:
        words = enumerate_words(K)
        c = np.asarray(coeffs, dtype=float)[:len(words)]
    es = expected_signature(m_pricing, T, K, cfg, weights=c)
    terms = [(w, float(ci), float(e), float(ci * e)) for w, ci, e in zip(words, c, es.mean)]
    # the combination carries the exact deterministic part through its mean too
    return SigPrice(float(np.dot(c, es.mean)), es.combo.se, K, terms)


def lookback_oracle(t, x, m_run, sigma, T, x0):
    """Bachelier price of (max - x_0)^+ at time t given spot x and running max m_run."""
    if m_run < x:
        raise ValueError("running max below the spot")
    if t > T:
        raise ValueError("t beyond the horizon")
    s = sigma * sqrt(T - t)
    d = m_run - x
    if s == 0:
        return m_run - x0
    z = d / s
    return x - x0 + d * (2.0 * float(ndtr(z)) - 1.0) + 2.0 * s * exp(-0.5 * z * z) / sqrt(2 * pi)


# ---------------------------------------------------------------------------
# static hedging

@dataclass
class HedgeResult:
    error: float
    value: float
    portfolio: float
    per_order: dict


def hedge_coefficients(g, K, x0=0.0, diff=DEFAULT_DIFF):
    """Maclaurin coefficients Delta_w g(X_0) for |w| < K, keyed by word."""
    base = Path.point(x0)
    return {w: delta_word(g, base, w, diff) for w in enumerate_words(K - 1)}


def hedge_error(g, coeffs, X, K):
    """g(X_T) minus the static portfolio sum_{|w| < K} c_w S_w(X_T)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    sig = signature(X, K - 1)
    per = {}
    port = 0.0
    for w, c in coeffs.items():
        if len(w) >= K:
            continue
        v = c * sig[w]
        per[len(w)] = per.get(len(w), 0.0) + v
        port += v
    val = g(X)
    return HedgeResult(val - port, val, port, per)


def horizon_scaled(X, lam):
    """Same tick path run over lam times the horizon with the same Lipschitz rate."""
    x0 = X.values[0]
    return Path._raw(X.times * lam, x0 + lam * (X.values - x0))


def hedge_scaling(g, coeffs, X, K, n_halvings=3):
    """Rows (lam, |error|) for lam = 1, 1/2, ... and the mean log2 ratio per halving."""
    rows = []
    for j in range(n_halvings + 1):
        lam = 0.5 ** j
        rows.append((lam, abs(hedge_error(g, coeffs, horizon_scaled(X, lam), K).error)))
    errs = np.array([r[1] for r in rows])
    with np.errstate(divide="ignore"):
        slopes = np.log2(errs[1:] / errs[:-1])
    return rows, slopes


def lipschitz_hedge_bound(C1, C2, X, K):
    from .expansion import remainder_bound_lip
    return remainder_bound_lip(C1, C2, X, K)
