"""Functionals on paths and their numerical functional derivatives.

Delta_x bumps the terminal value (central difference), Delta_t extends the
path flatly (one-sided forward difference).  For a word, the rightmost letter
acts first: delta_word(f, X, "001") = Delta_t Delta_t Delta_x f.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .pathcore import (Path, PathError, bump, bump_to, insert_time, restrict,
                       stop_extend, sup_norm)
from .signature import signature
from .words import EMPTY, word_rank


class OrderError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# functionals

class Functional:
    """A map from paths to reals.

    fn        : callable Path -> float
    horizon   : set for functionals only defined up to (or at) a horizon T
    exact     : optional callable letter -> Functional giving the exact
                Delta_0 / Delta_1 (used instead of finite differences)
    """

    def __init__(self, fn, name="f", horizon=None, exact=None, is_zero=False):
        self._fn = fn
        self.name = name
        self.horizon = horizon
        self._exact = exact
        self.is_zero = is_zero

    def __call__(self, X):
        if self.horizon is not None and X.t_end > self.horizon * (1 + 1e-12) + 1e-15:
            raise PathError(f"{self.name}: path of length {X.t_end} beyond horizon {self.horizon}")
        v = float(self._fn(X))
        if not np.isfinite(v):
            raise NumericalError(f"{self.name} returned a non-finite value")
        return v

    def has_exact(self):
        return self._exact is not None

    def exact_delta(self, letter):
        if self._exact is None:
            return None
        return self._exact(letter)

    def __repr__(self):
        return f"Functional({self.name})"

    # linear structure; exact rules survive when both sides have them
    def __add__(self, other):
        if not isinstance(other, Functional):
            c = float(other)
            return Functional(lambda X: self(X) + c, f"({self.name}+{c:g})", self.horizon,
                              self._exact)
        hz = self.horizon if other.horizon is None else other.horizon
        ex = None
        if self.has_exact() and other.has_exact():
            ex = lambda a: self.exact_delta(a) + other.exact_delta(a)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        return Functional(lambda X: self(X) + other(X), f"({self.name}+{other.name})", hz, ex)

    __radd__ = __add__

    def __mul__(self, c):
        if isinstance(c, Functional):
            return _product(self, c)
        c = float(c)
        if c == 0.0 or self.is_zero:
            return ZERO
        ex = (lambda a: self.exact_delta(a) * c) if self.has_exact() else None
        return Functional(lambda X: c * self(X), f"{c:g}*{self.name}", self.horizon, ex)

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + other * (-1.0)


ZERO = Functional(lambda X: 0.0, "0", exact=lambda a: ZERO, is_zero=True)


def _product(f, g):
    """f * g; Delta_0 and Delta_1 are derivations, so the product rule carries exact rules."""
    if f.is_zero or g.is_zero:
        return ZERO
    hz = f.horizon if g.horizon is None else g.horizon
    ex = None
    if f.has_exact() and g.has_exact():
        ex = lambda a: f.exact_delta(a) * g + f * g.exact_delta(a)
    return Functional(lambda X: f(X) * g(X), f"({f.name}*{g.name})", hz, ex)


def constant(c):
    if c == 0:
        return ZERO
    return Functional(lambda X: c, f"{c:g}", exact=lambda a: ZERO)


def sig_coordinate(w):
    """S_w as a functional; jumps count as vertical segments."""
    def fn(X):
        if w == EMPTY:
            return 1.0
        return signature(X, len(w), allow_jumps=True)[w]

    def exact(a):
        if w and w[-1] == a:
            return sig_coordinate(w[:-1])
        return ZERO

    return Functional(fn, f"S[{w or 'e'}]", exact=exact)


def sig_linear(coeffs):
    """sum_w c_w S_w, evaluated from a single signature."""
    coeffs = {w: float(c) for w, c in coeffs.items() if c != 0}
    if not coeffs:
        return ZERO
    K = max(len(w) for w in coeffs)
    ranks = np.array([word_rank(w) for w in coeffs])
    cv = np.array(list(coeffs.values()))

    def fn(X):
        return float(signature(X, K, allow_jumps=True).coords[ranks] @ cv)

    def exact(a):
        return sig_linear({w[:-1]: c for w, c in coeffs.items() if w and w[-1] == a})

    return Functional(fn, "sig_linear", exact=exact)


def terminal(h, relative=True, name="h(x_t)", derivs=None):
    """f(X) = h(x_t - x_0) (relative) or h(x_t).

    derivs: optional list [h', h'', ...] registering exact derivatives.
    """
    def fn(X):
        x = X.values[-1] - (X.values[0] if relative else 0.0)
        return h(x)

    exact = None
    if derivs:
        def exact(a):
            if a == "0":
                return ZERO
            return terminal(derivs[0], relative, name + "'", derivs[1:] or None)
    return Functional(fn, name, exact=exact)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _segment_gl(X):
    """Gauss-Legendre nodes on each segment: (values at nodes, dt weights)."""
    t, x = X.times, X.values
    dt = np.diff(t)
    u = 0.5 * (_GL_X + 1.0)
    xs = x[:-1, None] + (x[1:] - x[:-1])[:, None] * u[None, :]
    return xs, 0.5 * dt[:, None] * _GL_W[None, :]


def time_integral(phi, relative=False, name="int phi(x) ds"):
    """f(X) = int_0^t phi(x_s) ds (or phi(x_s - x_0)), Gauss-Legendre per segment."""
    def fn(X):
        if X.times.size == 1:
            return 0.0
        xs, w = _segment_gl(X)
        if relative:
            xs = xs - X.values[0]
        return float(np.sum(phi(xs) * w))
    return Functional(fn, name)


def strat_integral_of_function(phi, name="int phi(x) o dx"):
    """f(X) = int_0^t phi(x_s) o dx_s computed segment-wise in the x variable."""
    def fn(X):
        if X.times.size == 1:
            return 0.0
        x = X.values
        u = 0.5 * (_GL_X + 1.0)
        xs = x[:-1, None] + (x[1:] - x[:-1])[:, None] * u[None, :]
        w = 0.5 * np.diff(x)[:, None] * _GL_W[None, :]
        return float(np.sum(phi(xs) * w))
    return Functional(fn, name)


def exp_of(f, name=None):
    """exp(f); exact rules Delta_a exp(f) = exp(f) Delta_a f when f has them."""
    e = Functional(lambda X: np.exp(f(X)), name or f"exp({f.name})", f.horizon)
    if f.has_exact():
        e._exact = lambda a: e * f.exact_delta(a)
    return e


def running_max(name="max x - x0"):
    """f(X) = max_s x_s - x_0; not differentiable where the max is attained."""
    return Functional(lambda X: float(np.max(X.values) - X.values[0]), name)


# ---------------------------------------------------------------------------
# configuration and steps

@dataclass(frozen=True)
class DiffConfig:
    """Finite-difference settings.

    h_x, h_t : first-order steps, scaled by max(1, sup|x|) and max(1, t_end).
    growth   : factor applied to the steps per extra derivative order.  None
               uses the balanced schedule h**(3 / (n + 2)) for order n, which
               keeps roundoff of nested differences under control.
    """
    h_x: float = 1e-5
    h_t: float = 1e-4
    growth: float | None = None
    scale_with_path: bool = True
    time_scheme: str = "forward2"
    max_order: int = 4
    malliavin_max_order: int = 3
    use_exact: bool = True
    kink_tol: float = 1e-3
    seed: int = 12345

    def __post_init__(self):
        if self.h_x <= 0 or self.h_t <= 0:
            raise ValueError("steps must be positive")
        if self.growth is not None and self.growth < 1:
            raise ValueError("growth must be >= 1")
        if self.time_scheme not in ("forward", "forward2"):
            raise ValueError("time_scheme must be 'forward' or 'forward2'")

    def steps(self, order, X=None):
        """(h_x, h_t) for a derivative of total order `order` at path X."""
        order = max(order, 1)
        if self.growth is None:
            hx = self.h_x ** (3.0 / (order + 2))
            ht = self.h_t ** (3.0 / (order + 2))
        else:
            hx = self.h_x * self.growth ** (order - 1)
            ht = self.h_t * self.growth ** (order - 1)
        if self.scale_with_path and X is not None:
            hx *= max(1.0, sup_norm(X))
            ht *= max(1.0, X.t_end)
        if hx < 1e-14 or ht < 1e-14:
            raise NumericalError("step underflow")
        return hx, ht

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


DEFAULT_DIFF = DiffConfig()


@dataclass
class DerivResult:
    value: float
    kink_suspect: bool = False
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# first-order derivatives

def _time_fd(F, X, ht, scheme, horizon):
    room = None if horizon is None else horizon - X.t_end
    if scheme == "forward2" and (room is None or room >= 2 * ht):
        f0 = F(X)
        f1 = F(stop_extend(X, ht))
        f2 = F(stop_extend(X, 2 * ht))
        return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * ht)
    if room is not None and room < ht:
        if room <= 0:
            raise PathError("no room left before the horizon for a time derivative")
        ht = room
    return (F(stop_extend(X, ht)) - F(X)) / ht


def _space_fd(F, X, hx, flags=None, kink_tol=1e-3):
    fp = F(bump(X, hx))
    fm = F(bump(X, -hx))
    c = (fp - fm) / (2.0 * hx)
    if flags is not None:
        f0 = F(X)
        fwd = (fp - f0) / hx
        bwd = (f0 - fm) / hx
        if abs(fwd - bwd) > 10.0 * kink_tol * max(1.0, abs(c)):
            flags.append((fwd, bwd))
    return c


def delta_x(f, X, cfg=DEFAULT_DIFF):
    """Central difference under a terminal bump."""
    hx, _ = cfg.steps(1, X)
    return _space_fd(f, X, hx)


def delta_t(f, X, cfg=DEFAULT_DIFF):
    """One-sided forward difference under a flat extension."""
    _, ht = cfg.steps(1, X)
    return _time_fd(f, X, ht, cfg.time_scheme, f.horizon)


def delta_x_report(f, X, cfg=DEFAULT_DIFF):
    """Delta_x with a kink flag (one-sided differences disagree)."""
    hx, _ = cfg.steps(1, X)
    flags = []
    v = _space_fd(f, X, hx, flags, cfg.kink_tol)
    return DerivResult(v, bool(flags), {"one_sided": flags[0] if flags else None, "h": hx})


# ---------------------------------------------------------------------------
# words

def _fd_word(g, X, w, hx, ht, cfg, flags, horizon):
    if not w:
        return g(X)
    b, inner = w[0], w[1:]
    F = lambda Y: _fd_word(g, Y, inner, hx, ht, cfg, flags, horizon)
    if b == "1":
        return _space_fd(F, X, hx, flags, cfg.kink_tol)
    return _time_fd(F, X, ht, cfg.time_scheme, horizon)


def delta_word_report(f, X, w, cfg=DEFAULT_DIFF):
    """Delta_w f(X) with a kink flag."""
    g, rest = f, w
    while rest and cfg.use_exact and g.has_exact():
        g = g.exact_delta(rest[-1])
        rest = rest[:-1]
        if g.is_zero:
            return DerivResult(0.0)
    if not rest:
        return DerivResult(g(X))
    if len(rest) > cfg.max_order:
        raise OrderError(f"order {len(rest)} above the configured maximum {cfg.max_order}")
    hx, ht = cfg.steps(len(rest), X)
    flags = []
    v = _fd_word(g, X, rest, hx, ht, cfg, flags, f.horizon)
    return DerivResult(v, bool(flags), {"h_x": hx, "h_t": ht})


def delta_word(f, X, w, cfg=DEFAULT_DIFF):
    """Delta_w f(X); the rightmost letter is applied first."""
    return delta_word_report(f, X, w, cfg).value


def deriv_table(f, X, words, cfg=DEFAULT_DIFF):
    """{w: Delta_w f(X)} for the given words."""
    return {w: delta_word(f, X, w, cfg) for w in words}


def delta_functional(f, w, cfg=DEFAULT_DIFF):
    """The functional X -> Delta_w f(X)."""
    return Functional(lambda X: delta_word(f, X, w, cfg), f"D[{w or 'e'}]{f.name}", f.horizon)


# ---------------------------------------------------------------------------
# Malliavin (parallel shift) derivatives

def parallel_shift(X, t, h):
    """X + h 1_{[t, T]} with a jump stamp inserted at t (x_0 is kept at t = 0)."""
    if h == 0:
        return X
    T = X.t_end
    if t < 0:
        raise ValueError("shift time must be >= 0")
    if t >= T:
        return bump(X, h)
    Y = insert_time(X, t)
    tt, xx = Y.times, Y.values
    idx = np.nonzero(tt == t)[0]
    if idx.size == 2:
        x = xx.copy()
        x[idx[1]:] += h
        return Path._raw(tt.copy(), x)
    i = int(idx[0])
    times = np.insert(tt, i + 1, t)
    vals = np.insert(xx, i + 1, xx[i])
    vals[i + 1:] += h
    return Path._raw(times, vals)


def block_shift(X, t, width, h):
    """X + h 1_{[t, t + width)}."""
    return parallel_shift(parallel_shift(X, t, h), t + width, -h)


def _mall_steps(cfg, k, X):
    hx, _ = cfg.steps(k, X)
    return hx


def malliavin(g, X, t, cfg=DEFAULT_DIFF):
    """D_t g(X): central difference of the parallel shift from t onwards."""
    h = _mall_steps(cfg, 1, X)
    return (g(parallel_shift(X, t, h)) - g(parallel_shift(X, t, -h))) / (2.0 * h)


def malliavin_iter(g, X, ts, cfg=DEFAULT_DIFF):
    """D_{t_1 ... t_k} g(X) by nested central differences with equal steps."""
    ts = tuple(float(t) for t in np.atleast_1d(ts))
    k = len(ts)
    if k == 0:
        return g(X)
    if k > cfg.malliavin_max_order:
        raise OrderError(f"Malliavin order {k} above the configured maximum")
    if any(b < a for a, b in zip(ts[:-1], ts[1:])):
        raise ValueError("times must be ordered")
    h = _mall_steps(cfg, k, X)
    acc = 0.0
    for signs in np.ndindex(*(2,) * k):
        s = np.where(np.array(signs) == 0, 1.0, -1.0)
        Y = X
        for ti, si in zip(ts, s):
            Y = parallel_shift(Y, ti, si * h)
        acc += np.prod(s) * g(Y)
    return acc / (2.0 * h) ** k


def intrinsic_embed(g, T):
    """X_t -> g(X_t extended flatly to length T)."""
    def fn(X):
        if X.t_end > T * (1 + 1e-12) + 1e-15:
            raise PathError("path longer than the horizon")
        return g(stop_extend(X, max(T - X.t_end, 0.0)))
    return Functional(fn, f"iota0[{getattr(g, 'name', 'g')}]", horizon=T)


def volterra_kernel1(g, base, t, width, cfg=DEFAULT_DIFF):
    """Block-averaged first Frechet kernel of g at base over [t, t + width)."""
    T = base.t_end
    if t < 0 or width <= 0 or t + width > T * (1 + 1e-12):
        raise ValueError("window must lie inside [0, T]")
    h = _mall_steps(cfg, 1, base)
    up = g(block_shift(base, t, width, h))
    dn = g(block_shift(base, t, width, -h))
    return (up - dn) / (2.0 * h * width)


# ---------------------------------------------------------------------------
# seminorm and pathwise Stratonovich integrals

def _sample_indices(n, n_times):
    if n_times is None or n_times >= n:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, n_times)).astype(int))


def seminorm_estimate(phi, X, n_eps=5, n_times=None):
    """Sampled sup of |phi(X_s^(eps))| over grid times s and eps in [x0, x_s].

    A lower estimate of the seminorm; n_times subsamples the grid.
    """
    if n_eps < 2:
        raise ValueError("n_eps must be >= 2")
    x0 = X.x0
    best = 0.0
    for i in _sample_indices(X.times.size, n_times):
        Xs = restrict(X, 0.0, X.times[i]) if i > 0 else Path._raw(np.zeros(1), np.array([x0]))
        xs = Xs.x_end
        eps = np.linspace(x0, xs, n_eps) if xs != x0 else np.array([x0])
        for e in eps:
            best = max(best, abs(phi(bump_to(Xs, float(e)))))
    return best


def prefixes(X):
    """X restricted to [0, t_i] for every grid index i."""
    out = [Path._raw(np.zeros(1), np.array([X.values[0]]))]
    for i in range(1, X.times.size):
        out.append(Path._raw(X.times[:i + 1].copy(), X.values[:i + 1].copy()))
    return out


def strat_integral(phi, X):
    """sum over segments of (phi(X_{t_{n-1}}) + phi(X_{t_n}))/2 * dx_n."""
    vals = np.array([phi(P) for P in prefixes(X)])
    return float(np.sum(0.5 * (vals[:-1] + vals[1:]) * X.dx))


def time_trapezoid(phi, X):
    """sum over segments of (phi(X_{t_{n-1}}) + phi(X_{t_n}))/2 * dt_n."""
    vals = np.array([phi(P) for P in prefixes(X)])
    return float(np.sum(0.5 * (vals[:-1] + vals[1:]) * X.dt))


def _pinned_time_derivative(phi, P, e, ht):
    # d/dd phi(extend P by d, then move the terminal value to e), forward
    f0 = phi(bump_to(P, e))
    f1 = phi(bump_to(stop_extend(P, ht), e))
    f2 = phi(bump_to(stop_extend(P, 2 * ht), e))
    return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * ht)


def strat_integral_antiderivative(phi, X, cfg=DEFAULT_DIFF, n_gl=16):
    """Stratonovich integral through the terminal-value antiderivative.

    F(X_t) = int_{x0}^{xt} phi(X_t^(e)) de has Delta_x F = phi, so
    int phi o dx = F(X_t) - int_0^t Delta_t F(X_s) ds.  The time derivative of
    F moves the terminal value to e after the flat extension; for integrands
    that only see the terminal value this correction vanishes.
    Gauss-Legendre in e, trapezoid rule in s.
    """
    gx, gw = np.polynomial.legendre.leggauss(n_gl)
    x0 = X.x0
    _, ht = cfg.steps(1, X)

    def eps_integral(F, P):
        a, b = x0, P.x_end
        if a == b:
            return 0.0
        e = 0.5 * (a + b) + 0.5 * (b - a) * gx
        return 0.5 * (b - a) * float(sum(wi * F(P, float(ei)) for ei, wi in zip(e, gw)))

    main = eps_integral(lambda P, e: phi(bump_to(P, e)), X)
    dF = lambda P, e: _pinned_time_derivative(phi, P, e, ht)
    inner = np.array([eps_integral(dF, P) for P in prefixes(X)])
    corr = float(np.sum(0.5 * (inner[:-1] + inner[1:]) * X.dt))
    return main - corr


def fsf_residual(f, X, cfg=DEFAULT_DIFF):
    """f(X_t) - f(X_0) - int Delta_t f ds - int Delta_x f o dx on the grid of X."""
    P = prefixes(X)
    fx = np.array([delta_x(f, Q, cfg) for Q in P])
    ft = np.array([delta_t(f, Q, cfg) for Q in P])
    i_x = float(np.sum(0.5 * (fx[:-1] + fx[1:]) * X.dx))
    i_t = float(np.sum(0.5 * (ft[:-1] + ft[1:]) * X.dt))
    return f(X) - f(P[0]) - i_t - i_x
