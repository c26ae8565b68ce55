"""Piecewise-linear time-augmented paths and path-space operations.

A path is a grid ``times`` (starting at 0, non-decreasing) with ``values``;
between samples it is linear.  A repeated time stamp encodes a jump, and
at the stamp the post-jump value applies (cadlag).  Paths are immutable.

Paths have different lengths, so the global horizon is never stored on a
path.  Functions that need it take ``horizon`` explicitly, or read it from
a :class:`Horizon`.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np


class PathError(ValueError):
    pass


class Path:
    """Immutable sampled path with piecewise-linear interpolation."""

    __slots__ = ("times", "values")

    def __init__(self, times, values, *, check=True):
        t = np.array(times, dtype=float).reshape(-1)
        x = np.array(values, dtype=float).reshape(-1)
        if check:
            _validate(t, x)
        t.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", x)

    def __setattr__(self, name, value):
        raise AttributeError("Path is immutable")

    @classmethod
    def _raw(cls, t, x):
        # trusted constructor for internal operations
        obj = object.__new__(cls)
        t.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(obj, "times", t)
        object.__setattr__(obj, "values", x)
        return obj

    # -- constructors
    @classmethod
    def point(cls, x0=0.0):
        """Zero-length path sitting at x0."""
        return cls([0.0], [x0])

    @classmethod
    def flat(cls, x0, length):
        if length == 0:
            return cls.point(x0)
        return cls([0.0, length], [x0, x0])

    @classmethod
    def line(cls, x0, x1, length, n=1):
        t = np.linspace(0.0, length, n + 1)
        return cls(t, np.linspace(x0, x1, n + 1))

    # -- basic accessors
    @property
    def t_end(self):
        return float(self.times[-1])

    @property
    def x0(self):
        return float(self.values[0])

    @property
    def x_end(self):
        return float(self.values[-1])

    def __len__(self):
        return self.times.size

    def __repr__(self):
        return f"Path(n={self.times.size}, t_end={self.t_end:.6g}, x0={self.x0:.6g}, x_end={self.x_end:.6g})"

    def __eq__(self, other):
        if not isinstance(other, Path):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.times.tobytes(), self.values.tobytes()))

    def key(self):
        return self.times.tobytes() + self.values.tobytes()

    @property
    def dt(self):
        return np.diff(self.times)

    @property
    def dx(self):
        return np.diff(self.values)

    def jump_mask(self):
        """Boolean mask over segments: True where the segment is a jump."""
        return np.diff(self.times) == 0.0

    @property
    def has_jumps(self):
        return bool(np.any(self.jump_mask()))

    def __call__(self, s):
        return evaluate(self, s)

    def increments(self):
        """Same path shifted so that it starts at 0."""
        return Path._raw(self.times.copy(), self.values - self.values[0])

    def shifted(self, c):
        return Path._raw(self.times.copy(), self.values + c)

    def scaled(self, gamma):
        """Path with x - x0 scaled by gamma, same start."""
        x0 = self.values[0]
        return Path._raw(self.times.copy(), x0 + gamma * (self.values - x0))


def _validate(t, x):
    if t.size < 1 or t.size != x.size:
        raise PathError("times and values must be non-empty and of equal length")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
        raise PathError("non-finite sample")
    if t[0] != 0.0:
        raise PathError("times must start at 0")
    d = np.diff(t)
    if np.any(d < 0):
        raise PathError("times must be non-decreasing")
    z = d == 0.0
    if np.any(z[1:] & z[:-1]):
        raise PathError("a time stamp may repeat at most twice")


@dataclass(frozen=True)
class Horizon:
    """Global horizon context for operations that must not exceed T."""
    T: float

    def check(self, path):
        if path.t_end > self.T * (1 + 1e-12) + 1e-15:
            raise PathError(f"path length {path.t_end} exceeds horizon {self.T}")
        return path


def _as_T(horizon):
    if horizon is None:
        return None
    return horizon.T if isinstance(horizon, Horizon) else float(horizon)


# ---------------------------------------------------------------------------
# evaluation

def evaluate(X, s, left=False):
    """Value(s) of X at time(s) s; left=True gives left limits."""
    s_arr = np.asarray(s, dtype=float)
    t, x = X.times, X.values
    if np.any(s_arr < 0) or np.any(s_arr > t[-1] * (1 + 1e-14) + 1e-300):
        raise PathError("evaluation time outside [0, t_end]")
    s_arr = np.minimum(s_arr, t[-1])
    side = "left" if left else "right"
    i = np.searchsorted(t, s_arr, side=side) - 1
    i = np.clip(i, 0, t.size - 1)
    if left:
        # left limit at a stamp: use the segment ending there
        at0 = s_arr == 0.0
        i = np.where(at0, 0, i)
    j = np.minimum(i + 1, t.size - 1)
    span = t[j] - t[i]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(span > 0, (s_arr - t[i]) / np.where(span > 0, span, 1.0), 0.0)
    if left:
        # landing exactly on t[j] from the left means the pre-jump value x[j]
        w = np.clip(w, 0.0, 1.0)
    out = x[i] + w * (x[j] - x[i])
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# path operations

def concat(X, Z, horizon=None):
    """Continuous concatenation: y_r = x_{r ^ s} + z_{(r - s)+} - z_0.

    If the result would pass the horizon, Z is cut at T - s first.
    """
    T = _as_T(horizon)
    s = X.t_end
    if T is not None:
        if s > T * (1 + 1e-12):
            raise PathError("prefix already exceeds the horizon")
        room = max(T - s, 0.0)
        if Z.t_end > room:
            Z = restrict(Z, 0.0, room)
    if Z.times.size == 1:
        return X
    zt = Z.times[1:] + s
    zx = Z.values[1:] - Z.values[0] + X.values[-1]
    t = np.concatenate([X.times, zt])
    x = np.concatenate([X.values, zx])
    x_jump_end = X.times.size >= 2 and X.times[-1] == X.times[-2]
    z_jump_start = Z.times.size >= 2 and Z.times[1] == 0.0
    if x_jump_end and z_jump_start:
        # two jumps at the same instant merge into one
        t = np.delete(t, X.times.size - 1)
        x = np.delete(x, X.times.size - 1)
    return Path._raw(t, x)


def stop_extend(X, dt, horizon=None):
    """Flat extension by dt (the stopped path)."""
    if dt < 0:
        raise PathError("negative extension")
    T = _as_T(horizon)
    if T is not None and X.t_end + dt > T * (1 + 1e-12) + 1e-15:
        raise PathError("extension passes the horizon")
    if dt == 0:
        return X
    t = np.append(X.times, X.times[-1] + dt)
    x = np.append(X.values, X.values[-1])
    return Path._raw(t, x)


def bump(X, h):
    """Terminal vertical bump of size h, stored as a repeated final stamp."""
    if h == 0:
        return X
    if X.times.size >= 2 and X.times[-1] == X.times[-2]:
        x = X.values.copy()
        x[-1] += h
        return Path._raw(X.times.copy(), x)
    t = np.append(X.times, X.times[-1])
    x = np.append(X.values, X.values[-1] + h)
    return Path._raw(t, x)


def bump_to(X, eps):
    """Path whose terminal value is moved to eps."""
    return bump(X, eps - X.values[-1])


def restrict(X, s, t):
    """X on [s, t], re-based to start at time 0."""
    t_end = X.t_end
    if not (0 <= s <= t <= t_end * (1 + 1e-14) + 1e-300):
        raise PathError("need 0 <= s <= t <= t_end")
    t = min(t, t_end)
    if t == s:
        return Path._raw(np.zeros(1), np.array([evaluate(X, s)]))
    tt, xx = X.times, X.values
    inner = (tt > s) & (tt <= t)
    ts = [np.array([s]), tt[inner]]
    xs = [np.array([evaluate(X, s)]), xx[inner]]
    if not np.any(inner) or tt[inner][-1] < t:
        ts.append(np.array([t]))
        xs.append(np.array([evaluate(X, t, left=True)]))
    times = np.concatenate(ts) - s
    times[0] = 0.0
    return Path._raw(times, np.concatenate(xs))


def reverse_restrict(X, t, s):
    """Time reversal u -> x_{t-u} of X on [s, t]."""
    if not (0 <= s <= t <= X.t_end):
        raise PathError("need 0 <= s <= t <= t_end")
    jm = X.jump_mask()
    if np.any(jm):
        jt = X.times[1:][jm]
        if np.any((jt >= s) & (jt <= t)):
            raise PathError("cannot reverse a path with a jump in the window")
    r = restrict(X, s, t)
    L = r.times[-1]
    times = L - r.times[::-1]
    times[0] = 0.0
    return Path._raw(np.ascontiguousarray(times), r.values[::-1].copy())


def insert_time(X, s):
    """Add a grid point at time s without changing the path."""
    if np.any(X.times == s):
        return X
    i = int(np.searchsorted(X.times, s))
    v = evaluate(X, s)
    return Path._raw(np.insert(X.times, i, s), np.insert(X.values, i, v))


def refine(X, factor=2):
    """Insert factor - 1 equispaced points inside every non-jump segment."""
    if factor == 1:
        return X
    ts, xs = [X.times[:1]], [X.values[:1]]
    u = np.arange(1, factor + 1) / factor
    for a, b, xa, xb in zip(X.times[:-1], X.times[1:], X.values[:-1], X.values[1:]):
        if b == a:
            ts.append(np.array([b]))
            xs.append(np.array([xb]))
        else:
            ts.append(a + (b - a) * u)
            xs.append(xa + (xb - xa) * u)
    t = np.concatenate(ts)
    return Path._raw(t, np.concatenate(xs))


# ---------------------------------------------------------------------------
# partitions and quadratic variation

@dataclass(frozen=True)
class PartitionSeq:
    """Refining partitions of [0, horizon]: dyadic (2**N + 1 points) or uniform (N + 1)."""
    scheme: str = "dyadic"
    n_min: int = 0
    n_max: int = 20
    horizon: float = 1.0

    def __post_init__(self):
        if self.scheme not in ("dyadic", "uniform"):
            raise ValueError("scheme must be 'dyadic' or 'uniform'")
        if self.n_min > self.n_max or (self.scheme == "uniform" and self.n_min < 1):
            raise ValueError("bad depth range")

    def grid(self, N):
        if not self.n_min <= N <= self.n_max:
            raise ValueError(f"level {N} outside {self.n_min}..{self.n_max}")
        m = (1 << N) if self.scheme == "dyadic" else N
        return np.linspace(0.0, self.horizon, m + 1)

    def mesh(self, N):
        return self.horizon / ((1 << N) if self.scheme == "dyadic" else N)


def quadratic_variation(X, partition, N):
    """Running sum of squared increments along level N, sampled on that level.

    Returns (grid points inside [0, t_end], qv values).
    """
    g = partition.grid(N)
    g = g[g <= X.t_end * (1 + 1e-14)]
    xv = evaluate(X, g)
    qv = np.concatenate([[0.0], np.cumsum(np.diff(xv) ** 2)])
    return g, qv


# ---------------------------------------------------------------------------
# metrics and seminorms

def _union_grid(*arrays):
    return np.unique(np.concatenate(arrays))


def lambda_distance(X, Y):
    """d(X_t, Y_s) = t - s + sup_{u<=t} |x_u - y_{u^s}|, arguments swapped if t < s."""
    if X.t_end < Y.t_end:
        X, Y = Y, X
    t, s = X.t_end, Y.t_end
    g = _union_grid(X.times, Y.times[Y.times <= s], [s])
    gy = np.minimum(g, s)
    d_right = np.abs(evaluate(X, g) - evaluate(Y, gy))
    d_left = np.abs(evaluate(X, g, left=True) - evaluate(Y, gy, left=True))
    return (t - s) + float(max(d_right.max(), d_left.max()))


def sup_norm(X, relative=False):
    """sup |x_s|, or sup |x_s - x_0| with relative=True."""
    v = X.values - X.values[0] if relative else X.values
    return float(np.max(np.abs(v)))


def lipschitz_seminorm(X):
    """Largest absolute segment slope (inf if the path jumps)."""
    dt, dx = X.dt, X.dx
    if dt.size == 0:
        return 0.0
    if np.any((dt == 0) & (dx != 0)):
        return float("inf")
    ok = dt > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(dx[ok] / dt[ok])))


def d1_distance(X, Y):
    """t - s + |y0 - y0'| + Lipschitz seminorm of X minus the flat extension of Y."""
    if X.t_end < Y.t_end:
        X, Y = Y, X
    t, s = X.t_end, Y.t_end
    g = _union_grid(X.times, Y.times, [s])
    diff = evaluate(X, g) - evaluate(Y, np.minimum(g, s))
    dg = np.diff(g)
    lip = float(np.max(np.abs(np.diff(diff)) / dg)) if dg.size else 0.0
    return (t - s) + abs(X.x0 - Y.x0) + lip


# ---------------------------------------------------------------------------
# random paths and CSV

def random_lipschitz_path(rng, n_seg=20, length=1.0, scale=1.0, x0=0.0, uneven=True):
    """Random piecewise-linear path with n_seg segments on [0, length]."""
    if uneven:
        w = rng.uniform(0.2, 1.0, n_seg)
        t = np.concatenate([[0.0], np.cumsum(w)])
        t *= length / t[-1]
        t[-1] = length
    else:
        t = np.linspace(0.0, length, n_seg + 1)
    steps = rng.standard_normal(n_seg) * np.sqrt(np.diff(t)) * scale
    x = x0 + np.concatenate([[0.0], np.cumsum(steps)])
    return Path(t, x)


def read_csv(src):
    """Read a path from a CSV file (or text) with header ``t,x``."""
    if isinstance(src, str) and "\n" not in src:
        with open(src, newline="", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = src
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["t", "x"]:
        raise PathError("CSV header must be 't,x'")
    data = [(float(r[0]), float(r[1])) for r in rows[1:] if r and any(c.strip() for c in r)]
    if not data:
        raise PathError("empty path file")
    t, x = zip(*data)
    return Path(t, x)


def write_csv(X, dest=None):
    lines = ["t,x"] + [f"{t!r},{x!r}" for t, x in zip(X.times.tolist(), X.values.tolist())]
    text = "\n".join(lines) + "\n"
    if dest is None:
        return text
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text
