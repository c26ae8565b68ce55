"""Hot kernels for signature folds and trapezoid levels.

Every kernel exists twice: a numba version compiled in nopython mode and a
pure numpy twin.  ``SIGTAYLOR_NO_NUMBA=1`` (or a missing numba install)
selects the numpy versions.  ``SIGTAYLOR_THREADS`` caps numba's thread pool.

Signature arrays are flat: the word of length n whose letters read as the
binary number v (first letter most significant) sits at ``2**n - 1 + v``.
"""
import os

import numpy as np

try:
    import numba
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    _HAVE_NUMBA = False


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = _HAVE_NUMBA and not _env_flag("SIGTAYLOR_NO_NUMBA")


def thread_cap():
    """Thread cap from SIGTAYLOR_THREADS, or None when unset."""
    raw = os.environ.get("SIGTAYLOR_THREADS", "").strip()
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError("SIGTAYLOR_THREADS must be a positive integer")
    return n


if _HAVE_NUMBA and thread_cap() is not None:
    numba.set_num_threads(min(thread_cap(), numba.config.NUMBA_NUM_THREADS))


def n_coords(depth):
    return (1 << (depth + 1)) - 1


def _njit(fn):
    if _HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


# ---------------------------------------------------------------------------
# numba kernels

@_njit
def _seg_coords_nb(dt, dx, depth, out):
    out[0] = 1.0
    for n in range(1, depth + 1):
        off = (1 << n) - 1
        poff = (1 << (n - 1)) - 1
        for v in range(1 << n):
            d = dx if (v & 1) else dt
            out[off + v] = out[poff + (v >> 1)] * d / n


@_njit
def _chen_inplace_nb(s, seg, depth):
    # s <- s (x) seg, top level first so lower levels are still the old values
    for n in range(depth, 0, -1):
        off = (1 << n) - 1
        for v in range(1 << n):
            acc = seg[off + v]
            for j in range(1, n):
                acc += s[(1 << (n - j)) - 1 + (v >> j)] * seg[(1 << j) - 1 + (v & ((1 << j) - 1))]
            s[off + v] += acc


@_njit
def _chen_product_nb(a, b, depth):
    out = a.copy()
    _chen_inplace_nb(out, b, depth)
    return out


@_njit
def _sig_fold_nb(dt, dx, depth):
    n_paths, n_seg = dx.shape
    w = (1 << (depth + 1)) - 1
    out = np.zeros((n_paths, w))
    seg = np.empty(w)
    for p in range(n_paths):
        s = out[p]
        s[0] = 1.0
        for i in range(n_seg):
            _seg_coords_nb(dt[p, i], dx[p, i], depth, seg)
            _chen_inplace_nb(s, seg, depth)
    return out


@_njit
def _sig_running_nb(dt, dx, depth):
    n_seg = dx.shape[0]
    w = (1 << (depth + 1)) - 1
    out = np.zeros((n_seg + 1, w))
    out[0, 0] = 1.0
    seg = np.empty(w)
    s = out[0].copy()
    for i in range(n_seg):
        _seg_coords_nb(dt[i], dx[i], depth, seg)
        _chen_inplace_nb(s, seg, depth)
        out[i + 1] = s
    return out


@_njit
def _strat_levels_nb(dt, dx, depth):
    n_seg = dx.shape[0]
    w = (1 << (depth + 1)) - 1
    r = np.zeros((n_seg + 1, w))
    for k in range(n_seg + 1):
        r[k, 0] = 1.0
    for k in range(1, n_seg + 1):
        for n in range(1, depth + 1):
            off = (1 << n) - 1
            poff = (1 << (n - 1)) - 1
            for v in range(1 << n):
                p = poff + (v >> 1)
                d = dx[k - 1] if (v & 1) else dt[k - 1]
                r[k, off + v] = r[k - 1, off + v] + 0.5 * (r[k - 1, p] + r[k, p]) * d
    return r


@_njit
def _bridge_max_nb(values, dt, u):
    # exact max of a Brownian bridge on each segment, unit variance per time
    n_paths, n_seg = u.shape
    out = np.empty(n_paths)
    for p in range(n_paths):
        m = values[p, 0]
        for i in range(n_seg):
            a = values[p, i]
            b = values[p, i + 1]
            d = b - a
            c = 0.5 * (a + b + np.sqrt(d * d - 2.0 * dt[i] * np.log(u[p, i])))
            if c > m:
                m = c
        out[p] = m
    return out


# ---------------------------------------------------------------------------
# numpy twins

_INDEX_CACHE = {}


def _chen_index(depth):
    """Per level n and split j: (prefix ranks, suffix ranks) for the block."""
    if depth in _INDEX_CACHE:
        return _INDEX_CACHE[depth]
    table = []
    for n in range(1, depth + 1):
        v = np.arange(1 << n)
        splits = []
        for j in range(1, n):
            pre = (1 << (n - j)) - 1 + (v >> j)
            suf = (1 << j) - 1 + (v & ((1 << j) - 1))
            splits.append((pre, suf))
        table.append(((1 << n) - 1, v, splits))
    _INDEX_CACHE[depth] = table
    return table


def _seg_coords_np(dt, dx, depth):
    # dt, dx: (P,) -> (P, W)
    dt = np.asarray(dt, dtype=float)
    dx = np.asarray(dx, dtype=float)
    out = np.empty(dt.shape + (n_coords(depth),))
    out[..., 0] = 1.0
    for n in range(1, depth + 1):
        off = (1 << n) - 1
        poff = (1 << (n - 1)) - 1
        v = np.arange(1 << n)
        par = out[..., poff + (v >> 1)]
        d = np.where(v & 1, dx[..., None], dt[..., None])
        out[..., off:off + (1 << n)] = par * d / n
    return out


def _chen_inplace_np(s, seg, depth):
    for off, v, splits in reversed(_chen_index(depth)):
        acc = seg[..., off + v].copy()
        for pre, suf in splits:
            acc += s[..., pre] * seg[..., suf]
        s[..., off + v] += acc


def _chen_product_np(a, b, depth):
    out = np.array(a, dtype=float, copy=True)
    _chen_inplace_np(out, np.asarray(b, dtype=float), depth)
    return out


def _sig_fold_np(dt, dx, depth):
    n_paths, n_seg = dx.shape
    out = np.zeros((n_paths, n_coords(depth)))
    out[:, 0] = 1.0
    for i in range(n_seg):
        seg = _seg_coords_np(dt[:, i], dx[:, i], depth)
        _chen_inplace_np(out, seg, depth)
    return out


def _sig_running_np(dt, dx, depth):
    n_seg = dx.shape[0]
    out = np.zeros((n_seg + 1, n_coords(depth)))
    out[0, 0] = 1.0
    s = out[0].copy()
    for i in range(n_seg):
        _chen_inplace_np(s, _seg_coords_np(dt[i], dx[i], depth), depth)
        out[i + 1] = s
    return out


def _strat_levels_np(dt, dx, depth):
    # level by level, vectorised over the time grid with a cumulative sum
    n_seg = dx.shape[0]
    r = np.zeros((n_seg + 1, n_coords(depth)))
    r[:, 0] = 1.0
    for n in range(1, depth + 1):
        off = (1 << n) - 1
        poff = (1 << (n - 1)) - 1
        for v in range(1 << n):
            par = r[:, poff + (v >> 1)]
            d = dx if (v & 1) else dt
            r[1:, off + v] = np.cumsum(0.5 * (par[:-1] + par[1:]) * d)
    return r


def _bridge_max_np(values, dt, u):
    a = values[:, :-1]
    b = values[:, 1:]
    c = 0.5 * (a + b + np.sqrt((b - a) ** 2 - 2.0 * dt[None, :] * np.log(u)))
    return np.maximum(values[:, 0], c.max(axis=1))


# ---------------------------------------------------------------------------
# dispatch

def seg_coords(dt, dx, depth):
    """Tensor exponential of one segment as a flat array."""
    if USE_NUMBA:
        out = np.empty(n_coords(depth))
        _seg_coords_nb(float(dt), float(dx), depth, out)
        return out
    return _seg_coords_np(dt, dx, depth)


def chen_product(a, b, depth):
    if USE_NUMBA:
        return _chen_product_nb(np.ascontiguousarray(a, dtype=float),
                                np.ascontiguousarray(b, dtype=float), depth)
    return _chen_product_np(a, b, depth)


def sig_fold(dt, dx, depth):
    """Signatures of a batch of piecewise-linear paths.

    dt, dx : (n_paths, n_segments) increments.  Returns (n_paths, W).
    """
    dt = np.ascontiguousarray(np.broadcast_to(dt, np.shape(dx)), dtype=float)
    dx = np.ascontiguousarray(dx, dtype=float)
    if USE_NUMBA:
        return _sig_fold_nb(dt, dx, depth)
    return _sig_fold_np(dt, dx, depth)


def sig_running(dt, dx, depth):
    """Exact signature of every prefix of one path, shape (n_seg + 1, W)."""
    dt = np.ascontiguousarray(dt, dtype=float)
    dx = np.ascontiguousarray(dx, dtype=float)
    if USE_NUMBA:
        return _sig_running_nb(dt, dx, depth)
    return _sig_running_np(dt, dx, depth)


def strat_levels(dt, dx, depth):
    """Trapezoid iterated integrals on the grid, shape (n_seg + 1, W)."""
    dt = np.ascontiguousarray(dt, dtype=float)
    dx = np.ascontiguousarray(dx, dtype=float)
    if USE_NUMBA:
        return _strat_levels_nb(dt, dx, depth)
    return _strat_levels_np(dt, dx, depth)


def bridge_max(values, dt, u):
    """Sampled maxima of Brownian bridges through the grid values.

    values : (n_paths, n + 1); dt : (n,) variance per segment (sigma^2 dt);
    u : (n_paths, n) uniforms in (0, 1].
    """
    values = np.ascontiguousarray(values, dtype=float)
    dt = np.ascontiguousarray(dt, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    if USE_NUMBA:
        return _bridge_max_nb(values, dt, u)
    return _bridge_max_np(values, dt, u)


KERNELS = {
    "numba": {"sig_fold": _sig_fold_nb, "sig_running": _sig_running_nb,
              "strat_levels": _strat_levels_nb, "chen_product": _chen_product_nb,
              "bridge_max": _bridge_max_nb},
    "numpy": {"sig_fold": _sig_fold_np, "sig_running": _sig_running_np,
              "strat_levels": _strat_levels_np, "chen_product": _chen_product_np,
              "bridge_max": _bridge_max_np},
}
