"""Numpy implementations of the compiled kernels.

count_points_2d follows the compiled loop step for step, so counts agree exactly.
"""

import numpy as np


def sinc2(L, x):
    """(sin(pi L x) / (pi x))^2 with value L^2 at 0 and exact zeros at integer L x."""
    x = np.asarray(x, dtype=float)
    t = L * x
    # same remainder as fmod(t, 2), exactly, at a fraction of the cost
    s = np.sin(np.pi * (t - 2.0 * np.trunc(0.5 * t)))
    s = np.where(t == np.round(t), 0.0, s)
    safe = np.where(x == 0.0, 1.0, x)
    v = s / (np.pi * safe)
    return np.where(x == 0.0, L * L, v * v)


def _slab(bo, ba, lo, hi, c, lo_t, hi_t, alive):
    r = ba * c
    if bo != 0:
        # a tiny bo overflows to +-inf, which the clamps below absorb as in the compiled loop
        with np.errstate(over="ignore"):
            return _slab_div(bo, lo, hi, r, lo_t, hi_t, alive)
    alive &= ~((r < lo) | (r > hi))
    return lo_t, hi_t, alive


def _slab_div(bo, lo, hi, r, lo_t, hi_t, alive):
    if bo > 0:
        tl = (lo - r) / bo
        th = (hi - r) / bo
    else:
        tl = (hi - r) / bo
        th = (lo - r) / bo
    return np.maximum(lo_t, tl), np.minimum(hi_t, th), alive


def count_points_2d(B, Binv, lo1, hi1, lo2, hi2, axis):
    B = np.ascontiguousarray(B, dtype=float)
    lo1, hi1, lo2, hi2 = (np.asarray(v, dtype=float) for v in (lo1, hi1, lo2, hi2))
    other = 1 - axis
    u0, u1 = float(Binv[axis, 0]), float(Binv[axis, 1])
    ba0, ba1, bo0, bo1 = B[0, axis], B[1, axis], B[0, other], B[1, other]
    a0, b0 = (u0 * lo1, u0 * hi1) if u0 > 0 else (u0 * hi1, u0 * lo1)
    a1, b1 = (u1 * lo2, u1 * hi2) if u1 > 0 else (u1 * hi2, u1 * lo2)
    cmin = np.ceil(a0 + a1)
    cmax = np.floor(b0 + b1)
    out = np.zeros(len(lo1), dtype=np.int64)
    if len(lo1) == 0:
        return out
    span = int(np.max(cmax - cmin)) if np.any(cmax >= cmin) else -1
    for off in range(span + 1):
        c = cmin + off
        alive = c <= cmax
        lo_t = np.full(len(c), -1e300)
        hi_t = np.full(len(c), 1e300)
        lo_t, hi_t, alive = _slab(bo0, ba0, lo1, hi1, c, lo_t, hi_t, alive)
        lo_t, hi_t, alive = _slab(bo1, ba1, lo2, hi2, c, lo_t, hi_t, alive)
        # an empty range can hold infinities, which must not reach the cast
        alive &= hi_t >= lo_t
        span_t = np.where(alive, np.floor(hi_t) - np.ceil(lo_t) + 1.0, 0.0)
        k = span_t.astype(np.int64)
        out += np.where(k > 0, k, 0)
    return out


def sinc2_sum_2d(V, Vinv, axis, E, C, L1, L2, chunk=1 << 18):
    V = np.asarray(V, dtype=float)
    L1 = np.asarray(L1, dtype=float)
    other = 1 - axis
    u0, u1 = abs(float(Vinv[axis, 0])), abs(float(Vinv[axis, 1]))
    va0, va1, vo0, vo1 = V[0, axis], V[1, axis], V[0, other], V[1, other]
    cmin = np.ceil(-(u0 * E + u1 * C))
    cmax = np.floor(u0 * E + u1 * C)
    acc = np.zeros(len(L1))
    npts = 0
    cs = np.arange(cmin, cmax + 1.0)
    # rows per batch sized so the expanded point arrays stay near `chunk`
    per_row = max(1.0, 2.0 * min(E / abs(vo0) if vo0 else np.inf, C / abs(vo1) if vo1 else np.inf) + 2.0)
    step = max(1, int(chunk / per_row))
    for start in range(0, len(cs), step):
        c = cs[start:start + step]
        alive = np.ones(len(c), dtype=bool)
        lo_t = np.full(len(c), -1e300)
        hi_t = np.full(len(c), 1e300)
        lo_t, hi_t, alive = _slab(vo0, va0, -E, E, c, lo_t, hi_t, alive)
        lo_t, hi_t, alive = _slab(vo1, va1, -C, C, c, lo_t, hi_t, alive)
        t0 = np.ceil(lo_t)
        n = np.where(alive, np.floor(hi_t) - t0 + 1.0, 0.0).clip(min=0).astype(np.int64)
        if n.sum() == 0:
            continue
        rows = np.repeat(np.arange(len(c)), n)
        first = np.cumsum(n) - n
        t = t0[rows] + (np.arange(n.sum()) - first[rows])
        x0 = va0 * c[rows] + vo0 * t
        x1 = va1 * c[rows] + vo1 * t
        keep = ((x0 != 0.0) | (x1 != 0.0)) & (np.abs(x0) <= E) & (np.abs(x1) <= C)
        x0, x1 = x0[keep], x1[keep]
        npts += len(x0)
        w2 = sinc2(L2, x1)
        nz = w2 != 0.0
        x0, w2 = x0[nz], w2[nz]
        for j, L in enumerate(L1):
            acc[j] += float(np.dot(sinc2(L, x0), w2))
    return acc, npts
