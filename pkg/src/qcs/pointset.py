"""Random cut-and-project point sets on the torus, Monte Carlo number variance, Poisson control.

Convention: omega = (g, h) realises {gamma1 + g : gamma2 + h in W}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .diffraction import Scheme
from .lattice import enumerate_arrays
from .window import volume

BLOCK = 4096


@dataclass(frozen=True)
class TorusPoint:
    coeffs: np.ndarray
    g: np.ndarray
    h: np.ndarray


@dataclass(frozen=True)
class PointSample:
    points: np.ndarray
    region: tuple
    origin: object = None
    scheme_label: str = ""


@dataclass(frozen=True)
class VarianceEstimate:
    R: float
    n_samples: int
    mean_count: float
    variance: float
    stderr_variance: float
    seed: int


@dataclass(frozen=True)
class PoissonProcess:
    """Homogeneous Poisson process, accepted wherever a scheme is sampled."""

    intensity: float
    d: int = 1
    label: str = "poisson"


def uniform_blocks(seed, n, dim, stream=0):
    """n x dim uniforms; block b is drawn from SeedSequence([seed, stream, b]).

    Blocks have a fixed size, so any split of the sample range reproduces the same numbers.
    """
    out = np.empty((n, dim))
    for b, start in enumerate(range(0, n, BLOCK)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream), b])))
        block = rng.random((BLOCK, dim))
        stop = min(n, start + BLOCK)
        out[start:stop] = block[: stop - start]
    return out


def _torus_from_coeffs(S: Scheme, coeffs):
    x = coeffs @ np.asarray(S.lattice.basis).T
    d1 = S.lattice.d1
    return x[:, :d1], x[:, d1:]


def sample_torus(S: Scheme, seed) -> TorusPoint:
    c = uniform_blocks(seed, 1, S.lattice.dim)
    g, h = _torus_from_coeffs(S, c)
    return TorusPoint(c[0], g[0], h[0])


def realize_pointset(S: Scheme, omega: TorusPoint, region, budget=None) -> PointSample:
    region = [tuple(map(float, r)) for r in region]
    g = np.asarray(omega.g, dtype=float)
    h = np.asarray(omega.h, dtype=float)
    box1 = [(lo - gi, hi - gi) for (lo, hi), gi in zip(region, g)]
    box2 = [(lo - hi_, hi - hi_) for (lo, hi), hi_ in zip(S.window.bounding_box(), h)]
    _, x = enumerate_arrays(S.lattice, box1, box2, budget)
    d1 = S.lattice.d1
    x1, x2 = x[:, :d1], x[:, d1:]
    keep = S.window.contains(x2 + h)
    pts = x1[keep] + g
    order = np.lexsort(pts.T[::-1]) if len(pts) else np.zeros(0, dtype=int)
    return PointSample(pts[order], tuple(region), omega, S.label)


def _ball_counts_generic(S: Scheme, R, g, h):
    out = np.empty(len(g), dtype=np.int64)
    d1 = S.lattice.d1
    for i in range(len(g)):
        om = TorusPoint(None, g[i], h[i])
        P = realize_pointset(S, om, [(-R, R)] * d1)
        out[i] = int((np.sqrt((P.points**2).sum(axis=1)) <= R).sum()) if len(P.points) else 0
    return out


def ball_counts(S, R, n_samples, seed, stream=0, impl=None):
    """#(Lambda_omega in B_R) for n_samples independent omega."""
    if isinstance(S, PoissonProcess):
        return _poisson_counts(S, R, n_samples, seed, stream)
    u = uniform_blocks(seed, n_samples, S.lattice.dim, stream)
    g, h = _torus_from_coeffs(S, u)
    W = S.window
    if S.lattice.d1 == 1 and S.lattice.d2 == 1:
        (wlo, whi), = W.bounding_box()
        B = np.ascontiguousarray(S.lattice.basis)
        Binv = np.ascontiguousarray(S.lattice.inverse)
        return kernels.count_points_2d(
            B, Binv, -R - g[:, 0], R - g[:, 0], wlo - h[:, 0], whi - h[:, 0],
            axis=kernels.pick_axis(B), impl=impl,
        )
    return _ball_counts_generic(S, R, g, h)


def _poisson_counts(P: PoissonProcess, R, n_samples, seed, stream):
    # a Poisson count on the enclosing cube, thinned to the ball by uniform locations
    out = np.empty(n_samples, dtype=np.int64)
    mean = P.intensity * (2.0 * R) ** P.d
    for b, start in enumerate(range(0, n_samples, BLOCK)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream), b])))
        k = rng.poisson(mean, BLOCK)
        stop = min(n_samples, start + BLOCK)
        for i in range(stop - start):
            x = rng.uniform(-R, R, (k[i], P.d))
            out[start + i] = int(((x**2).sum(axis=1) <= R * R).sum())
    return out


def variance_estimate(counts, R, seed) -> VarianceEstimate:
    c = np.asarray(counts, dtype=float)
    n = len(c)
    if n < 2:
        raise ValueError("need at least 2 samples")
    mean = float(c.mean())
    dev = c - mean
    var = float((dev**2).sum() / (n - 1))
    m4 = float((dev**4).mean())
    se = math.sqrt(max(m4 - var * var, 0.0) / n)
    return VarianceEstimate(float(R), n, mean, var, se, int(seed))


def mc_number_variance(S, R, n_samples, seed, stream=0, impl=None) -> VarianceEstimate:
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    return variance_estimate(ball_counts(S, R, n_samples, seed, stream, impl), R, seed)


def ball_volume(d, R):
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * R**d


def mc_anv_curve(S, R_grid, n_samples, seed):
    """[(R, variance/Vol(B_R), stderr/Vol(B_R))], stream i+1 for the i-th radius."""
    d = S.d if isinstance(S, PoissonProcess) else S.lattice.d1
    out = []
    for i, R in enumerate(R_grid):
        est = mc_number_variance(S, R, n_samples, seed, stream=i + 1)
        v = ball_volume(d, R)
        out.append((float(R), est.variance / v, est.stderr_variance / v))
    return out


def poisson_sampler(intensity, region, seed) -> PointSample:
    region = [tuple(map(float, r)) for r in region]
    vol = math.prod(hi - lo for lo, hi in region)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed)])))
    k = rng.poisson(intensity * vol)
    lo = np.array([r[0] for r in region])
    hi = np.array([r[1] for r in region])
    pts = lo + (hi - lo) * rng.random((k, len(region)))
    return PointSample(pts, tuple(region), None, "poisson")


# ---------------------------------------------------------------------------
# Meyer-type checks


def _covering_1d(pts, lo, hi):
    """sup over y in [lo, hi] of the distance from y to the nearest point of pts (sorted)."""
    best = 0.0
    if lo < pts[0]:
        best = max(best, pts[0] - lo)
    if hi > pts[-1]:
        best = max(best, hi - pts[-1])
    a, b = pts[:-1], pts[1:]
    overlap = (b >= lo) & (a <= hi)
    if overlap.any():
        a, b = a[overlap], b[overlap]
        y = np.clip((a + b) / 2.0, lo, hi)
        best = max(best, float(np.minimum(y - a, b - y).max()))
    return float(best)


def _covering_nd(pts, region, n_grid=40):
    axes = [np.linspace(lo, hi, n_grid) for lo, hi in region]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(region))
    best = 0.0
    for start in range(0, len(grid), 512):
        q = grid[start:start + 512]
        d2 = ((q[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(np.sqrt(d2.min(axis=1)).max()))
    return best


def _min_gap(pts):
    if pts.shape[1] == 1:
        return float(np.diff(np.sort(pts[:, 0])).min())
    best = math.inf
    for start in range(0, len(pts), 512):
        q = pts[start:start + 512]
        d2 = ((q[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        idx = np.arange(start, start + len(q))
        d2[np.arange(len(q)), idx] = np.inf
        best = min(best, float(np.sqrt(d2.min())))
    return best


def meyer_checks(P: PointSample, margin=None) -> dict:
    pts = np.asarray(P.points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if len(pts) < 2:
        raise ValueError("too few points")
    d = pts.shape[1]
    region = [tuple(r) for r in P.region]

    def cover(m):
        shrunk = [(lo + m, hi - m) for lo, hi in region]
        if any(hi <= lo for lo, hi in shrunk):
            raise ValueError("margin leaves an empty region")
        if d == 1:
            return _covering_1d(np.sort(pts[:, 0]), *shrunk[0]), shrunk
        return _covering_nd(pts, shrunk), shrunk

    if margin is None:
        # the margin defaults to the covering radius itself, estimated once and refined once
        est, _ = cover(0.0)
        est, _ = cover(est)
        margin = est
    cr, shrunk = cover(margin)
    out = {"min_gap": _min_gap(pts), "covering_radius": cr, "two_syndetic_in_Z": None}
    if d == 1:
        x = pts[:, 0]
        t = -x[0] + math.floor(x[0])
        shifted = x + t
        if np.all(np.abs(shifted - np.round(shifted)) <= 1e-9):
            ints = set(np.round(shifted).astype(np.int64).tolist())
            lo, hi = shrunk[0]
            ks = range(math.ceil(lo + t), math.floor(hi + t) + 1)
            out["two_syndetic_in_Z"] = all(k in ints or (k - 1) in ints for k in ks)
    return out
