"""Lattices in R^{d1} x R^{d2}: construction, duality, box enumeration and repellence scans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import DEFAULT_DIGIT_CAP, BudgetError, resolve_budget


def to_fraction(x) -> Fraction:
    """Exact rational from int, Fraction, "p/q" string or float (the float's exact binary value)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))


def frac_dist(theta) -> Fraction:
    """Exact distance from theta to the nearest integer."""
    theta = to_fraction(theta)
    r = theta - math.floor(theta)
    return min(r, 1 - r)


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    """Columns of `basis` generate the lattice; the first d1 coordinates are physical."""

    d1: int
    d2: int
    basis: np.ndarray
    det_abs: float
    exact: tuple = None

    @classmethod
    def from_matrix(cls, basis, d1, d2, exact=None):
        B = np.array(basis, dtype=float)
        n = d1 + d2
        if B.shape != (n, n):
            raise ValueError(f"basis must be {n}x{n}")
        scale = np.linalg.norm(B, 2)
        if not np.isfinite(scale) or scale == 0.0 or abs(np.linalg.det(B / scale)) <= 1e-12:
            raise ValueError("degenerate lattice")
        if exact is not None:
            exact = tuple(tuple(to_fraction(v) for v in row) for row in exact)
            det = abs(_fraction_det(exact))
            det_abs = float(det)
        else:
            det_abs = abs(float(np.linalg.det(B)))
        B.setflags(write=False)
        return cls(d1, d2, B, det_abs, exact)

    @property
    def dim(self):
        return self.d1 + self.d2

    @cached_property
    def inverse(self):
        if self.exact is not None:
            return np.array([[float(v) for v in row] for row in _fraction_inverse(self.exact)])
        return np.linalg.inv(self.basis)

    def point(self, coeffs) -> "LatticePoint":
        c = np.asarray(coeffs, dtype=np.int64)
        x = self.basis @ c
        return LatticePoint(tuple(int(v) for v in c), x[: self.d1].copy(), x[self.d1 :].copy())


@dataclass(frozen=True, eq=False)
class LatticePoint:
    coeffs: tuple
    x1: np.ndarray
    x2: np.ndarray


# ---------------------------------------------------------------------------
# exact linear algebra for small rational matrices


def _fraction_inverse(M):
    n = len(M)
    A = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise ValueError("degenerate lattice")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [v / p for v in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return tuple(tuple(row[n:]) for row in A)


def _fraction_det(M):
    n = len(M)
    A = [list(row) for row in M]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        det *= A[col][col]
        for r in range(col + 1, n):
            f = A[r][col] / A[col][col]
            A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return det


# ---------------------------------------------------------------------------
# named families


def dual_basis(L: LatticeBasis) -> LatticeBasis:
    """Gamma^perp with basis inverse-transpose of L.basis, so covol(dual) = 1/covol(L)."""
    if L.exact is not None:
        inv = _fraction_inverse(L.exact)
        exact_t = tuple(tuple(inv[j][i] for j in range(L.dim)) for i in range(L.dim))
        return LatticeBasis.from_matrix([[float(v) for v in row] for row in exact_t], L.d1, L.d2, exact_t)
    try:
        inv = np.linalg.inv(L.basis)
    except np.linalg.LinAlgError:
        raise ValueError("degenerate lattice") from None
    return LatticeBasis.from_matrix(inv.T, L.d1, L.d2)


def gamma_a_lattice(a) -> LatticeBasis:
    """g_a Z^2 with g_a = (1/2a) [[1, -a], [1, a]]; exact entries when a is rational."""
    if a <= 0:
        raise ValueError("a must be positive")
    if isinstance(a, (Fraction, int)):
        a = Fraction(a)
        ex = ((1 / (2 * a), Fraction(-1, 2)), (1 / (2 * a), Fraction(1, 2)))
        return LatticeBasis.from_matrix([[float(v) for v in r] for r in ex], 1, 1, ex)
    a = float(a)
    return LatticeBasis.from_matrix([[1 / (2 * a), -0.5], [1 / (2 * a), 0.5]], 1, 1)


def is_squarefree(D: int) -> bool:
    if D < 1:
        return False
    k = 2
    while k * k <= D:
        if D % (k * k) == 0:
            return False
        k += 1
    return True


def arithmetic_quadratic_lattice(D: int, ring: str = "sqrt") -> LatticeBasis:
    """Diagonal embedding x -> (x, x') of an order of Q(sqrt D).

    ring="sqrt" gives Z[sqrt D]; ring="maximal" uses (1 + sqrt D)/2 when D = 1 mod 4.
    This is the dual of the scheme lattice: callers take dual_basis to get Gamma.
    """
    if D < 2 or not is_squarefree(D):
        raise ValueError(f"D={D} must be a square-free integer >= 2")
    s = math.sqrt(D)
    if ring == "maximal" and D % 4 == 1:
        w, wc = (1 + s) / 2, (1 - s) / 2
    elif ring in ("sqrt", "maximal"):
        w, wc = s, -s
    else:
        raise ValueError(f"unknown ring {ring!r}")
    return LatticeBasis.from_matrix([[1.0, w], [1.0, wc]], 1, 1)


# ---------------------------------------------------------------------------
# enumeration


def _box_bounds(L, box1, box2):
    def norm(box, d):
        box = list(box)
        if d == 1 and len(box) == 2 and np.ndim(box[0]) == 0:
            box = [box]
        if len(box) != d:
            raise ValueError("box dimension mismatch")
        return box

    boxes = norm(box1, L.d1) + norm(box2, L.d2)
    lo = np.array([float(b[0]) for b in boxes])
    hi = np.array([float(b[1]) for b in boxes])
    return lo, hi


def _slab_limits(n, col, lo, hi, r, xtol, tlo, thi, ok):
    # a tiny column entry may overflow to +-inf, which is the right limit
    for j in range(n):
        cj = col[j]
        if cj > 0:
            tlo = np.maximum(tlo, (lo[j] - r[:, j]) / cj)
            thi = np.minimum(thi, (hi[j] - r[:, j]) / cj)
        elif cj < 0:
            tlo = np.maximum(tlo, (hi[j] - r[:, j]) / cj)
            thi = np.minimum(thi, (lo[j] - r[:, j]) / cj)
        else:
            ok &= (r[:, j] >= lo[j] - xtol[j]) & (r[:, j] <= hi[j] + xtol[j])
    return tlo, thi, ok


def iter_box_chunks(L: LatticeBasis, box1, box2, budget=None, chunk=1 << 18):
    """Yield (coeffs, x) blocks covering exactly the lattice points in box1 x box2.

    Coefficients are bounded coordinate-wise by interval arithmetic on basis^{-1}
    (complete, and never looser than the operator-norm bound).  All coordinates but
    the widest are iterated; the widest is solved exactly from the linear constraints.
    """
    budget = resolve_budget(budget)
    lo, hi = _box_bounds(L, box1, box2)
    n = L.dim
    if np.any(hi < lo):
        return
    B, Binv = L.basis, L.inverse
    pos = Binv > 0
    cmin = np.where(pos, Binv * lo, Binv * hi).sum(axis=1)
    cmax = np.where(pos, Binv * hi, Binv * lo).sum(axis=1)
    pad = 1e-9 * (1.0 + np.maximum(np.abs(cmin), np.abs(cmax)))
    kmin = np.ceil(cmin - pad).astype(np.int64)
    kmax = np.floor(cmax + pad).astype(np.int64)
    width = kmax - kmin + 1
    if np.any(width <= 0):
        return
    last = int(np.argmax(width))
    outer = [i for i in range(n) if i != last]
    shape = tuple(int(width[i]) for i in outer)
    n_outer = math.prod(shape)
    if n_outer > budget:
        raise BudgetError(f"budget: {n_outer} candidate slabs exceed {budget}")
    col = B[:, last]
    Bo = B[:, outer]
    xtol = 1e-12 * (1.0 + np.maximum(np.abs(lo), np.abs(hi)))
    spent = n_outer
    for start in range(0, n_outer, chunk):
        idx = np.arange(start, min(n_outer, start + chunk), dtype=np.int64)
        if outer:
            oc = np.stack(np.unravel_index(idx, shape), axis=1).astype(np.int64) + kmin[outer]
        else:
            oc = np.zeros((1, 0), dtype=np.int64)
        r = oc @ Bo.T if outer else np.zeros((1, n))
        tlo = np.full(len(oc), -np.inf)
        thi = np.full(len(oc), np.inf)
        ok = np.ones(len(oc), dtype=bool)
        with np.errstate(over="ignore"):
            tlo, thi, ok = _slab_limits(n, col, lo, hi, r, xtol, tlo, thi, ok)
        tpad = 1e-9 * (1.0 + np.abs(tlo) + np.abs(thi))
        a = np.ceil(tlo - tpad)
        b = np.floor(thi + tpad)
        a = np.maximum(a, kmin[last])
        b = np.minimum(b, kmax[last])
        cnt = np.where(ok & (b >= a), b - a + 1, 0).astype(np.int64)
        total = int(cnt.sum())
        spent += total
        if spent > budget:
            raise BudgetError(f"budget: more than {budget} candidates")
        if total == 0:
            continue
        rows = np.repeat(np.arange(len(oc)), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        t = a.astype(np.int64)[rows] + offs
        coeffs = np.empty((total, n), dtype=np.int64)
        if outer:
            coeffs[:, outer] = oc[rows]
        coeffs[:, last] = t
        x = coeffs @ B.T
        keep = np.all((x >= lo) & (x <= hi), axis=1)
        if keep.any():
            yield coeffs[keep], x[keep]


def enumerate_arrays(L: LatticeBasis, box1, box2, budget=None):
    """All lattice points in the box as (coeffs int64 (N, n), x (N, n)), sorted by coeffs."""
    parts = list(iter_box_chunks(L, box1, box2, budget))
    if not parts:
        return np.zeros((0, L.dim), dtype=np.int64), np.zeros((0, L.dim))
    coeffs = np.concatenate([p[0] for p in parts])
    x = np.concatenate([p[1] for p in parts])
    order = np.lexsort(coeffs.T[::-1])
    return coeffs[order], x[order]


def enumerate_in_box(L: LatticeBasis, box1, box2, budget=None) -> list:
    coeffs, x = enumerate_arrays(L, box1, box2, budget)
    return [LatticePoint(tuple(int(v) for v in c), xi[: L.d1], xi[L.d1 :]) for c, xi in zip(coeffs, x)]


def count_in_box(L: LatticeBasis, box1, box2, budget=None) -> int:
    return sum(len(c) for c, _ in iter_box_chunks(L, box1, box2, budget))


# ---------------------------------------------------------------------------
# repellence


@dataclass(frozen=True)
class RepellenceScan:
    rows: list
    beta_hat: float


def beta_repellence_scan(L: LatticeBasis, eps_list, xi2_cap, budget=None) -> RepellenceScan:
    """min ||x2||_inf over nonzero points with ||x1||_inf < eps and ||x2||_inf <= cap.

    Rows carry math.inf when nothing lies under the cap.  beta_hat is the least-squares
    slope of log(min) against log(1/eps) over the finite rows.
    """
    rows = []
    for eps in eps_list:
        if eps <= 0:
            raise ValueError("eps must be positive")
        try:
            _, x = enumerate_arrays(L, [(-eps, eps)] * L.d1, [(-xi2_cap, xi2_cap)] * L.d2, budget)
        except BudgetError as exc:
            raise BudgetError(str(exc), partial=rows) from None
        x1n = np.abs(x[:, : L.d1]).max(axis=1)
        x2n = np.abs(x[:, L.d1 :]).max(axis=1)
        keep = (x1n < eps) & ((x1n > 0) | (x2n > 0))
        rows.append((float(eps), float(x2n[keep].min()) if keep.any() else math.inf))
    fin = [(e, m) for e, m in rows if math.isfinite(m) and m > 0]
    beta = math.nan
    if len(fin) >= 2:
        X = np.log([1.0 / e for e, _ in fin])
        Y = np.log([m for _, m in fin])
        beta = float(np.polyfit(X, Y, 1)[0])
    return RepellenceScan(rows, beta)


def _half_space_vectors(d, q_max):
    rng = np.arange(-q_max, q_max + 1)
    grid = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), axis=-1).reshape(-1, d)
    first = np.argmax(grid != 0, axis=1)
    lead = grid[np.arange(len(grid)), first]
    return grid[lead > 0]


def alpha_repellence_scan(E, q_max: int, q_min: int = 2, budget=None):
    """alpha_hat = max over q_min <= ||q||_inf <= q_max of -log m(q) / log ||q||_inf.

    m(q) = min_p ||p + E q||_inf.  The default q_min = 2 skips ||q|| = 1 where the
    logarithm vanishes.  Rational entries are handled in exact arithmetic.
    Returns (alpha_hat, (p, q)); alpha_hat is math.inf when some m(q) = 0.
    """
    E = [list(row) for row in (E if np.ndim(E) == 2 else [[E]] if np.ndim(E) == 0 else [E])]
    d1, d2 = len(E), len(E[0])
    if q_max < max(1, q_min):
        raise ValueError("q_max must be at least q_min")
    n_q = (2 * q_max + 1) ** d2
    if n_q > resolve_budget(budget):
        raise BudgetError("budget")
    exact = all(isinstance(v, (int, Fraction)) for row in E for v in row)
    best = (-math.inf, None)
    if exact and d2 == 1:
        col = [to_fraction(row[0]) for row in E]
        for q in range(q_min, q_max + 1):
            vals = [c * q for c in col]
            m = max(frac_dist(v) for v in vals)
            score = math.inf if m == 0 else -math.log(m) / math.log(q)
            if score > best[0]:
                best = (score, (tuple(-round(v) for v in vals), (q,)))
        return best
    Ef = np.array([[float(v) for v in row] for row in E])
    qs = _half_space_vectors(d2, q_max)
    qn = np.abs(qs).max(axis=1)
    qs, qn = qs[qn >= q_min], qn[qn >= q_min]
    y = qs @ Ef.T
    p = -np.round(y)
    m = np.abs(y + p).max(axis=1)
    with np.errstate(divide="ignore"):
        score = np.where(m == 0, np.inf, -np.log(np.where(m == 0, 1, m)) / np.log(qn))
    i = int(np.argmax(score))
    return float(score[i]), (tuple(int(v) for v in p[i]), tuple(int(v) for v in qs[i]))


def norm_form_violations(D: int, bound: int) -> list:
    """Nonzero (x, y) with max(|x|, |y|) <= bound and |x^2 - D y^2| < 1, in exact integers.

    For squarefree D > 1 the norm form never vanishes off the origin, so the list is empty.
    """
    bad = []
    for y in range(-bound, bound + 1):
        Dy2 = D * y * y
        for x in range(-bound, bound + 1):
            if (x or y) and abs(x * x - Dy2) < 1:
                bad.append((x, y))
    return bad


# ---------------------------------------------------------------------------
# Liouville parameters


@dataclass(frozen=True)
class LiouvilleParam:
    gamma: Fraction
    levels: tuple
    a_truncated: Fraction
    m_list: tuple = field(repr=False)


def _gamma_fraction(gamma) -> Fraction:
    if isinstance(gamma, float):
        return Fraction(repr(gamma))
    return to_fraction(gamma)


def power_bound_holds(x: Fraction, m: int, gamma: Fraction) -> bool:
    """Exact test of x <= m^(-gamma) for rational gamma = P/Q and x >= 0."""
    P, Q = gamma.numerator, gamma.denominator
    return x.numerator**Q * m**P <= x.denominator**Q


def liouville_param(gamma, K: int, digit_cap: int = DEFAULT_DIGIT_CAP) -> LiouvilleParam:
    """a = sum_{j<=K} 10^(-n_j) with n_1 = 1 and n_{j+1} the least integer above (gamma+1) n_j.

    Taking the integer strictly above (gamma+1) n_j keeps {m_k a} <= m_k^(-gamma) exact
    for every level, including when (gamma+1) n_j is itself an integer.
    """
    g = _gamma_fraction(gamma)
    if g <= 2:
        raise ValueError("gamma must exceed 2")
    if K < 2:
        raise ValueError("need at least two levels")
    levels = [1]
    while len(levels) < K:
        nxt = math.floor((g + 1) * levels[-1]) + 1
        if nxt > digit_cap:
            raise ValueError(f"infeasible K={K} under the digit cap; largest feasible K is {len(levels)}")
        levels.append(nxt)
    while True:
        a = sum(Fraction(1, 10**n) for n in levels)
        bad = next(
            (k for k in range(K) if not power_bound_holds(frac_dist(a * 10 ** levels[k]), 10 ** levels[k], g)),
            None,
        )
        if bad is None:
            break
        levels[bad + 1] += 1
        for j in range(bad + 2, K):
            levels[j] = max(levels[j], math.floor((g + 1) * levels[j - 1]) + 1)
        if levels[-1] > digit_cap:
            raise ValueError(f"infeasible K={K} under the digit cap")
    return LiouvilleParam(g, tuple(levels), a, tuple(10**n for n in levels))


# ---------------------------------------------------------------------------
# serialisation


def _rat_str(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def lattice_to_dict(L: LatticeBasis) -> dict:
    d = {"d1": L.d1, "d2": L.d2, "basis": [[float(v) for v in row] for row in L.basis]}
    if L.exact is not None:
        d["exact"] = [[_rat_str(v) for v in row] for row in L.exact]
    return d


def lattice_from_dict(d: dict) -> LatticeBasis:
    exact = d.get("exact")
    if exact is not None:
        exact = [[Fraction(v) for v in row] for row in exact]
        basis = [[float(v) for v in row] for row in exact]
    else:
        basis = d["basis"]
    return LatticeBasis.from_matrix(basis, int(d["d1"]), int(d["d2"]), exact)
