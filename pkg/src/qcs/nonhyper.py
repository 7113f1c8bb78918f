"""Non-hyperuniform Gamma_a schemes: resonant frequencies, exact small-interval masses,
and growth certificates along u_k = 2 m_k^(-gamma).

Every mod-1 reduction is done in exact rationals; only the final sin/pi are floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

from .errors import BudgetError, QCSError, resolve_budget
from .lattice import LiouvilleParam, frac_dist, liouville_param, to_fraction

TWO_PI = 2.0 * math.pi


def _round_half(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def _gauss_reduce(b1, b2):
    """Lagrange-Gauss reduction of two exact vectors; returns (b1, b2, T) with rows of T
    giving the new vectors in terms of the old ones."""
    T1, T2 = [1, 0], [0, 1]

    def dot(u, v):
        return u[0] * v[0] + u[1] * v[1]

    while True:
        if dot(b1, b1) > dot(b2, b2):
            b1, b2, T1, T2 = b2, b1, T2, T1
        mu = _round_half(Fraction(dot(b1, b2)) / dot(b1, b1))
        if mu == 0:
            return b1, b2, (T1, T2)
        b2 = (b2[0] - mu * b1[0], b2[1] - mu * b1[1])
        T2 = [T2[0] - mu * T1[0], T2[1] - mu * T1[1]]


def resonant_pairs(a, u, m_max, budget=None):
    """All integer (m, n) with |m| <= m_max and |a m - n| <= u, exactly.

    The pairs form the lattice points of {(m u, (a m - n) m_max)} in the square of half
    width m_max u; a reduced basis makes the enumeration cost proportional to the output.
    """
    a, u = to_fraction(a), to_fraction(u)
    M = int(m_max)
    if u <= 0 or M < 0:
        return []
    budget = resolve_budget(budget)
    if M == 0:
        return [(0, n) for n in range(-math.floor(u), math.floor(u) + 1)]
    half = M * u
    # basis vectors for m and n
    bm = (u, a * M)
    bn = (Fraction(0), Fraction(-M))
    r1, r2, (T1, T2) = _gauss_reduce(bm, bn)
    det = r1[0] * r2[1] - r1[1] * r2[0]
    # coefficient y of r2 is bounded through the inverse matrix
    ybound = (abs(r1[1]) + abs(r1[0])) * half / abs(det)
    ymax = math.floor(ybound)
    if 2 * ymax + 1 > budget:
        raise BudgetError(f"budget: {2 * ymax + 1} slabs")
    out = []
    for y in range(-ymax, ymax + 1):
        lo, hi = None, None
        ok = True
        for j in range(2):
            c = r1[j]
            rest = y * r2[j]
            if c == 0:
                if abs(rest) > half:
                    ok = False
                continue
            t1, t2 = (-half - rest) / c, (half - rest) / c
            if t1 > t2:
                t1, t2 = t2, t1
            lo = t1 if lo is None else max(lo, t1)
            hi = t2 if hi is None else min(hi, t2)
        if not ok or lo is None:
            continue
        for x in range(math.ceil(lo), math.floor(hi) + 1):
            m = x * T1[0] + y * T2[0]
            n = x * T1[1] + y * T2[1]
            out.append((m, n))
            if len(out) > budget:
                raise BudgetError("budget: too many resonant pairs")
    return sorted(set(out))


def _sin_2pi(theta: Fraction) -> float:
    """sin(2 pi theta) after exact reduction of theta mod 1."""
    r = theta - math.floor(theta)
    if r == 0 or r == Fraction(1, 2):
        return 0.0
    return math.sin(TWO_PI * float(r))


def diffraction_mass_gamma_ab(a, b, u, m_max):
    """(mass of [-u, u] under the centered diffraction of Gamma_a with W = [-b, b], tail bound).

    mass = 4 a^2 sum_{0 < |m| <= m_max, |a m - n| <= u} sin^2(2 pi b (a m + n)) / (pi (a m + n))^2;
    the m = 0 row is empty for u < 1.  The tail covers |m| > m_max.
    """
    a, b, u = to_fraction(a), to_fraction(b), to_fraction(u)
    if u >= 1:
        raise QCSError("u must be below 1 for this formula")
    if u <= 0:
        raise ValueError("u must be positive")
    M = int(m_max)
    total = 0.0
    for m, n in resonant_pairs(a, u, M):
        if m == 0:
            continue
        s = a * m + n
        sv = _sin_2pi(b * s)
        if sv == 0.0:
            continue
        total += (sv / (math.pi * float(s))) ** 2
    a2 = float(a) ** 2
    mass = 4.0 * a2 * total
    tail = 16.0 / (math.pi**2 * M) if M >= 1 and float(a) * (M + 1) >= 1 else math.inf
    return mass, tail


def q_u_set(a, u, m_max) -> list:
    """Nonzero m with |m| <= m_max and {a m}_Z <= u/2, both signs."""
    a, u = to_fraction(a), to_fraction(u)
    if not 0 < u < 1:
        raise ValueError("u must lie in (0, 1)")
    half = u / 2
    ms = sorted({m for m, _ in resonant_pairs(a, half, m_max) if m != 0})
    return [m for m in ms if frac_dist(a * m) <= half]


def resonant_b_search(a, m_k, grid_n=10_000):
    """b_j = j / (2 a (N+1)) maximising sin^2(4 pi a b m) jointly over the given m.

    4 pi a b_j m = 2 pi j m / (N+1), so the score only needs j m mod (N+1).
    m_k may be a single integer or a sequence; the minimum over them is maximised.
    """
    a = to_fraction(a)
    ms = [int(m) for m in (m_k if isinstance(m_k, (list, tuple)) else [m_k])]
    if any(m < 1 for m in ms):
        raise ValueError("m_k must be positive")
    N = int(grid_n)
    if N < 1:
        raise QCSError("infeasible grid")
    mod = N + 1
    j = np.arange(1, N + 1, dtype=np.int64)
    score = np.ones(N)
    for m in ms:
        r = (j * (m % mod)) % mod
        score = np.minimum(score, np.sin(TWO_PI * r / mod) ** 2)
    best = score.max()
    if best <= 0:
        raise QCSError("infeasible grid")
    # ties to the smaller denominator, then the smaller j
    cands = [int(x) for x in j[score >= best * (1 - 1e-15)]]
    bs = [Fraction(c, 1) / (2 * a * mod) for c in cands]
    return min(bs, key=lambda f: (f.denominator, f))


def lower_bound_Eu(a, b, u, m_max) -> float:
    """(1/2) sum over m in Q_u, |m| <= m_max, of (sin(4 pi a b m) / (pi m))^2."""
    a, b = to_fraction(a), to_fraction(b)
    total = 0.0
    for m in q_u_set(a, u, m_max):
        sv = _sin_2pi(2 * a * b * m)
        total += (sv / (math.pi * m)) ** 2
    return 0.5 * total


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class CertificateRow:
    k: int
    u_k: Fraction
    mass: float
    mass_lower_bound: float
    ratio: float
    lower_bound: float
    tail: float
    m_max: int


@dataclass(frozen=True)
class NonHyperCertificate:
    gamma: float
    delta: float
    a: LiouvilleParam
    b: Fraction
    rows: tuple
    slack_C: float
    passed: bool
    growth_slope: float
    growth_ok: bool


def u_level(m, gamma) -> Fraction:
    """2 m^(-gamma): exact for rational gamma with integer m^gamma, else 60 significant digits."""
    g = Fraction(gamma) if not isinstance(gamma, float) else Fraction(repr(gamma))
    if g.denominator == 1:
        return Fraction(2, int(m) ** int(g))
    with localcontext() as ctx:
        ctx.prec = 60
        val = Decimal(2) / (Decimal(int(m)) ** (Decimal(g.numerator) / Decimal(g.denominator)))
    return Fraction(val)


def _row_m_max(u, target_points=5_000):
    # keeps the generic resonant count near target while the tail 16/(pi^2 M) stays tiny
    return max(1, int(Fraction(target_points) / u))


def calibrate_slack(a, b, u_grid, m_max_of=_row_m_max):
    """Smallest C with lower_bound <= mass + C u on the calibration grid."""
    C = 0.0
    for u in u_grid:
        M = m_max_of(u)
        lb = lower_bound_Eu(a, b, u, M)
        mass, _ = diffraction_mass_gamma_ab(a, b, u, M)
        C = max(C, (lb - mass) / float(u))
    return C


def nonhyper_certificate(gamma, K=3, delta=0.6, grid_n=10_000) -> NonHyperCertificate:
    if delta <= 2.0 / float(gamma):
        raise QCSError("outside theorem regime")
    lp = liouville_param(gamma, K)
    a = lp.a_truncated
    ms = lp.m_list[: K - 1]
    b = resonant_b_search(a, ms, grid_n)
    us = [u_level(m, gamma) for m in ms]
    cal = [u * f for u in us for f in (Fraction(1, 4), Fraction(1, 2), Fraction(2), Fraction(4)) if u * f < 1]
    C = calibrate_slack(a, b, cal)
    rows = []
    for k, (m, u) in enumerate(zip(ms, us), start=1):
        M = max(_row_m_max(u), m)
        mass, tail = diffraction_mass_gamma_ab(a, b, u, M)
        lb = lower_bound_Eu(a, b, u, M)
        ratio = mass / float(u) ** delta
        rows.append(CertificateRow(k, u, mass, max(0.0, lb - C * float(u)), ratio, lb, tail, M))
    ratios = [r.ratio for r in rows]
    increasing = all(y > x for x, y in zip(ratios, ratios[1:]))
    passed = increasing and len(ratios) >= 2 and ratios[-1] >= 10 * ratios[0]
    logm = np.log([float(m) for m in ms])
    logr = np.log(ratios)
    slope = float(np.polyfit(logm, logr, 1)[0]) if len(ms) >= 2 else float("nan")
    expected = float(delta) * float(gamma) - 2.0
    growth_ok = bool(abs(slope - expected) <= 0.25 * abs(expected))
    return NonHyperCertificate(float(gamma), float(delta), lp, b, tuple(rows), C, bool(passed), slope, growth_ok)


def _rat(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def certificate_to_dict(cert: NonHyperCertificate) -> dict:
    return {
        "gamma": cert.gamma,
        "delta": cert.delta,
        "levels": list(cert.a.levels),
        "a": _rat(cert.a.a_truncated),
        "m_list": [str(m) for m in cert.a.m_list],
        "b": _rat(cert.b),
        "slack_C": cert.slack_C,
        "passed": cert.passed,
        "growth_slope": cert.growth_slope,
        "growth_ok": cert.growth_ok,
        "rows": [
            {
                "k": r.k,
                "u_k": _rat(r.u_k),
                "mass": r.mass,
                "mass_lower_bound": r.mass_lower_bound,
                "ratio": r.ratio,
                "lower_bound": r.lower_bound,
                "tail": r.tail,
                "m_max": str(r.m_max),
            }
            for r in cert.rows
        ],
    }
