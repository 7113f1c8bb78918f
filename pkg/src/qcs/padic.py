"""Diffraction of the p-adic cut-and-project process built from Z[1/p] sitting diagonally in
R x Q_p, with window [-1/2, 1/2] in R.

Atoms sit at gamma = k / p^j and carry |chi_hat_W(gamma)|^2 = (sin(pi gamma) / (pi gamma))^2.
Everything is a rational, so no p-adic arithmetic is needed beyond valuations.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetError, resolve_budget
from .window import sin_pi


@dataclass(frozen=True)
class PAdicAtom:
    gamma: Fraction
    valuation: int
    weight: float

    @property
    def k(self):
        return self.gamma.numerator

    @property
    def j(self):
        return max(0, -self.valuation)


def is_prime(p) -> bool:
    p = int(p)
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


def _check(p, max_height, max_denom_exp):
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if int(max_height) < 1 or int(max_denom_exp) < 0:
        raise ValueError("bounds must be positive")


def valuation(x, p) -> int:
    """v_p of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("v_p(0) is infinite")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def atom_weight(gamma) -> float:
    """(sin(pi gamma) / (pi gamma))^2; exactly 0.0 at nonzero integers, 1 at 0."""
    g = Fraction(gamma)
    if g == 0:
        return 1.0
    s = sin_pi(g)
    if s == 0.0:
        return 0.0
    return (s / (math.pi * float(g))) ** 2


def padic_diffraction_atoms(p, max_height, max_denom_exp, budget=None) -> list:
    """Atoms k / p^j with 0 < |k| <= max_height, 0 <= j <= max_denom_exp, p not dividing k when j > 0.

    Covolume of the diagonal embedding is 1, so no normalisation enters the weights.
    """
    _check(p, max_height, max_denom_exp)
    p, H, J = int(p), int(max_height), int(max_denom_exp)
    if 2 * H * (J + 1) > resolve_budget(budget):
        raise BudgetError("budget: too many p-adic atoms")
    out = []
    for j in range(J + 1):
        den = p**j
        for k in range(-H, H + 1):
            if k == 0 or (j > 0 and k % p == 0):
                continue
            g = Fraction(k, den)
            out.append(PAdicAtom(g, valuation(g, p), atom_weight(g)))
    return out


def padic_ball_mass(p, valuation_floor, max_height, max_denom_exp, budget=None) -> float:
    """Diffraction mass of the ball {v_p(gamma) >= valuation_floor} within the bounds."""
    atoms = padic_diffraction_atoms(p, max_height, max_denom_exp, budget)
    # summing in a fixed order keeps the value independent of how atoms were generated
    ws = sorted(a.weight for a in atoms if a.valuation >= valuation_floor)
    return math.fsum(ws)


def shell_mass(p, v, max_height, max_denom_exp, budget=None) -> float:
    atoms = padic_diffraction_atoms(p, max_height, max_denom_exp, budget)
    return math.fsum(sorted(a.weight for a in atoms if a.valuation == v))


def ball_mass_limit(p, j) -> int:
    """Untruncated mass of {v_p >= -j}: the sinc^2 sum over p^-j Z is p^j, less the atom at 0."""
    return int(p) ** int(j) - 1


def ball_mass_tail(p, j, max_height) -> float:
    """Bound on what |k| > max_height leaves out of {v_p >= -j}: 2 p^(2j) / (pi^2 H)."""
    return 2.0 * float(p) ** (2 * j) / (math.pi**2 * max_height)


def stealth_check(p, max_height=1000, max_denom_exp=4, budget=None):
    """(mass on Z_p, passed) where passed means the mass is exactly zero."""
    m = padic_ball_mass(p, 0, max_height, max_denom_exp, budget)
    return m, m == 0.0


def atoms_to_csv(atoms) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "j", "valuation", "weight"])
    for a in atoms:
        w.writerow([a.k, a.j, a.valuation, repr(a.weight)])
    return buf.getvalue()


def atoms_from_csv(text, p) -> list:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        g = Fraction(int(r["k"]), int(p) ** int(r["j"]))
        out.append(PAdicAtom(g, int(r["valuation"]), float(r["weight"])))
    return out
