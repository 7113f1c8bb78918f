import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcs.errors import BudgetError
from qcs.padic import (
    atom_weight,
    atoms_from_csv,
    atoms_to_csv,
    ball_mass_limit,
    ball_mass_tail,
    is_prime,
    padic_ball_mass,
    padic_diffraction_atoms,
    shell_mass,
    stealth_check,
    valuation,
)


def test_weight_examples():
    assert atom_weight(Fraction(1, 2)) == pytest.approx(4 / math.pi**2, rel=1e-15)
    assert atom_weight(Fraction(1, 3)) == pytest.approx(27 / (4 * math.pi**2), rel=1e-15)
    for n in (1, -1, 2, 7, -100, 10**9):
        assert atom_weight(n) == 0.0


@given(st.fractions(Fraction(-50), Fraction(50), max_denominator=10**4))
def test_weight_symmetry(g):
    assert atom_weight(g) == atom_weight(-g)


def test_atoms_structure():
    atoms = padic_diffraction_atoms(3, 20, 2)
    for a in atoms:
        assert a.gamma.denominator == 3 ** max(0, -a.valuation)
        assert a.gamma != 0
    assert len({a.gamma for a in atoms}) == len(atoms)
    with pytest.raises(ValueError):
        padic_diffraction_atoms(4, 10, 1)
    with pytest.raises(BudgetError):
        padic_diffraction_atoms(2, 10**6, 10, budget=1000)


def test_valuation():
    assert valuation(Fraction(12), 2) == 2
    assert valuation(Fraction(5, 8), 2) == -3
    assert valuation(Fraction(7, 3), 2) == 0
    with pytest.raises(ValueError):
        valuation(0, 2)
    assert [p for p in range(20) if is_prime(p)] == [2, 3, 5, 7, 11, 13, 17, 19]


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_stealth_bit_zero(p):
    mass, ok = stealth_check(p)
    assert mass == 0.0 and ok
    assert padic_ball_mass(p, 0, 300, 3) == 0.0
    # control: the valuation -1 shell carries positive mass
    assert shell_mass(p, -1, 300, 3) > 0.0


def test_p2_shell_against_partial_sum():
    H = 999
    direct = 2 * sum(4 / (math.pi * k) ** 2 for k in range(1, H + 1, 2))
    assert padic_ball_mass(2, -1, H, 1) == pytest.approx(direct, rel=1e-13)


@pytest.mark.parametrize("p,j", [(2, 1), (2, 3), (3, 1), (3, 2), (5, 1), (7, 1)])
def test_ball_mass_poisson_oracle(p, j):
    H = 4000
    m = padic_ball_mass(p, -j, H, j)
    lim = ball_mass_limit(p, j)
    assert m <= lim
    assert lim - m <= ball_mass_tail(p, j, H)


def test_ball_mass_monotone():
    ms = [padic_ball_mass(3, -j, 200, 4) for j in range(0, 5)]
    assert all(b >= a for a, b in zip(ms, ms[1:]))
    assert ms[-1] == pytest.approx(math.fsum(a.weight for a in padic_diffraction_atoms(3, 200, 4)))


@given(st.sampled_from([2, 3, 5]), st.integers(1, 60), st.integers(0, 3))
@settings(max_examples=30)
def test_total_mass_monotone_in_bounds(p, H, J):
    m = padic_ball_mass(p, -J, H, J)
    assert padic_ball_mass(p, -J, H + 5, J) >= m
    assert padic_ball_mass(p, -J - 1, H, J + 1) >= m
    assert math.isfinite(m)


def test_csv_roundtrip():
    atoms = padic_diffraction_atoms(5, 30, 2)
    back = atoms_from_csv(atoms_to_csv(atoms), 5)
    assert back == atoms
