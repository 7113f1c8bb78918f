import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from qcs.errors import BudgetError
from qcs.lattice import (
    LatticeBasis,
    alpha_repellence_scan,
    arithmetic_quadratic_lattice,
    beta_repellence_scan,
    count_in_box,
    dual_basis,
    enumerate_arrays,
    enumerate_in_box,
    frac_dist,
    gamma_a_lattice,
    lattice_from_dict,
    lattice_to_dict,
    liouville_param,
    norm_form_violations,
    power_bound_holds,
)

Z2 = LatticeBasis.from_matrix([[1, 0], [0, 1]], 1, 1)


def brute_force(L, box1, box2, cmax):
    lo = np.array([b[0] for b in box1 + box2])
    hi = np.array([b[1] for b in box1 + box2])
    C = np.array(list(itertools.product(range(-cmax, cmax + 1), repeat=L.dim)))
    X = C @ L.basis.T
    keep = np.all((X >= lo) & (X <= hi), axis=1)
    return sorted(tuple(int(v) for v in c) for c in C[keep])


def test_dual_examples():
    assert np.array_equal(dual_basis(Z2).basis, np.eye(2))
    D = dual_basis(gamma_a_lattice(1))
    assert np.allclose(D.basis, [[1, -1], [1, 1]], atol=1e-15)
    assert D.exact == ((1, -1), (1, 1))


def test_degenerate():
    with pytest.raises(ValueError, match="degenerate lattice"):
        LatticeBasis.from_matrix([[1, 2], [2, 4]], 1, 1)


@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=9, max_size=9))
def test_dual_covolume_and_involution(entries):
    M = np.array(entries).reshape(3, 3) + 4 * np.eye(3)
    L = LatticeBasis.from_matrix(M, 1, 2)
    D = dual_basis(L)
    assert L.det_abs * D.det_abs == pytest.approx(1.0, rel=1e-10)
    # the double dual spans the same lattice: the change of basis is unimodular
    U = np.linalg.solve(L.basis, dual_basis(D).basis)
    assert np.allclose(U, np.round(U), atol=1e-8)
    assert abs(abs(np.linalg.det(np.round(U))) - 1) < 1e-9


def test_gamma_a_examples():
    L = gamma_a_lattice(1)
    assert np.allclose(L.basis, 0.5 * np.array([[1, -1], [1, 1]]))
    assert L.det_abs == 0.5
    assert gamma_a_lattice(Fraction(1, 2)).det_abs == 1.0
    a = math.sqrt(3)
    D = dual_basis(gamma_a_lattice(a))
    assert np.allclose(D.basis @ [1, 0], [a, a])
    with pytest.raises(ValueError):
        gamma_a_lattice(0)


@given(st.floats(0.1, 5), st.integers(-20, 20), st.integers(-20, 20))
def test_gamma_a_dual_points(a, m, n):
    D = dual_basis(gamma_a_lattice(a))
    x = D.basis @ [m, n]
    assert np.allclose(x, [a * m - n, a * m + n], atol=1e-10 * (1 + abs(a * m) + abs(n)))


def test_quadratic_examples():
    L = arithmetic_quadratic_lattice(2)
    assert np.allclose(L.basis @ [1, 1], [1 + math.sqrt(2), 1 - math.sqrt(2)])
    phi = (1 + math.sqrt(5)) / 2
    L5 = arithmetic_quadratic_lattice(5, ring="maximal")
    assert np.allclose(L5.basis @ [0, 1], [phi, 1 - phi])
    # norm of x + y phi is x^2 + xy - y^2, an integer
    for x, y in [(1, 1), (2, -3), (0, 1)]:
        p = L5.basis @ [x, y]
        assert p[0] * p[1] == pytest.approx(x * x + x * y - y * y, abs=1e-12)
    with pytest.raises(ValueError):
        arithmetic_quadratic_lattice(8)


def test_norm_form_exact_repellence():
    assert norm_form_violations(2, 200) == []
    assert norm_form_violations(3, 60) == []
    # a square is not repellent: (2, 1) has 4 - 4*1 = 0
    assert (2, 1) in norm_form_violations(4, 3)


def test_enumerate_examples():
    assert len(enumerate_in_box(Z2, [(-1.5, 1.5)], [(-1.5, 1.5)])) == 9
    L = gamma_a_lattice(1)
    pts = enumerate_in_box(L, [(-0.6, 0.6)], [(-0.6, 0.6)])
    xs = {(round(float(p.x1[0]), 12), round(float(p.x2[0]), 12)) for p in pts}
    assert {(0.0, 0.0), (0.5, 0.5), (-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5)} == xs
    assert sorted(p.coeffs for p in pts) == brute_force(L, [(-0.6, 0.6)], [(-0.6, 0.6)], 3)
    assert enumerate_in_box(Z2, [(0.2, 0.8)], [(-5, 5)]) == []
    assert enumerate_in_box(Z2, [(1, -1)], [(-5, 5)]) == []


def test_lattice_point_consistency():
    L = gamma_a_lattice(math.sqrt(2))
    for p in enumerate_in_box(L, [(-3, 3)], [(-2, 2)]):
        x = L.basis @ np.array(p.coeffs)
        assert np.allclose(np.concatenate([p.x1, p.x2]), x, rtol=1e-10, atol=1e-12)


@given(
    st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4),
    st.floats(-3, 3),
    st.floats(0.1, 3),
    st.floats(-3, 3),
    st.floats(0.1, 3),
)
def test_enumerate_matches_brute_force(entries, c1, w1, c2, w2):
    M = np.array(entries).reshape(2, 2) + 2.5 * np.eye(2)
    L = LatticeBasis.from_matrix(M, 1, 1)
    box1, box2 = [(c1 - w1, c1 + w1)], [(c2 - w2, c2 + w2)]
    # coefficient range large enough to contain every candidate
    cmax = int(np.ceil(np.abs(np.linalg.inv(M)).sum(axis=1).max() * (3 + 3))) + 1
    assume((2 * cmax + 1) ** 2 <= 10**5)
    coeffs, _ = enumerate_arrays(L, box1, box2)
    assert [tuple(c) for c in coeffs.tolist()] == brute_force(L, box1, box2, cmax)
    assert count_in_box(L, box1, box2) == len(coeffs)


def test_enumerate_3d_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(5):
        M = rng.uniform(-1, 1, (3, 3)) + 2 * np.eye(3)
        L = LatticeBasis.from_matrix(M, 2, 1)
        box1, box2 = [(-2.0, 1.5), (-1.0, 2.0)], [(-1.2, 0.7)]
        coeffs, _ = enumerate_arrays(L, box1, box2)
        assert [tuple(c) for c in coeffs.tolist()] == brute_force(L, box1, box2, 12)


def test_budget():
    with pytest.raises(BudgetError):
        enumerate_arrays(Z2, [(-1e4, 1e4)], [(-1e4, 1e4)], budget=100)


def test_beta_scan_examples():
    Q = arithmetic_quadratic_lattice(2)
    scan = beta_repellence_scan(Q, [0.1], 1e3)
    assert scan.rows[0][1] >= 10
    # points with |x1| < 1/2 are (0, n), so the minimum is 1 at every eps: no growth, not repellent
    assert [m for _, m in beta_repellence_scan(Z2, [0.5, 0.1, 0.01], 10).rows] == [1.0, 1.0, 1.0]
    scan = beta_repellence_scan(Q, [1e-1, 1e-2, 1e-3, 1e-4], 1e6)
    assert scan.beta_hat >= 0.95
    # every minimum respects |x1 x2| >= 1
    for eps, m in scan.rows:
        assert m >= 1 / eps


def test_beta_scan_empty_rows_are_inf():
    scan = beta_repellence_scan(arithmetic_quadratic_lattice(2), [1e-3], 10)
    assert math.isinf(scan.rows[0][1])


def test_alpha_rational_is_infinite():
    assert alpha_repellence_scan(0, 10)[0] == math.inf
    assert alpha_repellence_scan(Fraction(2, 7), 10)[0] == math.inf


def test_alpha_sqrt2():
    # over 2 <= q <= 50 the worst q is the convergent denominator 2: m(2) = 3 - 2 sqrt 2
    alpha, (p, q) = alpha_repellence_scan(math.sqrt(2), 50)
    assert q == (2,) and p == (-3,)
    assert alpha == pytest.approx(-math.log(3 - 2 * math.sqrt(2)) / math.log(2), rel=1e-12)
    # the badly approximable exponent 1 only shows once q passes the early convergents
    assert alpha_repellence_scan(math.sqrt(2), 50, q_min=30)[0] <= 1.3


def test_alpha_2d_matrix_path():
    E = np.array([[math.sqrt(2), math.sqrt(3)]])
    alpha, (p, q) = alpha_repellence_scan(E, 6)
    qn = max(abs(v) for v in q)
    m = abs(p[0] + E[0] @ np.array(q))
    assert alpha == pytest.approx(-math.log(m) / math.log(qn), rel=1e-12)


def test_alpha_liouville():
    lp = liouville_param(4, 2)
    # q = m_1 = 10 already gives {10 a} = 10^-5, so the exponent is at least 5 > gamma - 0.5
    assert alpha_repellence_scan(lp.a_truncated, 10)[0] >= 4 - 0.5


def test_liouville_params():
    lp = liouville_param(3, 3)
    # strict recurrence: ceil(4 n) would give {10 a} = 10^-3 + 10^-15 > 10^-3
    assert lp.levels == (1, 5, 21)
    assert lp.m_list == (10, 10**5, 10**21)
    assert frac_dist(10 * lp.a_truncated) == Fraction(1, 10**4) + Fraction(1, 10**20)
    assert frac_dist(10 * lp.a_truncated) <= Fraction(1, 1000)
    assert liouville_param(8, 2).levels == (1, 10)
    with pytest.raises(ValueError):
        liouville_param(2, 3)
    with pytest.raises(ValueError, match="largest feasible K"):
        liouville_param(9, 8, digit_cap=10**4)


@given(st.integers(1, 6), st.integers(0, 100), st.integers(2, 4))
def test_liouville_invariants(den, t, K):
    # rational gamma in (2, 9] with a small denominator keeps the exact powers cheap
    g = Fraction(2 * den + 1 + t * (7 * den - 1) // 100, den)
    lp = liouville_param(g, K)
    for a, b in zip(lp.levels, lp.levels[1:]):
        assert b >= math.ceil((g + 1) * a)
    for k in range(K):
        m = lp.m_list[k]
        assert power_bound_holds(frac_dist(m * lp.a_truncated), m, g)


def test_frac_dist():
    assert frac_dist(Fraction(3, 4)) == Fraction(1, 4)
    assert frac_dist(7) == 0
    a = Fraction(1, 10) + Fraction(1, 10**4)
    assert frac_dist(10 * a) == Fraction(1, 10**3)


@given(st.fractions())
def test_frac_dist_range(x):
    d = frac_dist(x)
    assert 0 <= d <= Fraction(1, 2)
    assert (x - d).denominator == 1 or (x + d).denominator == 1


def test_json_roundtrip():
    for L in (gamma_a_lattice(Fraction(1, 3)), arithmetic_quadratic_lattice(2)):
        L2 = lattice_from_dict(lattice_to_dict(L))
        assert np.array_equal(L2.basis, L.basis) and L2.exact == L.exact
    assert lattice_to_dict(gamma_a_lattice(Fraction(1, 3)))["exact"][0] == ["3/2", "-1/2"]
