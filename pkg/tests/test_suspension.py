import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from qcs.errors import PrecisionError
from qcs.pointset import PointSample, meyer_checks
from qcs.suspension import (
    DECAY_C,
    cf_constant,
    clb_bound_check,
    coboundary_obstruction,
    correlation,
    correlation_exact,
    correlation_geometric,
    correlation_series,
    fourier_coeff_psi,
    mass_B,
    mc_suspension_variance,
    membership,
    obstruction_tail,
    sigma2,
    simulate_orbit,
    suspension_variance_exact,
    theta_function,
)

Q34 = Fraction(3, 4)
qs = st.fractions(Fraction(1, 2), Fraction(3, 4), max_denominator=1000).filter(lambda q: q > Fraction(1, 2))


def _coeff_quad(q, k):
    q = float(q)
    re = quad(lambda t: 1.0, 0, 0.5, weight="cos", wvar=2 * math.pi * k)[0] + quad(lambda t: 1.0, q, 1, weight="cos", wvar=2 * math.pi * k)[0]
    im = quad(lambda t: 1.0, 0, 0.5, weight="sin", wvar=2 * math.pi * k)[0] + quad(lambda t: 1.0, q, 1, weight="sin", wvar=2 * math.pi * k)[0]
    return complex(re, -im)


@pytest.mark.parametrize("k", [1, 2, 3, 4, -5, 17, 100])
def test_fourier_coeff_against_quadrature(k):
    for q in (Q34, Fraction(5, 8), Fraction(2, 3)):
        assert abs(fourier_coeff_psi(q, k) - _coeff_quad(q, k)) < 1e-12


def test_fourier_coeff_k2():
    # the [0, 1/2] part vanishes at even k and exp(-3 pi i) = -1 leaves i / (2 pi)
    assert fourier_coeff_psi(Q34, 2) == pytest.approx(1j / (2 * math.pi), abs=1e-15)
    assert abs(_coeff_quad(Q34, 2) - 1j / (2 * math.pi)) < 1e-12
    with pytest.raises(ValueError):
        fourier_coeff_psi(Q34, 0)


def test_parseval():
    k = np.arange(1, 100_001)
    s = 2 * sum(abs(fourier_coeff_psi(Q34, int(j))) ** 2 for j in k[:2000])
    # the rest in bulk: |psi_hat(k)|^2 for k > 2000 through the Fourier route's vector form
    from qcs.suspension import _psi_hat_vec
    rest = _psi_hat_vec(0.75, k[2000:], True)
    s += 2 * float(np.sum(np.abs(rest) ** 2))
    assert abs(s - 3 / 16) < 1e-4


@pytest.mark.parametrize("i", range(20))
def test_c0_identity(i):
    q = Fraction(1, 2) + Fraction(i + 1, 80)
    assert correlation_exact(q, 0) == (Fraction(3, 2) - q) * (q - Fraction(1, 2))
    assert abs(correlation(q, 0)[0] - float((Fraction(3, 2) - q) * (q - Fraction(1, 2)))) <= correlation(q, 0)[1] + 1e-12


def test_c0_three_sixteenths():
    assert correlation_exact(Q34, 0) == Fraction(3, 16)


@given(qs, st.integers(0, 12))
@settings(max_examples=60)
def test_exact_equals_geometric(q, n):
    assert correlation_exact(q, n) == correlation_geometric(q, n)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 7, 12])
def test_fourier_route_within_tail(n):
    for q in (Q34, Fraction(5, 8), Fraction(7, 10)):
        c, tail = correlation(q, n, 100_000)
        assert abs(c - float(correlation_exact(q, n))) <= tail + 1e-12


@given(qs)
@settings(max_examples=30)
def test_decay(q):
    for n in range(26):
        c = correlation_exact(q, n)
        assert abs(c) * 2**n <= DECAY_C
        assert abs(c) <= correlation_exact(q, 0)


def test_decay_q34_by_20():
    assert abs(float(correlation_exact(Q34, 20))) < 1e-5


def test_sigma2():
    val, tail = sigma2(Q34, N=40)
    assert tail < 1e-8
    assert val == pytest.approx(0.0625, abs=1e-10)
    for q in np.linspace(0.51, 0.75, 13):
        assert sigma2(Fraction(q).limit_denominator(10**6))[0] >= 0.0
    fv, ftail = sigma2(Q34, N=20, k_cutoff=20_000)
    assert abs(fv - val) <= ftail + 2 * float(DECAY_C) / 2**20


def test_cf_constant():
    a30, a60 = cf_constant(Q34, N=30), cf_constant(Q34, N=60)
    assert abs(a30 - a60) < 1e-8
    assert a60 >= abs(float(correlation_exact(Q34, 1)))
    val, tail = cf_constant(Q34, with_tail=True)
    assert math.isfinite(val) and tail < 1e-15


def test_clb_q34():
    ok, rows = clb_bound_check(Q34, [5, 10, 20, 50])
    assert ok
    for R, dev, bound, margin in rows:
        assert dev <= 12 * cf_constant(Q34) + 3 / 16 + 1e-12


def test_clb_synthetic_white():
    ok, rows = clb_bound_check(None, [5, 10, 20], correlations=[0.3])
    assert ok and all(r[1] == 0.0 for r in rows)


def test_clb_no_drift():
    ok, rows = clb_bound_check(Fraction(5, 8), np.linspace(5, 200, 40))
    assert ok
    devs = [r[1] for r in rows]
    assert max(devs) <= rows[0][2]
    # the deviation saturates instead of growing with R
    assert max(devs[20:]) <= 1.01 * max(devs[:20]) + 1e-12


def test_theta_examples():
    assert theta_function(Fraction(0), N=60) == pytest.approx(2.0, abs=2**-59)
    assert abs(theta_function(Fraction(1, 2), N=60)) <= 2**-59
    assert theta_function(Q34) == pytest.approx(1j, abs=1e-15)


def test_theta_not_constant():
    rng = np.random.default_rng(0)
    for lo, hi in ((0.51, 0.52), (0.6, 0.62), (0.7, 0.75)):
        vals = [theta_function(Fraction(float(x))) for x in rng.uniform(lo, hi, 100)]
        assert np.var(vals) > 0


def test_obstruction():
    ob = coboundary_obstruction(Q34, N=40)
    assert abs(ob) > 1e-3
    assert abs(ob) == pytest.approx(1 / (2 * math.pi), abs=obstruction_tail(40))
    assert obstruction_tail(40) < 2.0**-40
    # n = 0 term
    n0 = 1 / (math.pi * 1j) + (cmath.exp(-2j * math.pi * 0.75) - 1) / (2j * math.pi)
    first = (1 - (-1)) / (2j * math.pi) + (cmath.exp(-2j * math.pi * 0.75) - 1) / (2j * math.pi)
    assert first == pytest.approx(n0)


@given(qs)
@settings(max_examples=30)
def test_obstruction_matches_theta(q):
    # sum over n of the two coefficient terms telescopes to (theta(q) - 2)/(2 pi i) plus the 1/2 terms
    ob = coboundary_obstruction(q, N=60)
    th = theta_function(q, N=60)
    expected = 1 / (1j * math.pi) + (th - 2) / (2j * math.pi)
    assert abs(ob - expected) < 1e-12


# --- orbits -------------------------------------------------------------------

def test_all_zero_bits_orbit():
    o = simulate_orbit(Q34, 0, (-50, 50), bits=np.zeros(2000, dtype=np.uint8))
    assert np.array_equal(o.hits, np.arange(-50, 51))
    assert o.two_syndetic


def test_membership_boundaries():
    # x = 0.11 then a 1 far out: just above 3/4
    b = np.zeros(700, dtype=np.uint8); b[1] = b[2] = 1; b[120] = 1
    assert membership(b, Q34, 0, 1)[0]
    # x = 0.1011 = 11/16 lies in (1/2, 3/4), outside B
    b = np.zeros(700, dtype=np.uint8); b[1] = 1; b[3] = b[4] = 1
    assert not membership(b, Q34, 0, 1)[0]
    # exactly 3/4 or exactly 1/2 within the available bits cannot be decided
    b = np.zeros(700, dtype=np.uint8); b[1] = b[2] = 1
    with pytest.raises(PrecisionError):
        membership(b, Q34, 0, 1)
    b = np.zeros(700, dtype=np.uint8); b[1] = 1
    with pytest.raises(PrecisionError):
        membership(b, Q34, 0, 1)


def test_membership_matches_exact_rationals():
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, 3000, dtype=np.uint8)
    q = Fraction(5, 8)
    got = membership(bits, q, 0, 1000)
    for n in range(0, 1000, 7):
        # 600 bits pin x_n down far beyond any boundary distance this seed produces
        x = Fraction(int("".join(map(str, bits[n + 1:n + 601])), 2), 2**600)
        assert got[n] == (x <= Fraction(1, 2) or x > q)


def test_orbit_density_and_syndetic():
    for q in (Q34, Fraction(5, 8)):
        o = simulate_orbit(q, 1, (0, 100_000))
        p = float(mass_B(q))
        dens = len(o.hits) / 100_001
        # correlated samples: the variance of the hit count is about N sigma^2
        sd = math.sqrt(sigma2(q)[0] / 100_001)
        assert abs(dens - p) <= 3 * sd
        assert o.two_syndetic


@given(st.integers(0, 10**6), qs)
@settings(max_examples=20)
def test_every_orbit_two_syndetic(seed, q):
    o = simulate_orbit(q, seed, (-500, 500))
    assert o.two_syndetic
    pts = o.points
    m = meyer_checks(PointSample(pts.reshape(-1, 1), ((-500.0, 500.0),)))
    assert m["two_syndetic_in_Z"] is True
    assert m["min_gap"] == 1.0


def test_orbit_errors():
    with pytest.raises(ValueError):
        simulate_orbit(Fraction(4, 5), 0)
    with pytest.raises(ValueError):
        simulate_orbit(Q34, 0, (5, 1))


# --- Monte Carlo ----------------------------------------------------------------

def test_full_window_variance_zero():
    est = mc_suspension_variance(Fraction(1, 2), 10, 5000, 1)
    assert est.variance == 0.0
    assert est.mean_count == 20.0


def test_mc_variance_matches_exact():
    est = mc_suspension_variance(Q34, 10.3, 40_000, 2)
    assert abs(est.variance - suspension_variance_exact(Q34, 10.3)) <= 3 * est.stderr_variance


@pytest.mark.parametrize("q", [Fraction(k, 64) for k in range(33, 49, 2)])
def test_mc_variance_positive(q):
    est = mc_suspension_variance(q, 6, 10_000, 4)
    assert est.variance > 5 * est.stderr_variance


def test_mc_deterministic():
    assert mc_suspension_variance(Q34, 5, 5000, 9) == mc_suspension_variance(Q34, 5, 5000, 9)
