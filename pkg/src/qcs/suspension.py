"""The doubling-map suspension process with return set B = [0, 1/2] U (q, 1) on the circle.

Correlations c_n = <psi o T^n, psi> of the centred indicator psi = 1_B - m(B) are
available three ways: the truncated Fourier sum, an exact Bernoulli-polynomial closed
form, and a direct measure computation of B and T^{-n} B.  Orbits live on the two-sided
binary shift; x_n = 0.b_{n+1} b_{n+2} ...
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import PrecisionError, QCSError
from .lattice import to_fraction
from .pointset import BLOCK, VarianceEstimate, variance_estimate

EXTRA_BITS = 512


def _check_q(q, allow_half=False):
    qf = to_fraction(q)
    lo_ok = qf >= Fraction(1, 2) if allow_half else qf > Fraction(1, 2)
    if not (lo_ok and qf <= Fraction(3, 4)):
        raise ValueError("q must lie in (1/2, 3/4]")
    return qf


def mass_B(q) -> Fraction:
    return Fraction(3, 2) - to_fraction(q)


def _frac(x: Fraction) -> Fraction:
    return x - math.floor(x)


def _cis_neg(theta: Fraction) -> complex:
    """exp(-2 pi i theta), exact at multiples of 1/4."""
    r = _frac(theta)
    exact = {Fraction(0): 1 + 0j, Fraction(1, 4): -1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): 1j}
    if r in exact:
        return exact[r]
    return cmath.exp(-2j * math.pi * float(r))


# ---------------------------------------------------------------------------
# Fourier route


def fourier_coeff_psi(q, k) -> complex:
    """int over B of exp(-2 pi i k t) dt for k != 0 (the mean only affects k = 0)."""
    k = int(k)
    if k == 0:
        raise ValueError("k = 0: the centred coefficient vanishes by definition")
    qf = to_fraction(q)
    first = (1 - _cis_neg(Fraction(k, 2))) / (2j * math.pi * k)
    second = (_cis_neg(k * qf) - 1) / (2j * math.pi * k)
    return first + second


def _psi_hat_vec(qfrac_mult: float, k, half_phase, M=1):
    """Vectorised coefficient at frequencies M k, given frac(M q) and whether M is odd."""
    kf = k.astype(float)
    phase_q = np.fmod(qfrac_mult * kf, 1.0)
    e_q = np.exp(-2j * np.pi * phase_q)
    e_half = np.where((k % 2 == 1) & half_phase, -1.0, 1.0)
    return (e_q - e_half) / (2j * np.pi * kf * M)


def correlation(q, n, k_cutoff=100_000):
    """(c_n by the Fourier sum over 0 < |k| <= k_cutoff, bound on the omitted terms).

    c_{-n} = c_n since psi is real and T preserves Lebesgue measure.
    """
    n = abs(int(n))
    qf = to_fraction(q)
    K = int(k_cutoff)
    k = np.arange(1, K + 1, dtype=np.int64)
    a = _psi_hat_vec(float(_frac(qf)), k, True)
    b = _psi_hat_vec(float(_frac(2**n * qf)), k, n == 0, float(2**n))
    # k and -k are conjugate pairs, so the sum is twice the real part
    c = 2.0 * float(np.real(np.sum(b * np.conj(a))))
    tail = 2.0 / (math.pi**2 * 2**n * K)
    return c, tail


# ---------------------------------------------------------------------------
# exact routes


def _b2(x: Fraction) -> Fraction:
    x = _frac(x)
    return x * x - x + Fraction(1, 6)


def correlation_exact(q, n) -> Fraction:
    """Closed form: c_n = 2^{-(n+1)} (B2{q - 2^n q} - B2{1/2 - 2^n q} - B2{q - 2^{n-1}} + B2{1/2 - 2^{n-1}}).

    Comes from sum_{k != 0} e^{2 pi i k theta}/k^2 = 2 pi^2 B2({theta}); exact for rational q.
    """
    n = abs(int(n))
    qf = to_fraction(q)
    p = Fraction(2**n)
    half_p = p / 2
    s = _b2(qf - p * qf) - _b2(Fraction(1, 2) - p * qf) - _b2(qf - half_p) + _b2(Fraction(1, 2) - half_p)
    return s / (2 * p)


def _measure_B_upto(y: Fraction, q: Fraction) -> Fraction:
    """Lebesgue measure of B intersected with [0, y], B extended 1-periodically."""
    fl = math.floor(y)
    s = y - fl
    return fl * mass_B(q) + min(s, Fraction(1, 2)) + max(Fraction(0), s - q)


def correlation_geometric(q, n) -> Fraction:
    """m(B and T^{-n} B) - m(B)^2 computed from interval measures."""
    qf = to_fraction(q)
    p = 2 ** abs(int(n))
    total = Fraction(0)
    for lo, hi in ((Fraction(0), Fraction(1, 2)), (qf, Fraction(1))):
        total += (_measure_B_upto(p * hi, qf) - _measure_B_upto(p * lo, qf)) / p
    return total - mass_B(qf) ** 2


DECAY_C = Fraction(1, 3)  # |c_n| <= 4 max|B2| / 2^{n+1} = 1 / (3 2^n)


@dataclass(frozen=True)
class CorrelationSeries:
    q: Fraction
    c: tuple
    k_cutoff: object
    tail_bound_per_n: tuple
    C: float


def correlation_series(q, N, k_cutoff=None) -> CorrelationSeries:
    """c_0..c_N; exact closed form when k_cutoff is None, else the truncated Fourier sum."""
    qf = _check_q(q)
    if k_cutoff is None:
        cs = tuple(float(correlation_exact(qf, n)) for n in range(N + 1))
        tails = (0.0,) * (N + 1)
    else:
        pairs = [correlation(qf, n, k_cutoff) for n in range(N + 1)]
        cs = tuple(p[0] for p in pairs)
        tails = tuple(p[1] for p in pairs)
    return CorrelationSeries(qf, cs, k_cutoff, tails, float(DECAY_C))


def sigma2(q, N=40, k_cutoff=None):
    """(c_0 + 2 sum_{n=1}^N c_n, bound on everything omitted)."""
    if N < 10:
        raise ValueError("N must be at least 10")
    s = correlation_series(q, N, k_cutoff)
    val = s.c[0] + 2.0 * sum(s.c[1:])
    tail = 2.0 * float(DECAY_C) / 2**N + s.tail_bound_per_n[0] + 2.0 * sum(s.tail_bound_per_n[1:])
    return val, tail


def cf_constant(q, N=60, k_cutoff=None, with_tail=False):
    """sum_{n=1}^N n |c_n|; the tail beyond N is at most (N+2) / (3 2^N)."""
    s = correlation_series(q, N, k_cutoff)
    val = sum(n * abs(c) for n, c in enumerate(s.c) if n >= 1)
    tail = float(DECAY_C) * (N + 2) / 2**N
    return (val, tail) if with_tail else val


def rho_sum(c, R):
    """sum_{|n| <= 2R} (2R - |n|) c_|n| for a correlation list c (missing n read as 0)."""
    L = 2.0 * R
    total = 0.0
    for n in range(-math.floor(L), math.floor(L) + 1):
        m = abs(n)
        if m < len(c):
            total += (L - m) * c[m]
    return total


def clb_bound_check(q, R_list, N=60, k_cutoff=None, correlations=None, slack=1e-9):
    """|sum rho_R(n) c_n - 2R sigma^2| <= 12 C_f + c_0 for every R.

    Returns (passed, rows) with rows (R, deviation, bound, margin).
    """
    if correlations is None:
        c = list(correlation_series(q, N, k_cutoff).c)
    else:
        c = [float(v) for v in correlations]
    sig = c[0] + 2.0 * sum(c[1:])
    cf = sum(n * abs(v) for n, v in enumerate(c) if n >= 1)
    bound = 12.0 * cf + c[0]
    rows = []
    for R in R_list:
        if R <= 0:
            raise ValueError("R must be positive")
        dev = abs(rho_sum(c, R) - 2.0 * R * sig)
        rows.append((float(R), dev, bound, bound + slack - dev))
    return all(r[3] >= 0 for r in rows), rows


def suspension_variance_exact(q, R, N=60) -> float:
    """Var #((Lambda_z - t) in [-R, R]) for t uniform and z Haar-random.

    sum_d (2R - |d|)_+ c_|d| plus m(B)^2 f(1-f) with f = frac(2R); the second term is the
    count fluctuation of the integer lattice itself.
    """
    c = list(correlation_series(q, N).c)
    L = 2.0 * R
    f = L - math.floor(L)
    m = float(mass_B(q))
    return rho_sum(c, R) + m * m * f * (1.0 - f)


# ---------------------------------------------------------------------------
# obstruction to being a coboundary


def theta_function(q, N=60) -> complex:
    """sum_{n=0}^N exp(-2 pi i 2^n q) / 2^n; omitted tail at most 2^{-N}."""
    qf = to_fraction(q)
    total = 0j
    for n in range(N + 1):
        total += _cis_neg(2**n * qf) / 2**n
    return total


def coboundary_obstruction(q, N=60) -> complex:
    """sum_{n=0}^N [chi_hat_{[0,1/2]}(2^n) + (e^{-2 pi i 2^n q} - 1) / (2 pi i 2^n)]."""
    if N < 10:
        raise ValueError("N must be at least 10")
    qf = to_fraction(q)
    total = 0j
    for n in range(N + 1):
        p = 2**n
        chi = (1 - _cis_neg(Fraction(p, 2))) / (2j * math.pi * p)
        total += chi + (_cis_neg(p * qf) - 1) / (2j * math.pi * p)
    return total


def obstruction_tail(N) -> float:
    return 2.0 ** (-N) / math.pi


# ---------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class OrbitSample:
    bits: np.ndarray
    bit_offset: int
    hits: np.ndarray
    q: Fraction
    n_range: tuple
    t_shift: float
    two_syndetic: bool

    @property
    def points(self):
        """The suspension point set Lambda_z - t on the certified range."""
        return self.hits.astype(float) - self.t_shift


def _windows(bits, start, count):
    """64-bit integers W_n = b_{n+1} ... b_{n+64} along the last axis, n = start .. start+count-1."""
    W = np.zeros(bits.shape[:-1] + (count,), dtype=np.uint64)
    for j in range(1, 65):
        W = (W << np.uint64(1)) | bits[..., start + j: start + j + count].astype(np.uint64)
    return W


def _q64(q: Fraction) -> int:
    return math.floor(q * 2**64)


def _resolve(bits_after, q: Fraction):
    """Exact comparison of x = 0.b1 b2 ... against the boundaries using the given bits."""
    L = len(bits_after)
    X = int("".join("1" if b else "0" for b in bits_after), 2) if L else 0
    if bits_after[0] == 0:
        return True
    Q = math.floor(q * 2**L)
    if X > Q:
        return True
    # X < Q: x <= (X+1)/2^L <= Q/2^L <= q, and x = 1/2 needs every later bit zero
    if X < Q and X != 2 ** (L - 1):
        return False
    return None


def membership(bits, q, start, count):
    """x_n in B for count consecutive n along the last axis of bits.

    64 bits settle almost every case; a window equal to the cut of q or to 1/2 is
    resolved with up to 512 further bits.
    """
    qf = to_fraction(q)
    first = bits[..., start + 1: start + 1 + count].astype(bool)
    W = _windows(bits, start, count)
    Q = np.uint64(_q64(qf))
    half = np.uint64(1 << 63)
    inB = (~first) | (W > Q)
    ambiguous = first & ((W == Q) | (W == half))
    for idx in zip(*np.nonzero(ambiguous)):
        row = bits[idx[:-1]] if bits.ndim > 1 else bits
        i = idx[-1]
        res = None
        for L in range(65, 65 + EXTRA_BITS):
            if start + i + L >= row.shape[-1]:
                break
            res = _resolve(row[start + i + 1: start + i + 1 + L], qf)
            if res is not None:
                break
        if res is None:
            raise PrecisionError("boundary not resolved after 512 extra bits")
        inB[idx] = res
    return inB


def simulate_orbit(q, seed, n_range=(-10_000, 10_000), t_shift=0.0, bits=None) -> OrbitSample:
    """Hits n in [n_min, n_max] with x_n in B; bits b_i cover i = n_min+1 .. n_max+64+512."""
    qf = _check_q(q, allow_half=True)
    n_min, n_max = int(n_range[0]), int(n_range[1])
    if n_max < n_min:
        raise ValueError("empty range")
    if not 0.0 <= t_shift < 1.0:
        raise ValueError("t_shift must lie in [0, 1)")
    width = (n_max - n_min) + 64 + EXTRA_BITS + 1
    if bits is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed)])))
        bits = rng.integers(0, 2, width + 1, dtype=np.uint8)
    else:
        bits = np.asarray(bits, dtype=np.uint8)
        if len(bits) < width + 1:
            raise ValueError(f"need {width + 1} bits")
    # array index i holds b_{n_min + i}
    inB = membership(bits, qf, 0, n_max - n_min + 1)
    hits = np.arange(n_min, n_max + 1, dtype=np.int64)[inB]
    covered = np.zeros(n_max - n_min + 1, dtype=bool)
    covered[inB] = True
    covered[1:] |= inB[:-1]
    two = bool(covered[1:].all())
    return OrbitSample(bits, n_min, hits, qf, (n_min, n_max), float(t_shift), two)


def mc_suspension_variance(q, R, n_samples, seed) -> VarianceEstimate:
    """Variance of #((Lambda_z - t) in [-R, R]) over fresh orbits z and t uniform in [0, 1)."""
    if R < 1:
        raise ValueError("R must be at least 1")
    qf = _check_q(q, allow_half=True)
    n_lo = -math.ceil(R) - 1
    n_hi = math.ceil(R) + 1
    span = n_hi - n_lo + 1
    width = span + 64 + EXTRA_BITS + 1
    counts = np.empty(n_samples, dtype=np.int64)
    ns = np.arange(n_lo, n_hi + 1)
    for b, start in enumerate(range(0, n_samples, BLOCK)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0, b])))
        stop = min(n_samples, start + BLOCK)
        t = rng.random(BLOCK)[: stop - start]
        bits = rng.integers(0, 2, (BLOCK, width), dtype=np.uint8)[: stop - start]
        inB = membership(bits, qf, 0, span)
        pts = ns[None, :] - t[:, None]
        counts[start:stop] = (inB & (pts >= -R) & (pts <= R)).sum(axis=1)
    return variance_estimate(counts, R, seed)
