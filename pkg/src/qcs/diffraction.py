"""Centered diffraction of cut-and-project schemes and the statistics built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import QCSError, resolve_budget
from .nonhyper import diffraction_mass_gamma_ab  # noqa: F401  closed form for Gamma_a, kept here as the second route
from .lattice import (
    LatticeBasis,
    arithmetic_quadratic_lattice,
    dual_basis,
    gamma_a_lattice,
    iter_box_chunks,
)
from .window import (
    Window,
    centered_box,
    envelope,
    euclidean_ball,
    ft_abs2,
    ft_real_part,
    interval,
    interval_from_endpoints,
    volume,
)

PHI = (1.0 + math.sqrt(5.0)) / 2.0
N_PROFILE = 64


@dataclass(frozen=True)
class Scheme:
    lattice: LatticeBasis
    window: Window
    label: str = ""

    def __post_init__(self):
        if self.lattice.d2 != self.window.d2:
            raise ValueError("lattice and window internal dimensions differ")

    @property
    def covol(self):
        return self.lattice.det_abs


def z2_scheme():
    L = LatticeBasis.from_matrix([[1, 0], [0, 1]], 1, 1, exact=((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))))
    return Scheme(L, interval(Fraction(1, 2)), "z2")


def gamma_a_scheme(a, b):
    return Scheme(gamma_a_lattice(a), interval(b), f"gamma_a:{a},{b}")


def quadratic_scheme(D, b=0.3, ring="sqrt"):
    """Scheme whose dual lattice is the Minkowski embedding of the quadratic order."""
    return Scheme(dual_basis(arithmetic_quadratic_lattice(D, ring)), interval(b), f"quadratic:{D}")


def fibonacci_scheme():
    phi_star = 1.0 - PHI
    L = LatticeBasis.from_matrix([[1.0, PHI], [1.0, phi_star]], 1, 1)
    return Scheme(L, interval_from_endpoints(-1.0, PHI - 1.0), "fibonacci")


def intensity(S: Scheme) -> float:
    return volume(S.window) / S.covol


def uncentered_zero_atom(S: Scheme) -> float:
    """Weight of the uncentered diffraction at 0, from the transform and the dual covolume.

    Independent of intensity(): uses chi_hat(0) and det of the dual basis.
    """
    chi0 = float(ft_real_part(S.window, np.zeros(S.window.d2))[0])
    cd = dual_basis(S.lattice).det_abs
    return chi0 * chi0 * cd * cd


def poisson_variance(d: int, intensity: float, R: float) -> float:
    if R <= 0:
        raise ValueError("R must be positive")
    return intensity * math.pi ** (d / 2) / math.gamma(d / 2 + 1) * R**d


# ---------------------------------------------------------------------------
# atomic measures


@dataclass
class AtomicMeasure:
    """Finite list of atoms plus a radius-resolved bound on what was left out.

    tail_cum[i] bounds the omitted mass inside the ball of radius tail_radii[i];
    `complete` marks a measure with nothing beyond eps_max (synthetic inputs).
    """

    xi1: np.ndarray
    weights: np.ndarray
    eps_max: float
    weight_floor: float
    tail_bound: float = 0.0
    tail_radii: np.ndarray = None
    tail_cum: np.ndarray = None
    complete: bool = False
    label: str = ""
    _norms: np.ndarray = field(default=None, repr=False)
    _cum: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.xi1 = np.asarray(self.xi1, dtype=float)
        if self.xi1.ndim == 1:
            self.xi1 = self.xi1.reshape(-1, 1)
        self.weights = np.asarray(self.weights, dtype=float)
        norms = np.sqrt((self.xi1**2).sum(axis=1))
        order = np.argsort(norms, kind="stable")
        self.xi1, self.weights, self._norms = self.xi1[order], self.weights[order], norms[order]
        self._cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        if self.tail_radii is None:
            self.tail_radii = np.array([self.eps_max])
            self.tail_cum = np.array([float(self.tail_bound)])
        self.tail_radii = np.asarray(self.tail_radii, dtype=float)
        self.tail_cum = np.asarray(self.tail_cum, dtype=float)

    @classmethod
    def from_atoms(cls, xi1, weights, eps_max, weight_floor=0.0, tail_bound=0.0, complete=True):
        return cls(xi1, weights, float(eps_max), float(weight_floor), float(tail_bound), complete=complete)

    @property
    def d1(self):
        return self.xi1.shape[1]

    @property
    def atoms(self):
        return [(tuple(x), float(w)) for x, w in zip(self.xi1, self.weights)]

    def __len__(self):
        return len(self.weights)

    def mass_within(self, r):
        return float(self._cum[np.searchsorted(self._norms, r, side="right")])

    def tail_within(self, r):
        i = np.searchsorted(self.tail_radii, r * (1 - 1e-12), side="left")
        return float(self.tail_cum[min(i, len(self.tail_cum) - 1)])

    def growth_constant(self):
        """max (mass + omitted)/rho^{d1} over rho in [eps_max/4, eps_max].

        Used to extend sums beyond eps_max; the bound mass(B_R) << R^{d1} holds with
        some constant, and this is the measured one at the largest certified scale.
        """
        if self.complete:
            return 0.0
        rs = np.linspace(self.eps_max / 4, self.eps_max, 33)
        return max((self.mass_within(r) + self.tail_within(r)) / r**self.d1 for r in rs)

    def shell_integral(self, g):
        """Bound on sum over omitted atoms inside eps_max of g(|xi1|), g nonincreasing."""
        prev_r, prev_t, total = 0.0, 0.0, 0.0
        for r, t in zip(self.tail_radii, self.tail_cum):
            total += max(0.0, t - prev_t) * g(prev_r)
            prev_r, prev_t = r, t
        return total

    def check_invariants(self, tol=1e-10):
        if np.any(self.weights <= 0):
            return False
        if np.any(self._norms > self.eps_max * (1 + 1e-12)) or np.any(self._norms == 0):
            return False
        # sort atoms and their mirror images the same way; symmetry means the two lists agree
        k = np.round(self.xi1, 9)
        cols = [self.weights] + [k[:, i] for i in range(self.d1 - 1, -1, -1)]
        mcols = [self.weights] + [-k[:, i] for i in range(self.d1 - 1, -1, -1)]
        a, b = np.lexsort(cols), np.lexsort(mcols)
        if not np.array_equal(k[a], -k[b]):
            return False
        return bool(np.all(np.abs(self.weights[a] - self.weights[b]) <= tol * np.maximum(1.0, self.weights[a])))


def _beyond_cap_bound(n_h, E, p, d2, h, cap, covol):
    """Mass bound for atoms with ||xi2||_inf > cap given n_h points per slab translate."""
    if n_h == 0:
        return 0.0
    q = p - d2 + 1
    if q <= 1:
        return math.inf
    A = 2 * d2 * 6 ** (d2 - 1) * n_h * E * h ** (1 - d2) / covol**2
    return A * (cap ** (-q) + cap ** (1 - q) / ((q - 1) * h))


def xi2_cap_for(W: Window, covol: float, weight_floor: float) -> float:
    E, p, s0 = envelope(W)
    return max(s0, (E / (covol**2 * weight_floor)) ** (1.0 / p))


def centered_diffraction(S: Scheme, eps_max=1.0, weight_floor=1e-14, xi2_cap=None, budget=None) -> AtomicMeasure:
    """Atoms (xi1, |chi_hat_W(xi2)|^2 / covol^2) of the dual lattice with |xi1| <= eps_max."""
    if eps_max <= 0 or weight_floor <= 0:
        raise ValueError("eps_max and weight_floor must be positive")
    budget = resolve_budget(budget)
    d1, d2 = S.lattice.d1, S.lattice.d2
    W, covol = S.window, S.covol
    E, p, s0 = envelope(W)
    cap = float(xi2_cap) if xi2_cap is not None else xi2_cap_for(W, covol, weight_floor)
    V = dual_basis(S.lattice)
    radii = np.concatenate([eps_max * np.logspace(-9, 0, N_PROFILE - 1), [eps_max]])
    radii = np.unique(radii)
    dropped = np.zeros(len(radii) + 1)
    xs, ws = [], []
    box1 = [(-eps_max, eps_max)] * d1
    box2 = [(-cap, cap)] * d2
    for _, x in iter_box_chunks(V, box1, box2, budget):
        x1, x2 = x[:, :d1], x[:, d1:]
        nz = np.any(x != 0.0, axis=1)
        x1, x2 = x1[nz], x2[nz]
        r = np.sqrt((x1**2).sum(axis=1))
        inside = r <= eps_max
        x1, x2, r = x1[inside], x2[inside], r[inside]
        w = ft_abs2(W, x2) / covol**2
        keep = w >= weight_floor
        xs.append(x1[keep])
        ws.append(w[keep])
        low = ~keep
        if low.any():
            np.add.at(dropped, np.searchsorted(radii, r[low], side="left"), w[low])
    # slab-translate counts for the part beyond the cap, by |xi1|_inf radius
    beyond = np.zeros(len(radii))
    if W.theta == "none" and d2 > 1:
        beyond[:] = math.inf
    else:
        h = cap / 4.0
        hist = np.zeros(len(radii) + 1)
        for _, x in iter_box_chunks(V, [(-2 * eps_max, 2 * eps_max)] * d1, [(-h, h)] * d2, budget):
            inner = np.all(np.abs(x[:, d1:]) < h, axis=1)
            rinf = np.abs(x[inner, :d1]).max(axis=1) / 2.0 if d1 else np.zeros(inner.sum())
            np.add.at(hist, np.searchsorted(radii, rinf, side="left"), 1)
        nh = np.cumsum(hist)[: len(radii)]
        # a Euclidean ball of radius r sits in the cube of half width r
        beyond = np.array([_beyond_cap_bound(int(n), E, p, d2, h, cap, covol) for n in nh])
    tail_cum = np.cumsum(dropped)[: len(radii)] + beyond
    xi1 = np.concatenate(xs) if xs else np.zeros((0, d1))
    w = np.concatenate(ws) if ws else np.zeros(0)
    return AtomicMeasure(
        xi1, w, float(eps_max), float(weight_floor), float(tail_cum[-1]),
        tail_radii=radii, tail_cum=tail_cum, label=S.label,
    )


def ball_mass(M: AtomicMeasure, eps: float):
    if eps > M.eps_max * (1 + 1e-12):
        raise QCSError("outside certified region")
    return M.mass_within(eps), M.tail_within(eps)


# ---------------------------------------------------------------------------
# variances


def _gamma_upper(k, alpha, E):
    """int_E^inf rho^k exp(-alpha rho^2) d rho for integer k >= 0."""
    i0 = math.sqrt(math.pi / alpha) / 2.0 * math.erfc(math.sqrt(alpha) * E)
    i1 = math.exp(-alpha * E * E) / (2.0 * alpha)
    vals = [i0, i1]
    for j in range(2, k + 1):
        vals.append(E ** (j - 1) * math.exp(-alpha * E * E) / (2.0 * alpha) + (j - 1) / (2.0 * alpha) * vals[j - 2])
    return vals[k]


def spectral_variance(M: AtomicMeasure, shape: Window):
    """(sum of w |chi_hat_shape(xi1)|^2, bound on the omitted part).

    The shape is a Window over physical space (interval, Euclidean ball, box).
    """
    d1 = M.d1
    if shape.d2 != d1:
        raise ValueError("shape dimension must equal d1")
    value = float(np.dot(M.weights, ft_abs2(shape, M.xi1))) if len(M) else 0.0
    Es, ps, s0 = envelope(shape)
    vol2 = volume(shape) ** 2
    Ee = Es * d1 ** (ps / 2)

    def g(r):
        if r <= max(s0 * math.sqrt(d1), 0.0) or r == 0.0:
            return vol2
        return min(vol2, Ee * r ** (-ps))

    tail = M.shell_integral(g)
    A = M.growth_constant()
    if A > 0:
        if shape.theta == "none" and d1 > 1 or ps <= d1:
            return value, math.inf
        tail += ps * Ee * A * M.eps_max ** (d1 - ps) / (ps - d1)
    return value, tail


def streaming_caps(S: Scheme, R_max, points=4e7):
    """(E, C) spending about `points` dual points, balancing the two truncation terms."""
    area = float(points) / (4.0 * S.covol)
    a = 2.0 * float(R_max)
    b = volume(S.window)
    return math.sqrt(b * area / a), math.sqrt(a * area / b)


def spectral_variance_scheme(S: Scheme, R_list, E=None, C=None, points=4e7, impl=None):
    """Number variance of [-R, R] for planar schemes with interval windows, by streaming.

    Sums over every dual point with |xi1| <= E, |xi2| <= C without materialising atoms.
    Returns (values, tail_estimates, points visited); the estimate is the omitted mass
    under the mean dual-lattice density, not a certified bound.
    """
    if S.lattice.d1 != 1 or S.lattice.d2 != 1:
        raise ValueError("streaming variance needs d1 = d2 = 1")
    R = np.atleast_1d(np.asarray(R_list, dtype=float))
    if E is None or C is None:
        E0, C0 = streaming_caps(S, R.max(), points)
        E = E0 if E is None else E
        C = C0 if C is None else C
    V = dual_basis(S.lattice).basis
    Vinv = np.linalg.inv(V)
    axis = kernels.pick_axis(V)
    L2 = volume(S.window)
    acc, n = kernels.sinc2_sum_2d(V, Vinv, axis, E, C, 2.0 * R, L2, impl=impl)
    covol = S.covol
    vals = acc / covol**2
    est = (2.0 * R / (math.pi**2 * C) + L2 / (math.pi**2 * E)) / covol
    return vals, est, n


def gaussian_statistic_variance(M: AtomicMeasure, t: float, d: int):
    """(sum w t^{-2d} exp(-2 pi |xi1|^2 / t^2), bound on the part beyond eps_max).

    The beyond part uses the growth constant of M; the error triggers when it exceeds
    10% of the value.  Omissions inside eps_max come from gaussian_omitted_inside.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    alpha = 2.0 * math.pi / t**2
    scale = t ** (-2 * d)
    if len(M):
        r2 = (M.xi1**2).sum(axis=1)
        value = float(scale * np.dot(M.weights, np.exp(-alpha * r2)))
    else:
        value = 0.0
    tail = 0.0
    A = M.growth_constant()
    if A > 0:
        tail = scale * 2.0 * alpha * A * _gamma_upper(M.d1 + 1, alpha, M.eps_max)
    if tail > 0.1 * value:
        raise QCSError("certified region too small")
    return value, tail


def gaussian_omitted_inside(M: AtomicMeasure, t: float, d: int) -> float:
    """Bound for atoms inside eps_max that fell below the floor or beyond the xi2 cap."""
    alpha = 2.0 * math.pi / t**2
    return t ** (-2 * d) * M.shell_integral(lambda r: math.exp(-alpha * r * r))


# ---------------------------------------------------------------------------
# scaling fits and criteria


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    pairs: tuple
    method: str = "upper-envelope least squares"
    dropped: int = 0


def fit_scaling(pairs) -> ScalingFit:
    pairs = [(float(e), float(m)) for e, m in pairs]
    eps = [e for e, _ in pairs]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps must be strictly decreasing")
    if any(m < 0 for _, m in pairs):
        raise ValueError("masses must be nonnegative")
    nonzero = [(e, m) for e, m in pairs if m > 0]
    if len(nonzero) < 2:
        raise QCSError("insufficient decay data")
    bands = {}
    for e, m in nonzero:
        k = math.floor(math.log2(e))
        if k not in bands or m > bands[k][1]:
            bands[k] = (e, m)
    kept = sorted(bands.values(), reverse=True)
    if len(kept) < 2:
        raise QCSError("insufficient decay data")
    x = np.log([e for e, _ in kept])
    y = np.log([m for _, m in kept])
    slope, intercept = np.polyfit(x, y, 1)
    return ScalingFit(float(slope), float(intercept), tuple(zip(x.tolist(), y.tolist())), dropped=len(pairs) - len(nonzero))


def classify_hyperuniform(fit: ScalingFit, d1: int, margin: float = 0.1) -> str:
    if fit.slope >= d1 + margin:
        return "sub_poissonian"
    if fit.slope <= d1 - margin:
        return "super_poissonian"
    return "not_determined"


def sufficient_condition_bound(beta, d2, theta, eps) -> float:
    if beta <= 0 or theta <= 0:
        raise ValueError("beta and theta must be positive")
    return eps ** (beta * (d2 + theta))


def envelope_constant(pairs, exponent):
    """Smallest C with mass <= C eps^exponent on every pair."""
    return max((m / e**exponent for e, m in pairs), default=0.0)


def rigidity_check(M: AtomicMeasure, eps_seq, d: int, delta: float):
    """(pass, C_hat, ratios): ratios mass(B_eps)/eps^(2d+delta), pass if the last half never rises."""
    eps_seq = list(eps_seq)
    ratios = [ball_mass(M, e)[0] / e ** (2 * d + delta) for e in eps_seq]
    # the last floor(n/2) ratios; for odd n the middle one is not part of the tail
    tail = ratios[len(ratios) - len(ratios) // 2:]
    ok = all(b <= a * (1 + 1e-9) for a, b in zip(tail, tail[1:]))
    return ok, max(ratios, default=0.0), ratios


def measure_for_shape(d1, kind, R):
    """Physical-space shape used by spectral_variance."""
    if kind == "interval":
        return interval(R)
    if kind == "euclidean_ball":
        return euclidean_ball(R, d1)
    return centered_box([R] * d1)


def measure_to_csv(M: AtomicMeasure, header_lines=()) -> str:
    lines = list(header_lines)
    lines += [f"# eps_max {M.eps_max!r}", f"# weight_floor {M.weight_floor!r}", f"# tail_bound {M.tail_bound!r}"]
    cols = [f"xi1_{i}" for i in range(M.d1)] + ["weight"]
    lines.append(",".join(cols))
    for x, w in zip(M.xi1, M.weights):
        lines.append(",".join(repr(float(v)) for v in x) + f",{float(w)!r}")
    return "\n".join(lines) + "\n"


def measure_from_csv(text: str) -> AtomicMeasure:
    meta, rows, d1 = {}, [], None
    for line in text.splitlines():
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] in ("eps_max", "weight_floor", "tail_bound"):
                meta[parts[0]] = float(parts[1])
            continue
        if line.startswith("xi1_"):
            d1 = len(line.split(",")) - 1
            continue
        if line.strip():
            rows.append([float(v) for v in line.split(",")])
    arr = np.asarray(rows, dtype=float).reshape(-1, (d1 or 1) + 1)
    return AtomicMeasure(arr[:, :-1], arr[:, -1], meta["eps_max"], meta["weight_floor"], meta["tail_bound"])
