"""Acceptance windows in internal space and the Fourier transforms of their indicators.

Convention: chi_hat(xi) = int_W exp(-2 pi i <x, xi>) dx, so chi_hat(0) = volume(W).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# sup_x sqrt(x)|J_1(x)| is about 0.8250 (attained near x = 2.4); the envelope uses 0.85.
J1_SQRT_BOUND = 0.85

KINDS = ("interval", "euclidean_ball", "centered_box")


@dataclass(frozen=True)
class Window:
    kind: str
    d2: int
    radius: object = None
    half_widths: tuple = None
    center: tuple = None
    theta: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown window kind {self.kind!r}")
        if self.kind == "centered_box":
            if self.half_widths is None or len(self.half_widths) != self.d2:
                raise ValueError("box needs one half width per internal dimension")
            if any(h <= 0 for h in self.half_widths):
                raise ValueError("window parameters must be positive")
        else:
            if self.radius is None or self.radius <= 0:
                raise ValueError("window parameters must be positive")
        if self.kind == "interval" and self.d2 != 1:
            raise ValueError("interval windows live in d2 = 1")
        if self.kind == "euclidean_ball" and self.d2 not in (1, 2, 3):
            raise ValueError("euclidean balls are supported for d2 <= 3")
        if self.center is None:
            object.__setattr__(self, "center", (0,) * self.d2)
        if len(self.center) != self.d2:
            raise ValueError("center dimension mismatch")
        if self.theta is None:
            smooth = self.kind != "centered_box" or self.d2 == 1
            object.__setattr__(self, "theta", 1 if smooth else "none")

    @property
    def centered(self):
        return all(c == 0 for c in self.center)

    def bounding_box(self):
        """Per-axis (lo, hi) of the window as floats."""
        if self.kind == "centered_box":
            hw = [float(h) for h in self.half_widths]
        else:
            hw = [float(self.radius)] * self.d2
        return [(float(c) - h, float(c) + h) for c, h in zip(self.center, hw)]

    def contains(self, x2):
        """Closed membership test for an array of internal points, shape (N, d2)."""
        x2 = np.asarray(x2, dtype=float).reshape(-1, self.d2)
        c = np.asarray([float(v) for v in self.center])
        y = x2 - c
        if self.kind == "centered_box":
            hw = np.asarray([float(h) for h in self.half_widths])
            return np.all(np.abs(y) <= hw, axis=1)
        return np.sqrt((y**2).sum(axis=1)) <= float(self.radius)


def interval(b, center=0):
    return Window("interval", 1, radius=b, center=(center,))


def interval_from_endpoints(lo, hi):
    if hi <= lo:
        raise ValueError("window parameters must be positive")
    return Window("interval", 1, radius=(hi - lo) / 2, center=((hi + lo) / 2,))


def euclidean_ball(r, d2, center=None):
    return Window("euclidean_ball", d2, radius=r, center=center)


def centered_box(half_widths):
    hw = tuple(half_widths)
    return Window("centered_box", len(hw), half_widths=hw)


def volume(W: Window) -> float:
    if W.kind == "centered_box":
        return float(np.prod([2.0 * float(h) for h in W.half_widths]))
    r = float(W.radius)
    if W.d2 == 1:
        return 2.0 * r
    if W.d2 == 2:
        return math.pi * r * r
    return 4.0 * math.pi * r**3 / 3.0


# ---------------------------------------------------------------------------
# scalar special functions


def sin_pi(x) -> float:
    """sin(pi x), returning an exact 0.0 whenever x is an integer (Fraction or float)."""
    if isinstance(x, (Fraction, int)):
        x = Fraction(x)
        r = x % 2
        if r.denominator == 1:
            return 0.0
        # reduce to (-1, 1) so that sin_pi(-x) == -sin_pi(x) bit for bit
        return math.sin(math.pi * float(r - 2 if r > 1 else r))
    x = float(x)
    if x.is_integer():
        return 0.0
    return math.sin(math.pi * math.remainder(x, 2.0))


def _j1_series(z):
    # extended precision absorbs the alternating-sum cancellation near the split point
    z = np.asarray(z, dtype=np.longdouble)
    h2 = -(z * z) / 4
    term = z / 2.0
    total = term.copy()
    for k in range(80):
        term = term * h2 / ((k + 1) * (k + 2))
        total = total + term
        if np.all(np.abs(term) <= 1e-21 * np.maximum(1.0, np.abs(total))):
            break
    return total.astype(float)


def _j1_hankel(z):
    z = np.asarray(z, dtype=float)
    mu = 4.0
    p = np.ones_like(z)
    q = np.zeros_like(z)
    coef = 1.0
    active = np.ones(z.shape, dtype=bool)
    prev = np.full(z.shape, np.inf)
    for k in range(1, 40):
        coef = coef * (mu - (2 * k - 1) ** 2) / (k * 8.0)
        term = coef / z**k
        mag = np.abs(term)
        active &= mag < prev
        prev = mag
        upd = np.where(active, term, 0.0)
        # odd k feed Q, even k feed P, with alternating signs every two steps
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q = q + sign * upd
        else:
            p = p + sign * upd
        if not active.any() or np.all(mag < 1e-18):
            break
    chi = z - 0.75 * math.pi
    return np.sqrt(2.0 / (math.pi * z)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1(z):
    """J_1 by power series for |z| <= 14 and the Hankel expansion beyond.

    The split point keeps both branches below 1e-12 absolute error.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    a = np.abs(z)
    out = np.empty_like(a)
    small = a <= 14.0
    if small.any():
        out[small] = _j1_series(a[small])
    if (~small).any():
        out[~small] = _j1_hankel(a[~small])
    out = np.sign(z) * out
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# transforms


def _interval_ft_real(length, x):
    """Vectorised sin(pi L x)/(pi x) with value L at 0 and exact zeros at integer L x."""
    x = np.asarray(x, dtype=float)
    t = length * x
    s = np.sin(np.pi * np.fmod(t, 2.0))
    s = np.where(t == np.round(t), 0.0, s)
    safe = np.where(x == 0.0, 1.0, x)
    return np.where(x == 0.0, length, s / (np.pi * safe))


def _ball3_ft(r, k):
    z = 2.0 * np.pi * r * k
    safe = np.where(k == 0.0, 1.0, k)
    big = (np.sin(z) - z * np.cos(z)) / (2.0 * np.pi**2 * safe**3)
    vol = 4.0 * np.pi * r**3 / 3.0
    series = vol * (1.0 - z**2 / 10.0 + z**4 / 280.0 - z**6 / 15120.0)
    return np.where(z < 1e-2, series, big)


def _ball2_ft(r, k):
    safe = np.where(k == 0.0, 1.0, k)
    val = r * bessel_j1(2.0 * np.pi * r * safe) / safe
    return np.where(k == 0.0, np.pi * r * r, val)


def ft_real_part(W: Window, xi2):
    """Real amplitude of chi_hat for the centred copy of W, vectorised over rows of xi2."""
    xi2 = np.asarray(xi2, dtype=float)
    if W.d2 == 1:
        xi2 = xi2.reshape(-1, 1)
    else:
        xi2 = xi2.reshape(-1, W.d2)
    if W.kind == "centered_box":
        out = np.ones(len(xi2))
        for i, h in enumerate(W.half_widths):
            out = out * _interval_ft_real(2.0 * float(h), xi2[:, i])
        return out
    r = float(W.radius)
    if W.d2 == 1:
        return _interval_ft_real(2.0 * r, xi2[:, 0])
    k = np.sqrt((xi2**2).sum(axis=1))
    if W.d2 == 2:
        return _ball2_ft(r, k)
    return _ball3_ft(r, k)


def ft_abs2(W: Window, xi2):
    """|chi_hat_W|^2 vectorised; the phase of an off-centre window drops out."""
    a = ft_real_part(W, xi2)
    return a * a


def ft_indicator(W: Window, xi2) -> complex:
    """chi_hat_W at one frequency, honouring exact rational input for intervals and boxes."""
    xi = list(xi2) if np.ndim(xi2) else [xi2]
    if len(xi) != W.d2:
        raise ValueError("dimension mismatch")
    exact = all(isinstance(v, (int, Fraction)) for v in xi)
    if W.kind == "interval" or W.kind == "centered_box" or (W.kind == "euclidean_ball" and W.d2 == 1):
        hws = W.half_widths if W.kind == "centered_box" else (W.radius,)
        amp = 1.0
        for h, v in zip(hws, xi):
            if v == 0:
                amp *= float(2 * h)
                continue
            arg = 2 * Fraction(h) * Fraction(v) if exact and isinstance(h, (int, Fraction)) else 2 * float(h) * float(v)
            s = sin_pi(arg)
            amp *= 0.0 if s == 0.0 else s / (math.pi * float(v))
    else:
        amp = float(ft_real_part(W, np.asarray([float(v) for v in xi]))[0])
    if W.centered:
        return complex(amp, 0.0)
    phase = sum(float(c) * float(v) for c, v in zip(W.center, xi))
    return amp * complex(math.cos(2 * math.pi * phase), -math.sin(2 * math.pi * phase))


def envelope(W: Window):
    """(E, p, s0) with |chi_hat(xi)|^2 <= E * s**(-p) whenever ||xi||_inf >= s >= s0."""
    if W.kind == "centered_box" and W.d2 > 1:
        hw = [float(h) for h in W.half_widths]
        return (volume(W) / (2.0 * min(hw) * math.pi)) ** 2, 2.0, 0.0
    if W.d2 == 1:
        return 1.0 / math.pi**2, 2.0, 0.0
    r = float(W.radius)
    if W.d2 == 2:
        return r * J1_SQRT_BOUND**2 / (2.0 * math.pi), 3.0, 0.0
    return ((1.0 + 2.0 * math.pi * r) / (2.0 * math.pi**2)) ** 2, 4.0, 1.0


def verify_fourier_smooth(W: Window, xi_grid):
    """sup |chi_hat| (1+|xi|)^((d2+theta)/2) over the grid, and whether it stays flat.

    Flat means the sup over the last decade of |xi| is at most twice the sup before it.
    """
    if W.theta == "none":
        raise ValueError("not Fourier smooth")
    xi = np.asarray(xi_grid, dtype=float).reshape(-1, W.d2)
    norms = np.sqrt((xi**2).sum(axis=1))
    vals = np.abs(ft_real_part(W, xi)) * (1.0 + norms) ** ((W.d2 + float(W.theta)) / 2.0)
    sup = float(vals.max())
    top = norms.max()
    last = norms >= top / 10.0
    if last.all() or not np.isfinite(sup):
        return sup, bool(np.isfinite(sup))
    return sup, bool(vals[last].max() <= 2.0 * vals[~last].max())


def window_to_dict(W: Window) -> dict:
    d = {"kind": W.kind, "d2": W.d2, "theta": W.theta}
    if W.kind == "centered_box":
        d["half_widths"] = [_num_out(h) for h in W.half_widths]
    else:
        d["radius"] = _num_out(W.radius)
    if not W.centered:
        d["center"] = [_num_out(c) for c in W.center]
    return d


def window_from_dict(d: dict) -> Window:
    kind = d["kind"]
    center = tuple(_num_in(c) for c in d["center"]) if "center" in d else None
    if kind == "centered_box":
        return Window(kind, int(d["d2"]), half_widths=tuple(_num_in(h) for h in d["half_widths"]))
    return Window(kind, int(d["d2"]), radius=_num_in(d["radius"]), center=center)


def _num_out(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return float(v)


def _num_in(v):
    if isinstance(v, str):
        return Fraction(v)
    return v
