"""Backend selection for the hot loops.

The compiled extension is used when it imports; QCS_PURE_PYTHON=1 forces numpy.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("QCS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def backend(name=None):
    """The kernel module for "python", "cython" or None (the selected default)."""
    if name is None:
        return _impl
    if not isinstance(name, str):
        return name
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def count_points_2d(B, Binv, lo1, hi1, lo2, hi2, axis=0, impl=None):
    """Lattice points of B Z^2 in the boxes [lo1, hi1] x [lo2, hi2], one count per row."""
    impl = backend(impl)
    return impl.count_points_2d(_c(B), _c(Binv), _c(lo1), _c(hi1), _c(lo2), _c(hi2), int(axis))


def sinc2_sum_2d(V, Vinv, axis, E, C, L1, L2, impl=None):
    impl = backend(impl)
    acc, n = impl.sinc2_sum_2d(_c(V), _c(Vinv), int(axis), float(E), float(C), _c(np.atleast_1d(L1)), float(L2))
    return np.asarray(acc), int(n)


def pick_axis(M):
    """Loop over the column whose coefficient range is narrowest; the other is solved."""
    import numpy.linalg as la

    inv = la.inv(np.asarray(M, dtype=float))
    return 0 if np.abs(inv[0]).sum() <= np.abs(inv[1]).sum() else 1
