import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcs import kernels
from qcs import _pykernels
from qcs.diffraction import fibonacci_scheme, gamma_a_scheme, quadratic_scheme
from qcs.lattice import LatticeBasis, dual_basis, enumerate_arrays

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


def test_backend_selected():
    assert kernels.BACKEND in ("python", "cython")
    with pytest.raises(ValueError):
        kernels.backend("fortran")


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("S", [gamma_a_scheme(2**0.5, 0.3), fibonacci_scheme(), quadratic_scheme(2)], ids=lambda s: s.label)
def test_counts_match_enumeration(impl, S):
    rng = np.random.default_rng(1)
    B = S.lattice.basis
    n = 40
    c1 = rng.uniform(-5, 5, n)
    c2 = rng.uniform(-1, 1, n)
    lo1, hi1 = c1 - 7.3, c1 + 7.3
    lo2, hi2 = c2 - 0.6, c2 + 0.6
    got = kernels.count_points_2d(B, S.lattice.inverse, lo1, hi1, lo2, hi2, axis=kernels.pick_axis(B), impl=impl)
    for i in range(n):
        c, _ = enumerate_arrays(S.lattice, [(lo1[i], hi1[i])], [(lo2[i], hi2[i])])
        assert got[i] == len(c)


@given(st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4), st.floats(-3, 3), st.floats(0.1, 4))
def test_backends_agree_on_counts(entries, c, w):
    if kernels.BACKEND != "cython":
        return
    M = np.array(entries).reshape(2, 2) + 2 * np.eye(2)
    L = LatticeBasis.from_matrix(M, 1, 1)
    lo1 = np.array([c - w, c]); hi1 = np.array([c + w, c + 2 * w])
    lo2 = np.array([-w, -1.0]); hi2 = np.array([w, 0.5])
    for axis in (0, 1):
        a = kernels.count_points_2d(M, L.inverse, lo1, hi1, lo2, hi2, axis, impl="python")
        b = kernels.count_points_2d(M, L.inverse, lo1, hi1, lo2, hi2, axis, impl="cython")
        assert np.array_equal(a, b)


def _direct_sinc2_sum(S, E, C, L1, L2):
    V = dual_basis(S.lattice)
    _, x = enumerate_arrays(V, [(-E, E)], [(-C, C)])
    x = x[np.any(x != 0, axis=1)]
    return np.array([float(np.sum(_pykernels.sinc2(L, x[:, 0]) * _pykernels.sinc2(L2, x[:, 1]))) for L in L1]), len(x)


@pytest.mark.parametrize("impl", BACKENDS)
def test_sinc2_sum_matches_enumeration(impl):
    S = fibonacci_scheme()
    V = dual_basis(S.lattice).basis
    L1 = np.array([3.0, 10.0, 20.5])
    acc, n = kernels.sinc2_sum_2d(V, np.linalg.inv(V), kernels.pick_axis(V), 40.0, 60.0, L1, 1.618, impl=impl)
    ref, nref = _direct_sinc2_sum(S, 40.0, 60.0, L1, 1.618)
    assert n == nref
    assert np.allclose(acc, ref, rtol=1e-11)


def test_sinc2_exact_zeros():
    x = np.array([0.0, 0.5, 1.0, 0.25, -2.0])
    v = _pykernels.sinc2(2.0, x)
    assert v[0] == 4.0 and v[1] == 0.0 and v[2] == 0.0 and v[4] == 0.0
    assert v[3] == pytest.approx((np.sin(np.pi * 0.5) / (np.pi * 0.25)) ** 2)


def test_pure_python_switch():
    import os
    import subprocess
    import sys
    env = dict(os.environ, QCS_PURE_PYTHON="1")
    r = subprocess.run([sys.executable, "-c", "import qcs; print(qcs.BACKEND)"], env=env, capture_output=True, text=True)
    assert r.stdout.strip() == "python"
