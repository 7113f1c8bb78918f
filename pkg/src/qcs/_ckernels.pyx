# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for planar (d1 = d2 = 1) lattices.

Arithmetic mirrors _pykernels operation by operation so both backends return the
same counts; sums may differ in the last bits because the summation order differs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, floor, sin, trunc, round, M_PI

cnp.import_array()


cdef inline double _sinc2(double L, double x) nogil:
    cdef double t, s
    if x == 0.0:
        return L * L
    t = L * x
    if t == round(t):
        return 0.0
    # t - 2 trunc(t/2) is the exact fmod(t, 2) remainder
    s = sin(M_PI * (t - 2.0 * trunc(0.5 * t))) / (M_PI * x)
    return s * s


def count_points_2d(const double[:, ::1] B, const double[:, ::1] Binv,
                    const double[::1] lo1, const double[::1] hi1,
                    const double[::1] lo2, const double[::1] hi2, int axis):
    """Per row s, count c in Z^2 with (B c)_0 in [lo1, hi1] and (B c)_1 in [lo2, hi2]."""
    cdef Py_ssize_t n = lo1.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(n, dtype=np.int64)
    cdef int other = 1 - axis
    cdef double u0 = Binv[axis, 0], u1 = Binv[axis, 1]
    cdef double ba0 = B[0, axis], ba1 = B[1, axis], bo0 = B[0, other], bo1 = B[1, other]
    cdef Py_ssize_t s
    cdef double cmin, cmax, c, r, tl, th, lo_t, hi_t, a0, a1, b0, b1
    cdef long long total, k
    with nogil:
        for s in range(n):
            if u0 > 0:
                a0 = u0 * lo1[s]
                b0 = u0 * hi1[s]
            else:
                a0 = u0 * hi1[s]
                b0 = u0 * lo1[s]
            if u1 > 0:
                a1 = u1 * lo2[s]
                b1 = u1 * hi2[s]
            else:
                a1 = u1 * hi2[s]
                b1 = u1 * lo2[s]
            cmin = ceil(a0 + a1)
            cmax = floor(b0 + b1)
            total = 0
            c = cmin
            while c <= cmax:
                lo_t = -1e300
                hi_t = 1e300
                r = ba0 * c
                if bo0 > 0:
                    tl = (lo1[s] - r) / bo0
                    th = (hi1[s] - r) / bo0
                elif bo0 < 0:
                    tl = (hi1[s] - r) / bo0
                    th = (lo1[s] - r) / bo0
                else:
                    if r < lo1[s] or r > hi1[s]:
                        c += 1.0
                        continue
                    tl = -1e300
                    th = 1e300
                if tl > lo_t:
                    lo_t = tl
                if th < hi_t:
                    hi_t = th
                r = ba1 * c
                if bo1 > 0:
                    tl = (lo2[s] - r) / bo1
                    th = (hi2[s] - r) / bo1
                elif bo1 < 0:
                    tl = (hi2[s] - r) / bo1
                    th = (lo2[s] - r) / bo1
                else:
                    if r < lo2[s] or r > hi2[s]:
                        c += 1.0
                        continue
                    tl = -1e300
                    th = 1e300
                if tl > lo_t:
                    lo_t = tl
                if th < hi_t:
                    hi_t = th
                # an empty range can hold infinities, which must not reach the cast
                if hi_t >= lo_t:
                    k = <long long>(floor(hi_t) - ceil(lo_t) + 1.0)
                    if k > 0:
                        total += k
                c += 1.0
            out[s] = total
    return out


def sinc2_sum_2d(const double[:, ::1] V, const double[:, ::1] Vinv, int axis,
                 double E, double C, const double[::1] L1, double L2):
    """Sum over nonzero points xi = V c with |xi_0| <= E, |xi_1| <= C of
    S(L1_j, xi_0) * S(L2, xi_1), S(L, x) = (sin(pi L x) / (pi x))^2, for every j.

    Returns (sums, number of points visited).
    """
    cdef Py_ssize_t nl = L1.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acc = np.zeros(nl, dtype=np.float64)
    cdef double[::1] accv = acc
    cdef int other = 1 - axis
    cdef double u0 = Vinv[axis, 0], u1 = Vinv[axis, 1]
    cdef double va0 = V[0, axis], va1 = V[1, axis], vo0 = V[0, other], vo1 = V[1, other]
    cdef double cmin, cmax, c, r0, r1, tl, th, lo_t, hi_t, t, x0, x1, w2
    cdef long long npts = 0
    cdef Py_ssize_t j
    cmin = ceil(-(abs(u0) * E + abs(u1) * C))
    cmax = floor(abs(u0) * E + abs(u1) * C)
    with nogil:
        c = cmin
        while c <= cmax:
            lo_t = -1e300
            hi_t = 1e300
            r0 = va0 * c
            r1 = va1 * c
            if vo0 != 0.0:
                tl = (-E - r0) / vo0
                th = (E - r0) / vo0
                if vo0 < 0:
                    tl, th = th, tl
                if tl > lo_t:
                    lo_t = tl
                if th < hi_t:
                    hi_t = th
            elif r0 < -E or r0 > E:
                c += 1.0
                continue
            if vo1 != 0.0:
                tl = (-C - r1) / vo1
                th = (C - r1) / vo1
                if vo1 < 0:
                    tl, th = th, tl
                if tl > lo_t:
                    lo_t = tl
                if th < hi_t:
                    hi_t = th
            elif r1 < -C or r1 > C:
                c += 1.0
                continue
            t = ceil(lo_t)
            while t <= hi_t:
                x0 = r0 + vo0 * t
                x1 = r1 + vo1 * t
                if (x0 != 0.0 or x1 != 0.0) and x0 >= -E and x0 <= E and x1 >= -C and x1 <= C:
                    npts += 1
                    w2 = _sinc2(L2, x1)
                    if w2 != 0.0:
                        for j in range(nl):
                            accv[j] += _sinc2(L1[j], x0) * w2
                t += 1.0
            c += 1.0
    return acc, npts
