# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel for pairwise curve intersections.

Mirrors the contract of ``_kernel_py.cross_roots_indexed``: for each pair
of rational quadratics it forms the degree-four cross polynomial, finds
its real roots (closed forms up to degree two, LAPACK dgeev on a
companion matrix above that), and merges near-duplicate roots.
"""

from libc.math cimport fabs, sqrt

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_lapack cimport dgeev

cnp.import_array()


cdef inline double _max3(double a, double b, double c) nogil:
    cdef double m = a
    if b > m:
        m = b
    if c > m:
        m = c
    return m


cdef int _companion_real_roots(double *c, int deg, double imag_rtol,
                               double *out) nogil:
    """Real eigenvalues of the companion matrix of a monic polynomial with
    ascending coefficients c[0..deg-1]. Returns the number written."""
    cdef double a[16]
    cdef double wr[4]
    cdef double wi[4]
    cdef double work[64]
    cdef double vdum
    cdef int n = deg, lda = deg, ldv = 1, lwork = 64, info = 0
    cdef int i, j, cnt
    for i in range(deg * deg):
        a[i] = 0.0
    for j in range(deg - 1):
        # column-major: subdiagonal ones
        a[(j + 1) + j * lda] = 1.0
    for i in range(deg):
        a[i + (deg - 1) * lda] = -c[i]
    dgeev(b'N', b'N', &n, a, &lda, wr, wi, &vdum, &ldv, &vdum, &ldv,
          work, &lwork, &info)
    if info != 0:
        return -1
    cnt = 0
    for i in range(deg):
        if fabs(wi[i]) <= imag_rtol * (1.0 + fabs(wr[i])):
            out[cnt] = wr[i]
            cnt += 1
    return cnt


cdef int _poly_real_roots(double *p, double degree_rtol, double imag_rtol,
                          double *out) nogil:
    """Real roots of p0 + p1 x + ... + p4 x^4, unsorted. Returns count."""
    cdef double scale = 0.0, thresh, disc, sd, q, re, im
    cdef double monic[4]
    cdef int deg = 0, i
    for i in range(5):
        if fabs(p[i]) > scale:
            scale = fabs(p[i])
    if scale == 0.0:
        return 0
    thresh = degree_rtol * scale
    for i in range(4, -1, -1):
        if fabs(p[i]) > thresh:
            deg = i
            break
    if deg == 0:
        return 0
    if deg == 1:
        out[0] = -p[0] / p[1]
        return 1
    if deg == 2:
        disc = p[1] * p[1] - 4.0 * p[2] * p[0]
        if disc >= 0.0:
            sd = sqrt(disc)
            if p[1] >= 0.0:
                q = -0.5 * (p[1] + sd)
            else:
                q = -0.5 * (p[1] - sd)
            out[0] = q / p[2]
            if q != 0.0:
                out[1] = p[0] / q
            else:
                out[1] = -p[1] / (2.0 * p[2])
            return 2
        re = -p[1] / (2.0 * p[2])
        im = sqrt(-disc) / (2.0 * fabs(p[2]))
        if im <= imag_rtol * (1.0 + fabs(re)):
            out[0] = re
            return 1
        return 0
    for i in range(deg):
        monic[i] = p[i] / p[deg]
    return _companion_real_roots(monic, deg, imag_rtol, out)


cdef int _sort_dedup(double *r, int cnt, double dedup_rtol) nogil:
    """Insertion sort then merge clusters of nearby roots to their mean."""
    cdef int i, j, out_cnt, run
    cdef double key, acc
    for i in range(1, cnt):
        key = r[i]
        j = i - 1
        while j >= 0 and r[j] > key:
            r[j + 1] = r[j]
            j -= 1
        r[j + 1] = key
    if cnt <= 1:
        return cnt
    out_cnt = 0
    i = 0
    while i < cnt:
        acc = r[i]
        run = 1
        while i + run < cnt and (
            r[i + run] - r[i + run - 1]
            <= dedup_rtol * (1.0 + fabs(r[i + run]))
        ):
            acc += r[i + run]
            run += 1
        r[out_cnt] = acc / run
        out_cnt += 1
        i += run
    return out_cnt


def cross_roots_indexed(double[:, ::1] num, double[:, ::1] den,
                        cnp.int64_t[::1] ia, cnp.int64_t[::1] ib,
                        double identical_rtol=1e-10,
                        double degree_rtol=1e-13,
                        double imag_rtol=1e-8,
                        double dedup_rtol=1e-9):
    """Compiled counterpart of ``_kernel_py.cross_roots_indexed``."""
    cdef Py_ssize_t npair = ia.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] roots_arr = np.empty(4 * npair)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] owner_arr = np.empty(4 * npair,
                                                               dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ident_arr = np.zeros(npair,
                                                               dtype=np.uint8)
    cdef double[::1] roots = roots_arr
    cdef cnp.int64_t[::1] owner = owner_arr
    cdef unsigned char[::1] ident = ident_arr
    cdef Py_ssize_t r, total = 0
    cdef cnp.int64_t fa, fb
    cdef double p[5]
    cdef double buf[4]
    cdef double sa, sb, sc, sd, scale, pmax
    cdef int cnt, i
    cdef double a2, a1, a0, b2, b1, b0, c2, c1, c0, d2, d1, d0

    with nogil:
        for r in range(npair):
            fa = ia[r]
            fb = ib[r]
            a2 = num[fa, 0]; a1 = num[fa, 1]; a0 = num[fa, 2]
            b2 = den[fa, 0]; b1 = den[fa, 1]; b0 = den[fa, 2]
            c2 = num[fb, 0]; c1 = num[fb, 1]; c0 = num[fb, 2]
            d2 = den[fb, 0]; d1 = den[fb, 1]; d0 = den[fb, 2]
            p[4] = a2 * d2 - c2 * b2
            p[3] = a2 * d1 + a1 * d2 - (c2 * b1 + c1 * b2)
            p[2] = a2 * d0 + a1 * d1 + a0 * d2 - (c2 * b0 + c1 * b1 + c0 * b2)
            p[1] = a1 * d0 + a0 * d1 - (c1 * b0 + c0 * b1)
            p[0] = a0 * d0 - c0 * b0
            sa = _max3(fabs(a2), fabs(a1), fabs(a0))
            sb = _max3(fabs(b2), fabs(b1), fabs(b0))
            sc = _max3(fabs(c2), fabs(c1), fabs(c0))
            sd = _max3(fabs(d2), fabs(d1), fabs(d0))
            scale = sa * sd
            if sc * sb > scale:
                scale = sc * sb
            if scale < 1e-300:
                scale = 1e-300
            pmax = 0.0
            for i in range(5):
                if fabs(p[i]) > pmax:
                    pmax = fabs(p[i])
            if pmax <= identical_rtol * scale:
                ident[r] = 1
                continue
            cnt = _poly_real_roots(p, degree_rtol, imag_rtol, buf)
            if cnt <= 0:
                continue
            cnt = _sort_dedup(buf, cnt, dedup_rtol)
            for i in range(cnt):
                roots[total] = buf[i]
                owner[total] = r
                total += 1

    return roots_arr[:total].copy(), owner_arr[:total].copy(), \
        ident_arr.astype(bool)
