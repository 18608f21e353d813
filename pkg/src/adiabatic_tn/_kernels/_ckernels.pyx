# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled TEBD two-site update.

Same contract as ``_pykernels.two_site_update``; the contraction, gate
product, SVD and truncation run without returning to the interpreter.
Arrays are C-ordered, so each matrix is handed to BLAS/LAPACK as its
Fortran-ordered transpose.
"""

import numpy as np

from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zgesdd, zgesvd

from ..linalg import DecompositionError

ctypedef double complex zc


cdef int _svd_into(zc[::1] x, int m, int n, double[::1] s, zc[::1] u, zc[::1] vt):
    """Thin SVD of the Fortran (m x n) matrix in ``x``; ``x`` is destroyed."""
    cdef int mn = min(m, n)
    cdef int mx = max(m, n)
    cdef int info = 0
    cdef int lwork = -1
    cdef zc wquery = 0
    cdef char jobz = b'S'
    cdef int lrwork = max(5 * mn * mn + 5 * mn, 2 * mx * mn + 2 * mn * mn + mn)
    cdef double[::1] rwork = np.empty(max(lrwork, 1), dtype=np.float64)
    cdef int[::1] iwork = np.empty(8 * mn, dtype=np.intc)
    cdef zc[::1] backup = np.array(x, copy=True)
    cdef zc[::1] work
    zgesdd(&jobz, &m, &n, &x[0], &m, &s[0], &u[0], &m, &vt[0], &mn,
           &wquery, &lwork, &rwork[0], &iwork[0], &info)
    lwork = <int>wquery.real + 1
    work = np.empty(lwork, dtype=np.complex128)
    zgesdd(&jobz, &m, &n, &x[0], &m, &s[0], &u[0], &m, &vt[0], &mn,
           &work[0], &lwork, &rwork[0], &iwork[0], &info)
    if info == 0:
        return 0
    # divide and conquer failed: retry with QR iteration on the saved input
    cdef char job = b'S'
    lwork = -1
    zgesvd(&job, &job, &m, &n, &backup[0], &m, &s[0], &u[0], &m, &vt[0], &mn,
           &wquery, &lwork, &rwork[0], &info)
    lwork = <int>wquery.real + 1
    work = np.empty(lwork, dtype=np.complex128)
    zgesvd(&job, &job, &m, &n, &backup[0], &m, &s[0], &u[0], &m, &vt[0], &mn,
           &work[0], &lwork, &rwork[0], &info)
    return info


def two_site_update(a, b, gate, double cutoff, int max_bond, bint absorb_right):
    cdef zc[:, :, ::1] av = np.ascontiguousarray(a, dtype=np.complex128)
    cdef zc[:, :, ::1] bv = np.ascontiguousarray(b, dtype=np.complex128)
    cdef zc[:, ::1] gv = np.ascontiguousarray(gate, dtype=np.complex128)
    cdef int l = av.shape[0], d1 = av.shape[1], mid = av.shape[2]
    cdef int d2 = bv.shape[1], r = bv.shape[2]
    cdef int dd = d1 * d2
    cdef int p = l * d1, q = d2 * r
    cdef int mn = min(p, q)
    cdef zc one = 1.0, zero = 0.0
    cdef char nt = b'N'
    cdef int i, j, k, keep, off
    if gv.shape[0] != dd or gv.shape[1] != dd:
        raise ValueError(f"gate of shape {tuple(gate.shape)} does not act on dimension {dd}")
    if bv.shape[0] != mid:
        raise ValueError("bond dimensions of the two tensors do not match")

    # theta0 = A(p x mid) @ B(mid x q), computed as its transpose in Fortran terms
    cdef zc[::1] theta0 = np.empty(p * q, dtype=np.complex128)
    zgemm(&nt, &nt, &q, &p, &mid, &one, &bv[0, 0, 0], &q, &av[0, 0, 0], &mid,
          &zero, &theta0[0], &q)
    # per left index: theta[l] (dd x r) = G @ theta0[l]
    cdef zc[::1] theta = np.empty(p * q, dtype=np.complex128)
    for i in range(l):
        off = i * dd * r
        zgemm(&nt, &nt, &r, &dd, &dd, &one, &theta0[off], &r, &gv[0, 0], &dd,
              &zero, &theta[off], &r)

    cdef double[::1] s = np.empty(mn, dtype=np.float64)
    cdef zc[::1] ux = np.empty(q * mn, dtype=np.complex128)   # -> Vh of theta, C (mn, q)
    cdef zc[::1] vtx = np.empty(mn * p, dtype=np.complex128)  # -> U of theta, C (p, mn)
    if _svd_into(theta, q, p, s, ux, vtx) != 0:
        raise DecompositionError("svd", (p, q))

    cdef double total = 0.0, kept = 0.0, tail = 0.0
    for i in range(mn):
        total += s[i] * s[i]
    keep = mn
    if total > 0.0:
        # drop smallest-first while the discarded fraction stays <= cutoff
        while keep > 1:
            if (tail + s[keep - 1] * s[keep - 1]) / total > cutoff:
                break
            tail += s[keep - 1] * s[keep - 1]
            keep -= 1
    else:
        keep = 1
    cdef bint saturated = False
    if keep > max_bond:
        for i in range(max_bond, keep):
            tail += s[i] * s[i]
        keep = max_bond
        saturated = total > 0.0 and tail / total > cutoff
    for i in range(keep):
        kept += s[i] * s[i]
    cdef double scale = sqrt(total / kept) if kept > 0.0 else 1.0
    cdef double discarded = tail / total if total > 0.0 else 0.0

    new_a = np.empty((l, d1, keep), dtype=np.complex128)
    new_b = np.empty((keep, d2, r), dtype=np.complex128)
    cdef zc[:, :, ::1] na = new_a
    cdef zc[:, :, ::1] nb = new_b
    cdef zc[:, ::1] na2 = new_a.reshape(p, keep)
    cdef zc[:, ::1] nb2 = new_b.reshape(keep, q)
    cdef double sk
    for i in range(p):
        for k in range(keep):
            na2[i, k] = vtx[i * mn + k]
    for k in range(keep):
        for j in range(q):
            nb2[k, j] = ux[k * q + j]
    if absorb_right:
        for k in range(keep):
            sk = s[k] * scale
            for j in range(q):
                nb2[k, j] = nb2[k, j] * sk
    else:
        for i in range(p):
            for k in range(keep):
                na2[i, k] = na2[i, k] * (s[k] * scale)
    return new_a, new_b, discarded, bool(saturated)
