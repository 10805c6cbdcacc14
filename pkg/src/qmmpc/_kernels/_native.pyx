# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled barrier hot kernels: affine block evaluation, Cholesky-based
log-det, and barrier gradient/Hessian accumulation.

The matrices involved are tiny (order <= ~12) but evaluated tens of
thousands of times per closed-loop run, so the loops are written in plain C
with no temporaries."""

from libc.math cimport log, sqrt, NAN
from libc.stdint cimport int64_t

NAME = "native"


cdef inline void _build(const double[:, ::1] f0, const double[:, :, ::1] coeffs,
                        const int64_t[::1] ids, const double[::1] z,
                        double[:, ::1] fwork) noexcept nogil:
    cdef Py_ssize_t m = f0.shape[0]
    cdef Py_ssize_t k = ids.shape[0]
    cdef Py_ssize_t a, b, t
    cdef double w
    for a in range(m):
        for b in range(m):
            fwork[a, b] = f0[a, b]
    for t in range(k):
        w = z[ids[t]]
        for a in range(m):
            for b in range(m):
                fwork[a, b] += w * coeffs[t, a, b]


cdef inline int _chol(double[:, ::1] a) noexcept nogil:
    # In-place lower Cholesky; upper triangle is left stale. Returns -1
    # when the matrix is not positive definite.
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t i, j, t
    cdef double acc
    for j in range(m):
        acc = a[j, j]
        for t in range(j):
            acc -= a[j, t] * a[j, t]
        if not acc > 0.0:
            return -1
        a[j, j] = sqrt(acc)
        for i in range(j + 1, m):
            acc = a[i, j]
            for t in range(j):
                acc -= a[i, t] * a[j, t]
            a[i, j] = acc / a[j, j]
    return 0


def eval_affine(const double[:, ::1] f0, const double[:, :, ::1] coeffs,
                const int64_t[::1] ids, const double[::1] z,
                double[:, ::1] out):
    """out <- f0 + sum_k z[ids[k]] * coeffs[k]."""
    _build(f0, coeffs, ids, z, out)


def block_logdet(const double[:, ::1] f0, const double[:, :, ::1] coeffs,
                 const int64_t[::1] ids, const double[::1] z,
                 double[:, ::1] fwork):
    """log det of the evaluated block, or NaN when it is not PD."""
    cdef Py_ssize_t m = f0.shape[0]
    cdef Py_ssize_t a
    cdef double acc = 0.0
    _build(f0, coeffs, ids, z, fwork)
    if _chol(fwork) != 0:
        return NAN
    for a in range(m):
        acc += log(fwork[a, a])
    return 2.0 * acc


def block_grad_hess(const double[:, ::1] f0, const double[:, :, ::1] coeffs,
                    const int64_t[::1] ids, const double[::1] z,
                    double[::1] grad, double[:, ::1] hess,
                    double[:, ::1] fwork, double[:, :, ::1] gwork):
    """Accumulate the log-det barrier gradient and Hessian of one block.

    grad[i] -= tr(F^-1 F_i), hess[i, j] += tr(F^-1 F_i F^-1 F_j) for the
    global variable ids appearing in the block. Returns log det F, or NaN
    (with grad/hess untouched) when F is not PD.
    """
    cdef Py_ssize_t m = f0.shape[0]
    cdef Py_ssize_t k = ids.shape[0]
    cdef Py_ssize_t t, ti, tj, r, c, u, a, b
    cdef int64_t gi, gj
    cdef double acc, v, tr
    cdef double logdet = 0.0

    _build(f0, coeffs, ids, z, fwork)
    if _chol(fwork) != 0:
        return NAN
    for a in range(m):
        logdet += log(fwork[a, a])

    # G_t = F^-1 C_t via forward/backward substitution with the factor L
    # (held in the lower triangle of fwork).
    for t in range(k):
        for c in range(m):
            for r in range(m):
                acc = coeffs[t, r, c]
                for u in range(r):
                    acc -= fwork[r, u] * gwork[t, u, c]
                gwork[t, r, c] = acc / fwork[r, r]
        for c in range(m):
            for r in range(m - 1, -1, -1):
                acc = gwork[t, r, c]
                for u in range(r + 1, m):
                    acc -= fwork[u, r] * gwork[t, u, c]
                gwork[t, r, c] = acc / fwork[r, r]
        tr = 0.0
        for a in range(m):
            tr += gwork[t, a, a]
        grad[ids[t]] -= tr

    for ti in range(k):
        gi = ids[ti]
        for tj in range(ti, k):
            gj = ids[tj]
            v = 0.0
            for a in range(m):
                for b in range(m):
                    v += gwork[ti, a, b] * gwork[tj, b, a]
            hess[gi, gj] += v
            if gi != gj:
                hess[gj, gi] += v

    return 2.0 * logdet
