# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cyclic-Jacobi kernel for dense complex Hermitian matrices.

This is the hot inner loop of the package: every fidelity, matrix square
root and interior-point iteration funnels through it.  The numpy twin in
``_kernels_py`` applies the identical rotation sequence; both expose the
same ``jacobi_sweeps`` entry point and the active one is chosen by
``cohdist.backend`` at import time.
"""

from libc.math cimport sqrt

import numpy as np


cdef double _offdiag_frobenius(double complex[:, ::1] a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    cdef double complex x
    for i in range(n):
        for j in range(n):
            if i != j:
                x = a[i, j]
                acc += x.real * x.real + x.imag * x.imag
    return sqrt(acc)


def jacobi_sweeps(double complex[:, ::1] a, double complex[:, ::1] v,
                  double tol, int max_sweeps):
    """Diagonalize Hermitian ``a`` in place by cyclic Jacobi rotations.

    Accumulates the rotations into ``v`` (so columns of ``v`` end up as
    eigenvectors).  Returns ``(sweeps_used, final_offdiag_frobenius)``.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, i, sweep
    cdef double off, r, tau, t, c, s, app, aqq
    cdef double complex apq, phase, cphase, xp, xq
    cdef int used = 0

    if n <= 1:
        return 0, 0.0

    with nogil:
        off = _offdiag_frobenius(a, n)
        for sweep in range(max_sweeps):
            if off <= tol:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    r = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                    if r <= 1e-300:
                        continue
                    app = a[p, p].real
                    aqq = a[q, q].real
                    phase = apq / r
                    cphase = phase.conjugate()
                    tau = (aqq - app) / (2.0 * r)
                    if tau >= 0.0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    # column update: A <- A U with the plane rotation U
                    for i in range(n):
                        xp = a[i, p]
                        xq = a[i, q]
                        a[i, p] = c * xp - s * cphase * xq
                        a[i, q] = s * xp + c * cphase * xq
                    # row update: A <- U^dag A
                    for i in range(n):
                        xp = a[p, i]
                        xq = a[q, i]
                        a[p, i] = c * xp - s * phase * xq
                        a[q, i] = s * xp + c * phase * xq
                    # the pivot pair is annihilated analytically
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    a[p, p] = a[p, p].real
                    a[q, q] = a[q, q].real
                    for i in range(n):
                        xp = v[i, p]
                        xq = v[i, q]
                        v[i, p] = c * xp - s * cphase * xq
                        v[i, q] = s * xp + c * cphase * xq
            used = sweep + 1
            off = _offdiag_frobenius(a, n)

    return used, off
