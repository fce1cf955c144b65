"""Numpy fallback for the compiled Jacobi kernel.

Applies the exact rotation sequence of ``_kernels.pyx`` with vectorized
row/column updates, so results agree with the compiled core to rounding.
Used automatically when the extension is not built (see ``cohdist.backend``).
"""

import numpy as np


def _offdiag_frobenius(a):
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_sweeps(a, v, tol, max_sweeps):
    """Diagonalize Hermitian ``a`` in place by cyclic Jacobi rotations.

    Same contract as the compiled kernel: accumulates rotations into ``v``
    and returns ``(sweeps_used, final_offdiag_frobenius)``.
    """
    n = a.shape[0]
    if n <= 1:
        return 0, 0.0
    used = 0
    off = _offdiag_frobenius(a)
    for sweep in range(max_sweeps):
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                phase = apq / r
                cphase = np.conj(phase)
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                xp = a[:, p].copy()
                xq = a[:, q].copy()
                a[:, p] = c * xp - s * cphase * xq
                a[:, q] = s * xp + c * cphase * xq

                xp = a[p, :].copy()
                xq = a[q, :].copy()
                a[p, :] = c * xp - s * phase * xq
                a[q, :] = s * xp + c * phase * xq

                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real

                xp = v[:, p].copy()
                xq = v[:, q].copy()
                v[:, p] = c * xp - s * cphase * xq
                v[:, q] = s * xp + c * cphase * xq
        used = sweep + 1
        off = _offdiag_frobenius(a)
    return used, off
