"""Dense complex-Hermitian linear algebra primitives.

All higher-level quantities in the package reduce to the handful of
operations here: dephasing, Hermitian eigendecomposition (cyclic Jacobi,
via the selected kernel backend), PSD square roots, Uhlmann fidelity,
tensor powers, Shannon entropy and the diagonal-root vector.

Matrices and vectors are plain ``numpy`` arrays (complex128).  Validators
raise the typed errors from :mod:`cohdist.errors`; numerical clamping
windows come from :mod:`cohdist.config`.
"""

import numpy as np

from . import backend
from .config import DEFAULT_CAPS, DEFAULT_TOLS, Tolerances
from .errors import (
    CapExceeded,
    DimMismatch,
    NonHermitian,
    NotDistribution,
    NotPSD,
    NumericalFailure,
)

__all__ = [
    "dephase",
    "delta_vector",
    "eig_hermitian",
    "fidelity",
    "hermitian_defect",
    "maximally_coherent",
    "random_density",
    "random_statevector",
    "require_density",
    "require_statevector",
    "shannon_entropy",
    "sqrtm_psd",
    "tensor_power",
]


def _as_complex_matrix(a) -> np.ndarray:
    mat = np.asarray(a, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {mat.shape}")
    return mat


def hermitian_defect(a) -> float:
    """Largest entrywise deviation |a_ij - conj(a_ji)|."""
    mat = _as_complex_matrix(a)
    return float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0


def require_density(rho, *, check_psd: bool = True,
                    tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Validate a density matrix and return it as complex128.

    Checks Hermiticity entrywise, unit trace, and (optionally, since it
    costs an eigendecomposition) positive semidefiniteness.
    """
    mat = _as_complex_matrix(rho)
    defect = hermitian_defect(mat)
    if defect > tols.hermitian_entry:
        raise NonHermitian(f"Hermitian defect {defect:.3e} exceeds {tols.hermitian_entry:.0e}")
    tr = np.trace(mat)
    if abs(tr - 1.0) > tols.trace_one:
        raise NotDistribution(f"trace {tr} is not 1 within {tols.trace_one:.0e}")
    if check_psd:
        w, _ = eig_hermitian(mat, tols=tols)
        if w[0] < tols.psd_eig_floor:
            raise NotPSD(f"minimum eigenvalue {w[0]:.3e} below {tols.psd_eig_floor:.0e}")
    return mat


def require_statevector(psi, *, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Validate a normalized state vector and return it as complex128."""
    vec = np.asarray(psi, dtype=np.complex128).ravel()
    if vec.size == 0:
        raise DimMismatch("empty state vector")
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1.0) > tols.unit_norm:
        raise NotDistribution(f"norm {nrm} is not 1 within {tols.unit_norm:.0e}")
    return vec


def dephase(rho) -> np.ndarray:
    """Zero all off-diagonal entries (the fully dephasing channel)."""
    mat = _as_complex_matrix(rho)
    return np.diag(np.diag(mat).real).astype(np.complex128)


def eig_hermitian(mat, *, tols: Tolerances = DEFAULT_TOLS):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and unitary ``v``
    such that ``mat = v @ diag(w) @ v.conj().T``.  No ordering guarantee
    among numerically equal eigenvalues.

    Raises
    ------
    NonHermitian
        if the entrywise symmetry defect exceeds ``tols.hermitian_op``.
    """
    a = _as_complex_matrix(mat)
    defect = hermitian_defect(a)
    if defect > tols.hermitian_op:
        raise NonHermitian(f"Hermitian defect {defect:.3e} exceeds {tols.hermitian_op:.0e}")
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0].real]), np.eye(1, dtype=np.complex128)

    work = np.ascontiguousarray(0.5 * (a + a.conj().T))
    vecs = np.eye(n, dtype=np.complex128)
    scale = max(1.0, float(np.linalg.norm(work)))
    sweeps, off = backend.jacobi_sweeps(
        work, vecs, tols.jacobi_off_frobenius * scale, tols.jacobi_max_sweeps
    )
    if off > tols.jacobi_off_frobenius * scale:
        raise NumericalFailure(
            f"Jacobi sweeps did not converge in {tols.jacobi_max_sweeps} sweeps "
            f"(off-diagonal norm {off:.3e})"
        )
    w = np.diag(work).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], vecs[:, order]


def sqrtm_psd(mat, *, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Hermitian PSD square root.

    Eigenvalues inside ``[tols.psd_eig_floor, 0)`` are clamped to zero;
    anything more negative raises ``NotPSD``.
    """
    w, v = eig_hermitian(mat, tols=tols)
    if w[0] < tols.psd_eig_floor:
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e} below {tols.psd_eig_floor:.0e}")
    root = np.sqrt(np.clip(w, 0.0, None))
    s = (v * root) @ v.conj().T
    return 0.5 * (s + s.conj().T)


def fidelity(rho, sigma, *, tols: Tolerances = DEFAULT_TOLS) -> float:
    """Squared Uhlmann fidelity ``||sqrt(rho) sqrt(sigma)||_1^2``.

    The trace norm is evaluated through the Hermitian product
    ``sqrt(rho) sigma sqrt(rho)``: its eigenvalues are the squared
    singular values of ``sqrt(rho) sqrt(sigma)``, so the trace norm is
    the sum of their square roots.  Tiny negative eigenvalues (above
    ``tols.psd_eig_floor``) are clamped to zero.
    """
    a = _as_complex_matrix(rho)
    b = _as_complex_matrix(sigma)
    if a.shape != b.shape:
        raise DimMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")
    ra = sqrtm_psd(a, tols=tols)
    prod = ra @ b @ ra
    w, _ = eig_hermitian(0.5 * (prod + prod.conj().T), tols=tols)
    # rounding noise below 1e-13 of the top eigenvalue is an exact zero of
    # the product; sqrt would otherwise amplify it to ~1e-7
    w[w < 1e-13 * max(float(w[-1]), 1e-30)] = 0.0
    val = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(val, 0.0), 1.0) if val <= 1.0 + 1e-9 else val


def tensor_power(rho, n: int, *, cap: int | None = None) -> np.ndarray:
    """n-fold Kronecker power of a matrix, capped at ``cap`` total dimension."""
    mat = _as_complex_matrix(rho)
    if n < 1 or int(n) != n:
        raise ValueError(f"copies must be a positive integer, got {n}")
    limit = DEFAULT_CAPS.tensor_dim if cap is None else cap
    if mat.shape[0] ** n > limit:
        raise CapExceeded(
            f"dim {mat.shape[0]}^{n} = {mat.shape[0] ** n} exceeds cap {limit}"
        )
    out = mat
    for _ in range(int(n) - 1):
        out = np.kron(out, mat)
    return out


def shannon_entropy(diagonal, *, tols: Tolerances = DEFAULT_TOLS) -> float:
    """Base-2 Shannon entropy of a probability vector; 0 log 0 = 0."""
    p = np.asarray(diagonal, dtype=float).ravel()
    if p.size == 0 or np.min(p) < -tols.distribution or abs(p.sum() - 1.0) > tols.distribution:
        raise NotDistribution(f"not a probability vector within {tols.distribution:.0e}")
    p = np.clip(p, 0.0, None)
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def delta_vector(rho) -> np.ndarray:
    """Entrywise square roots of the diagonal; real nonnegative, unit l2 norm."""
    mat = _as_complex_matrix(rho)
    d = np.clip(np.diag(mat).real, 0.0, None)
    return np.sqrt(d)


def maximally_coherent(m: int, dim: int | None = None) -> np.ndarray:
    """Uniform superposition of the first ``m`` basis states (dimension ``dim``)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    d = m if dim is None else dim
    if d < m:
        raise DimMismatch(f"dim {d} smaller than m {m}")
    vec = np.zeros(d, dtype=np.complex128)
    vec[:m] = 1.0 / np.sqrt(m)
    return vec


def random_statevector(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state vector."""
    g = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return g / np.linalg.norm(g)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a normalized Ginibre product G G^dag."""
    r = dim if rank is None else rank
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)
