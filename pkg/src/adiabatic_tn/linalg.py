"""Dense complex-matrix kernels shared by the rest of the package.

Every routine here works on explicit dense ``numpy`` arrays. The largest
matrices handled are two-site operators (at most 256 x 256), so no sparse
or iterative machinery is needed at this level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

__all__ = [
    "DecompositionError",
    "HermitianEigs",
    "NotHermitianError",
    "eigh",
    "hermitian_expm",
    "kernel_projector",
    "polar_decompose",
    "svd",
]

HERMITIAN_TOL = 1e-10
KERNEL_REL_TOL = 1e-10


class DecompositionError(RuntimeError):
    """A LAPACK decomposition failed to converge."""

    def __init__(self, routine: str, shape: tuple[int, ...]) -> None:
        super().__init__(f"{routine} did not converge for a matrix of shape {shape}")
        self.routine = routine
        self.shape = shape


class NotHermitianError(ValueError):
    """Input matrix deviates from Hermiticity beyond tolerance."""


@dataclass(frozen=True)
class HermitianEigs:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.complex128]

    def residual(self, m: NDArray) -> float:
        """Largest relative residual ``|A v - lambda v| / |A|`` over all pairs."""
        r = m @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        scale = max(np.linalg.norm(m, 2), 1.0)
        return float(np.max(np.linalg.norm(r, axis=0)) / scale)


def _check_finite(m: NDArray) -> NDArray:
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got an array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def svd(m: NDArray) -> tuple[NDArray, NDArray[np.float64], NDArray]:
    """Thin SVD ``m = U @ diag(s) @ Vh`` with ``s`` descending.

    Falls back from the divide-and-conquer driver to the QR-iteration
    driver when the former does not converge.

    Raises:
        DecompositionError: both drivers failed.
    """
    m = _check_finite(m)
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except np.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd", check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("svd", m.shape) from exc


def _hermitize(m: NDArray, tol: float = HERMITIAN_TOL) -> NDArray:
    m = _check_finite(m)
    if m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"matrix of shape {m.shape} is not square")
    dev = np.max(np.abs(m - m.conj().T), initial=0.0)
    scale = max(np.max(np.abs(m), initial=0.0), 1.0)
    if dev > tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian (max |m - m^H| = {dev:.3e})")
    return 0.5 * (m + m.conj().T)


def eigh(m: NDArray) -> HermitianEigs:
    """Eigen-decomposition of a Hermitian matrix.

    The input is symmetrised as ``(m + m^H) / 2`` before the solve.

    Raises:
        NotHermitianError: ``m`` is not Hermitian to within 1e-10 (relative).
        DecompositionError: the eigensolver did not converge.
    """
    h = _hermitize(m)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("eigh", h.shape) from exc
    return HermitianEigs(w, v)


def _is_psd(m: NDArray, tol: float = 1e-12) -> bool:
    scale = max(np.max(np.abs(m), initial=0.0), 1.0)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] >= -tol * scale)


def polar_decompose(q: NDArray) -> tuple[NDArray, NDArray]:
    """Right polar decomposition ``q = iso @ psd``.

    ``iso`` has orthonormal columns and ``psd`` is the positive square root
    of ``q^H q``. Requires at least as many rows as columns.
    """
    q = _check_finite(q)
    rows, cols = q.shape
    if rows < cols:
        raise ValueError(f"polar decomposition needs rows >= cols, got {q.shape}")
    if rows == cols and _is_psd(q):
        # the isometric factor is not unique on the kernel; pin it to 1
        return np.eye(rows, dtype=np.result_type(q, np.float64)), 0.5 * (q + q.conj().T)
    u, s, vh = svd(q)
    iso = u @ vh
    psd = (vh.conj().T * s) @ vh
    psd = 0.5 * (psd + psd.conj().T)
    return iso, psd


def kernel_projector(rho: NDArray, rel_tol: float = KERNEL_REL_TOL) -> NDArray:
    """Orthogonal projector onto the (numerical) kernel of a PSD matrix.

    Eigenvalues below ``rel_tol * lambda_max`` count as zero. The zero
    matrix has the whole space as kernel, so the identity is returned.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    eig = eigh(rho)
    w, v = eig.eigenvalues, eig.eigenvectors
    if w[0] < -1e-12 * max(1.0, abs(w[-1])):
        raise ValueError(f"matrix is not positive semidefinite (lambda_min = {w[0]:.3e})")
    if w[-1] <= 0.0:
        return np.eye(rho.shape[0], dtype=v.dtype)
    k = v[:, w < rel_tol * w[-1]]
    return k @ k.conj().T


def hermitian_expm(h: NDArray, dt: float) -> NDArray:
    """``exp(-1j * dt * h)`` for Hermitian ``h`` via its eigenbasis."""
    eig = eigh(h)
    v = eig.eigenvectors
    return (v * np.exp(-1j * dt * eig.eigenvalues)) @ v.conj().T
