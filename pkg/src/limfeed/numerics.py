"""Small dense complex linear algebra used throughout the package.

Every matrix here is at most 8x8, so LAPACK (through ``numpy.linalg``) is
used directly; the wrappers add input validation, a fixed non-increasing
ordering and the deterministic null-space completion the rotation map needs.

Randomness always comes from a caller-supplied :class:`numpy.random.Generator`
(PCG64 by default, see :func:`make_rng`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyNullSpaceError, InvalidInputError

__all__ = [
    "HermEig",
    "Svd",
    "as_matrix",
    "herm_eig",
    "svd",
    "null_basis",
    "complete_basis",
    "haar_semiunitary",
    "is_semiunitary",
    "make_rng",
]

HERMITIAN_TOL = 1e-9


@dataclass(frozen=True)
class HermEig:
    """Eigen-decomposition ``a = vectors @ diag(values) @ vectors^H``."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


@dataclass(frozen=True)
class Svd:
    """Thin singular value decomposition ``a = left @ diag(singulars) @ right^H``."""

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singulars) @ self.right.conj().T


def make_rng(seed: int | np.random.SeedSequence | None = None) -> np.random.Generator:
    """Return a PCG64 generator; an explicit seed makes draws bit-reproducible."""
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array or raise."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def herm_eig(a) -> HermEig:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues non-increasing.

    The input is symmetrized as ``(a + a^H)/2`` after checking it is Hermitian
    to a relative Frobenius tolerance of 1e-9. For repeated eigenvalues any
    orthonormal basis of the eigenspace may be returned.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.linalg.norm(a), 1.0)
    if np.linalg.norm(a - a.conj().T) > HERMITIAN_TOL * scale:
        raise InvalidInputError("matrix is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    values, vectors = np.linalg.eigh(a)
    return HermEig(values=values[::-1].copy(), vectors=vectors[:, ::-1].copy())


def svd(a) -> Svd:
    """Thin SVD with singular values sorted non-increasing."""
    a = as_matrix(a)
    left, s, rh = np.linalg.svd(a, full_matrices=False)
    return Svd(left=left, singulars=s, right=rh.conj().T)


def complete_basis(v: np.ndarray, count: int) -> np.ndarray:
    """Append ``count`` orthonormal columns orthogonal to the columns of ``v``.

    Gram-Schmidt against the canonical vectors with pivoting: at every step the
    canonical vector with the largest residual is taken. ``v`` must have
    orthonormal columns (it may have zero columns). Deterministic given ``v``.
    """
    n = v.shape[0]
    basis = v.astype(complex, copy=True)
    new = []
    for _ in range(count):
        residual = np.eye(n, dtype=complex)
        for _ in range(2):  # second pass restores orthogonality to machine precision
            residual = residual - basis @ (basis.conj().T @ residual)
        norms = np.linalg.norm(residual, axis=0)
        k = int(np.argmax(norms))
        col = residual[:, k] / norms[k]
        col = col - basis @ (basis.conj().T @ col)
        col /= np.linalg.norm(col)
        new.append(col)
        basis = np.column_stack([basis, col])
    if not new:
        return np.zeros((n, 0), dtype=complex)
    return np.column_stack(new)


def null_basis(v) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(v)``.

    ``v`` is an ``n x m`` semiunitary matrix with ``m < n``; the result is
    ``n x (n - m)`` and ``[v, null_basis(v)]`` is unitary.
    """
    v = as_matrix(v, "v")
    n, m = v.shape
    if m >= n:
        raise EmptyNullSpaceError(f"a {n}x{m} semiunitary matrix has an empty null space")
    return complete_basis(v, n - m)


def is_semiunitary(v, tol: float = 1e-9) -> bool:
    v = np.asarray(v)
    m = v.shape[-1]
    gram = np.swapaxes(v.conj(), -1, -2) @ v
    return bool(np.max(np.abs(gram - np.eye(m))) <= tol)


def haar_semiunitary(rng: np.random.Generator, n: int, m: int, size: int | None = None) -> np.ndarray:
    """Draw Haar-distributed ``n x m`` semiunitary matrices.

    QR of a complex Gaussian matrix with the phases of ``diag(R)`` moved into
    ``Q``. With ``size`` a stack of shape ``(size, n, m)`` is returned.
    """
    if not (1 <= m <= n):
        raise InvalidInputError(f"need 1 <= m <= n, got n={n}, m={m}")
    shape = (n, m) if size is None else (size, n, m)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return q * phase[..., None, :]
