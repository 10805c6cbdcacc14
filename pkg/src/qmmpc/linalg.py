"""Dense real symmetric-matrix utilities.

Definiteness checks, eigenvalue bounds, symmetric square roots, and the
2x2-block Schur reduction used throughout the LMI machinery. Strict matrix
inequalities "> 0" are realized as lambda_min > margin; callers scale the
margin by ``1 + norm_inf(M)`` where conditioning matters.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotPsd, SingularBlock

# Module-wide default strictness margin for "> 0" checks.
DEFAULT_MARGIN = 1e-9


def norm_inf(mat) -> float:
    """Largest absolute entry."""
    mat = np.asarray(mat, dtype=float)
    return float(np.max(np.abs(mat))) if mat.size else 0.0


def symmetrize(mat) -> np.ndarray:
    """(M + M^T)/2; absorbs floating-point asymmetry of computed products.

    The result is exactly symmetric bitwise (addition is commutative).
    """
    mat = np.asarray(mat, dtype=float)
    return (mat + mat.T) / 2.0


def require_symmetric(mat, name: str = "matrix") -> np.ndarray:
    """Validate that ``mat`` is square and exactly symmetric."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be square of order >= 1, got shape {mat.shape}")
    if not np.array_equal(mat, mat.T):
        raise ValueError(f"{name} must be exactly symmetric; symmetrize() first")
    return mat


def min_eigenvalue(mat) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    mat = require_symmetric(mat)
    return float(np.linalg.eigvalsh(mat)[0])


def is_positive_definite(mat, margin: float = 0.0) -> bool:
    """True iff lambda_min(mat) > margin."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    return min_eigenvalue(mat) > margin


def sym_sqrt(mat) -> np.ndarray:
    """Symmetric PSD square root S with S @ S ~= mat.

    Eigenvalues below zero but within ``1e-10 * (1 + norm_inf(mat))`` are
    clamped to zero; anything more negative raises NotPsd.
    """
    mat = require_symmetric(mat)
    lam, vec = np.linalg.eigh(mat)
    tol = 1e-10 * (1.0 + norm_inf(mat))
    if lam[0] < -tol:
        raise NotPsd(f"matrix is not PSD: min eigenvalue {lam[0]:.6e} < -{tol:.1e}")
    lam = np.clip(lam, 0.0, None)
    return symmetrize((vec * np.sqrt(lam)) @ vec.T)


def inv_sym(mat):
    """Symmetric inverse of a PD matrix plus its condition number.

    Returns (inverse, cond) where cond = lambda_max / lambda_min.
    """
    mat = require_symmetric(mat)
    lam, vec = np.linalg.eigh(mat)
    if lam[0] <= 0.0:
        raise NotPsd(f"matrix is not PD: min eigenvalue {lam[0]:.6e}")
    inv = symmetrize((vec / lam) @ vec.T)
    return inv, float(lam[-1] / lam[0])


@dataclass(frozen=True)
class BlockSym2x2:
    """Symmetric block matrix [[A, B^T], [B, C]] with A (n x n), C (m x m), B (m x n)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        a = require_symmetric(self.A, "A")
        c = require_symmetric(self.C, "C")
        b = np.asarray(self.B, dtype=float)
        if b.ndim != 2 or b.shape != (c.shape[0], a.shape[0]):
            raise DimensionMismatch(
                f"B must have shape ({c.shape[0]}, {a.shape[0]}), got {b.shape}"
            )
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)

    def assembled(self) -> np.ndarray:
        """The full symmetric matrix of order n + m."""
        return np.block([[self.A, self.B.T], [self.B, self.C]])


def schur_complement(blk: BlockSym2x2) -> np.ndarray:
    """A - B^T C^-1 B. Raises SingularBlock when C cannot be inverted."""
    lam_c = np.linalg.eigvalsh(blk.C)
    if lam_c[0] <= 1e-12 * (1.0 + norm_inf(blk.C)):
        raise SingularBlock("C block is singular at working precision")
    return symmetrize(blk.A - blk.B.T @ np.linalg.solve(blk.C, blk.B))


def schur_psd(blk: BlockSym2x2, margin: float = 0.0) -> bool:
    """Definiteness of the assembled block via the Schur reduction.

    True iff C > margin*I and A - B^T C^-1 B > margin*I. When C is too close
    to singular for a reliable reduction, falls back to the full-matrix
    eigenvalue test instead of failing.
    """
    if min_eigenvalue(blk.C) <= margin:
        return False
    try:
        comp = schur_complement(blk)
    except SingularBlock:
        return is_positive_definite(blk.assembled(), margin)
    return is_positive_definite(comp, margin)
