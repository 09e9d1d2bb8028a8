"""Small dense linear-algebra kernel used by the solver and diagnostics.

Thin, contract-checked wrappers over LAPACK routines: LU with partial
pivoting (plus explicit singularity detection), symmetric eigenvalues, and
SVD-based null-space bases.  Everything here is deterministic for fixed
input.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SingularMatrixError(RuntimeError):
    """Linear system flagged as (numerically) singular; expected control flow."""


@dataclass(frozen=True)
class LuFactorization:
    lu: np.ndarray   # packed L\U factors
    piv: np.ndarray  # LAPACK pivot indices
    min_pivot: float
    singular: bool


def lu_factor(A: np.ndarray, pivot_tol: float = 1e-12) -> LuFactorization:
    """LU with partial pivoting; flags singularity on tiny pivots.

    A pivot counts as tiny when its magnitude is <= pivot_tol times the
    largest absolute entry of A.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    diag = np.abs(np.diag(lu))
    min_pivot = float(diag.min()) if diag.size else 0.0
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    singular = scale == 0.0 or min_pivot <= pivot_tol * scale
    return LuFactorization(lu=lu, piv=piv, min_pivot=min_pivot, singular=singular)


def lu_solve(A: np.ndarray, b: np.ndarray, pivot_tol: float = 1e-12) -> np.ndarray:
    """Solve A d = b; raises SingularMatrixError instead of returning garbage.

    Besides the pivot test, the multiplied-back residual must satisfy
    ||A d - b|| <= 1e-8 * max(1, ||b||); severely ill-conditioned systems
    are therefore also reported as singular.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(A.shape[0])
    fac = lu_factor(A, pivot_tol)
    if fac.singular:
        raise SingularMatrixError(f"pivot {fac.min_pivot:.3e} below threshold")
    d = scipy.linalg.lu_solve((fac.lu, fac.piv), b, check_finite=False)
    if not np.all(np.isfinite(d)):
        raise SingularMatrixError("non-finite solution")
    resid = float(np.linalg.norm(A @ d - b))
    if resid > 1e-8 * max(1.0, float(np.linalg.norm(b))):
        raise SingularMatrixError(f"solve residual {resid:.3e} too large")
    return d


def sym_eig_min(A: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix (symmetrized internally)."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        raise ValueError("sym_eig_min needs a non-empty matrix")
    S = 0.5 * (A + A.T)
    return float(np.linalg.eigvalsh(S)[0])


def null_space_basis(A: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal columns spanning {d : A d = 0}.

    The numerical rank counts singular values above rank_tol times the
    largest one, so a caller-controlled tolerance decides rank deterministically.
    Returns a (k, k - rank) array for an r x k input.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    k = A.shape[1]
    if A.shape[0] == 0 or k == 0:
        return np.eye(k)
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
    return vt[rank:].T.copy()
