"""Small dense linear algebra: LU solves, rank-revealing nullspaces and
minimal-norm solves of singular but consistent systems.

Matrices here are tiny (characteristic matrices, stacked level systems), so
everything is plain numpy/scipy on ``float64`` arrays.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import Inconsistent, SingularMatrix

RANK_TOL = 1e-9


@dataclass(frozen=True)
class NullspaceData:
    """Rank and orthonormal bases of ``N(A)`` and ``N(A')``."""

    rank: int
    right_basis: list = field(default_factory=list)
    left_basis: list = field(default_factory=list)
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def right(self) -> np.ndarray:
        """Right basis as columns of an ``(cols, k)`` array."""
        if not self.right_basis:
            return np.zeros((0, 0))
        return np.column_stack(self.right_basis)

    @property
    def left(self) -> np.ndarray:
        if not self.left_basis:
            return np.zeros((0, 0))
        return np.column_stack(self.left_basis)


def _as_matrix(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def lu_solve(A, b, tol: float = 1e-13) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting.

    Raises :class:`SingularMatrix` when a pivot is below ``tol`` times the
    largest entry of ``A``.
    """
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"lu_solve needs a square matrix, got {A.shape}")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrix
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) <= tol * scale:
        raise SingularMatrix(f"pivot {np.min(pivots):.3e} below tolerance")
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def rank_nullspace(A, tol: float = RANK_TOL, scale: float | None = None) -> NullspaceData:
    """Numerical rank of ``A`` with orthonormal bases of both nullspaces.

    A singular value counts as zero when it is at most ``tol * scale``;
    ``scale`` defaults to the largest singular value, so the test is relative.
    A zero matrix has rank 0.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = _as_matrix(A)
    rows, cols = A.shape
    U, sv, Vt = np.linalg.svd(A)
    if scale is None:
        scale = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > tol * scale)) if scale > 0 else 0
    right = [Vt[k].copy() for k in range(rank, cols)]
    left = [U[:, k].copy() for k in range(rank, rows)]
    return NullspaceData(rank, right, left, sv)


def solve_singular_consistent(A, b, ns: NullspaceData | None = None,
                              tol: float = 1e-8):
    """Minimal-norm solution of a consistent singular system.

    Returns ``(particular, homogeneous_basis)``. The particular solution is
    orthogonal to ``N(A)``; adding any combination of the basis leaves
    ``A x`` unchanged. Raises :class:`Inconsistent` if ``b`` has a component
    along the left nullspace larger than ``tol * |b|``.
    """
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    if ns is None:
        ns = rank_nullspace(A)
    bnorm = np.linalg.norm(b)
    for psi in ns.left_basis:
        proj = float(np.dot(b, psi))
        if abs(proj) > tol * max(bnorm, np.finfo(float).tiny):
            raise Inconsistent(f"(b, psi) = {proj:.3e} violates solvability")
    U, sv, Vt = np.linalg.svd(A)
    r = ns.rank
    if r == 0:
        x = np.zeros(A.shape[1])
    else:
        x = Vt[:r].T @ ((U[:, :r].T @ b) / sv[:r])
    return x, [v.copy() for v in ns.right_basis]
