"""Characteristic matrix ``B(j)`` and classification of integer points.

``B(j) = K_n(0,0) + sum_i a_i^(1+j) (K_i(0,0) - K_{i+1}(0,0))`` where the
``a_i = alpha_i'(0)`` are the curve slopes. A point ``j`` is regular when
``B(j)`` is invertible, simple singular when the pairing
``[(B'(j) phi_i, psi_l)]`` between right and left null vectors is
nonsingular, and ``(k+1)``-multiple singular when ``B^(1)..B^(k)`` vanish and
the pairing with ``B^(k+1)`` is nonsingular.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnclassifiablePoint
from .linalg import RANK_TOL, NullspaceData, rank_nullspace
from .problem import TaylorData

MAX_MULTIPLICITY_SEARCH = 25

REGULAR = "regular"
SIMPLE = "simple_singular"
MULTIPLE = "multiple_singular"


def _jumps(td: TaylorData):
    return [td.k00(i) - td.k00(i + 1) for i in range(td.n - 1)]


def b_matrix(td: TaylorData, j) -> np.ndarray:
    """``B(j)``; ``j`` may be any real number."""
    B = td.k00(td.n - 1).copy()
    for a, dK in zip(td.slopes, _jumps(td)):
        B += a ** (1 + j) * dK
    return B


def b_derivative(td: TaylorData, j, k: int) -> np.ndarray:
    """``d^k B / dj^k = sum_i a_i^(1+j) (ln a_i)^k (K_i(0,0) - K_{i+1}(0,0))``."""
    if k < 1:
        raise ValueError("derivative order must be >= 1")
    D = np.zeros((td.m, td.m))
    for a, dK in zip(td.slopes, _jumps(td)):
        D += a ** (1 + j) * np.log(a) ** k * dK
    return D


def data_scale(td: TaylorData) -> float:
    """Magnitude of the data entering ``B``; zero tests are relative to it."""
    s = np.linalg.norm(td.k00(td.n - 1)) + sum(np.linalg.norm(d) for d in _jumps(td))
    return float(s) if s > 0 else 1.0


@dataclass
class PointReport:
    j: int
    B: np.ndarray
    det: float
    rank: int
    nullspace: NullspaceData
    classification: str
    multiplicity: int
    pairing_order: int = 0

    @property
    def null_dim(self):
        return self.B.shape[0] - self.rank

    def to_json(self):
        return {"j": self.j, "det": self.det, "rank": self.rank,
                "class": self.classification, "multiplicity": self.multiplicity}


@dataclass
class CharacteristicReport:
    m: int
    points: list = field(default_factory=list)

    def __getitem__(self, j) -> PointReport:
        return self.points[j]

    @property
    def singular_points(self):
        return [pt for pt in self.points if pt.classification != REGULAR]

    @property
    def nu(self):
        return len(self.singular_points)

    @property
    def param_count(self):
        return sum((self.m - pt.rank) * pt.multiplicity for pt in self.points)

    def param_count_upto(self, j):
        return sum((self.m - pt.rank) * pt.multiplicity for pt in self.points[:j + 1])

    def to_json(self):
        return {"points": [pt.to_json() for pt in self.points],
                "singular_points": self.nu, "param_count": self.param_count}


def pairing_matrix(D: np.ndarray, ns: NullspaceData) -> np.ndarray:
    """``G[l, i] = (D phi_i, psi_l)``."""
    return ns.left.T @ D @ ns.right


def classify_point(td: TaylorData, j: int, tol: float = RANK_TOL) -> PointReport:
    B = b_matrix(td, j)
    scale = data_scale(td)
    ns = rank_nullspace(B, tol, scale=max(scale, np.linalg.norm(B, 2)))
    det = float(np.linalg.det(B))
    if ns.rank == td.m:
        return PointReport(j, B, det, ns.rank, ns, REGULAR, 0)
    r = td.m - ns.rank
    for k in range(1, MAX_MULTIPLICITY_SEARCH + 1):
        D = b_derivative(td, j, k)
        dnorm = np.linalg.norm(D)
        G = pairing_matrix(D, ns)
        if rank_nullspace(G, tol, scale=max(dnorm, tol * scale)).rank == r \
                and dnorm > tol * scale:
            if k == 1:
                return PointReport(j, B, det, ns.rank, ns, SIMPLE, 1, 1)
            return PointReport(j, B, det, ns.rank, ns, MULTIPLE, k, k)
        if dnorm > tol * scale:
            raise UnclassifiablePoint(
                f"j={j}: B^({k})(j) is nonzero but its null-space pairing is singular")
    raise UnclassifiablePoint(
        f"j={j}: no nondegenerate derivative up to order {MAX_MULTIPLICITY_SEARCH}")


def classify(td: TaylorData, jmax: int, tol: float = RANK_TOL) -> CharacteristicReport:
    """Classify every integer ``j = 0..jmax``."""
    if jmax < 0:
        raise ValueError("jmax must be nonnegative")
    rep = CharacteristicReport(td.m)
    for j in range(jmax + 1):
        rep.points.append(classify_point(td, j, tol))
    return rep
