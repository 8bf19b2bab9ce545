"""Dense linear algebra for the lifted operators ``X -> B X`` and ``X -> X C``.

Channel indices follow the 1-based ``[q] = {1, ..., q}`` convention at the
API surface; numpy indexing is 0-based internally.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import EnumerationLimit, InfeasibleInvariance, InvariantViolation, RankError

RANK_RTOL = 1e-10
RESIDUAL_RTOL = 1e-9
LATTICE_MAX_FREE = 20
MINOR_MAX_COMBINATIONS = 10**6


@dataclass(frozen=True)
class IndexSet:
    """A subset of the channel indices ``{1, ..., universe}``."""

    universe: int
    members: tuple[int, ...] = ()

    def __post_init__(self):
        members = tuple(int(i) for i in self.members)
        if self.universe < 0:
            raise ValueError("universe must be nonnegative")
        if any(b <= a for a, b in zip(members, members[1:])):
            raise ValueError(f"members must be strictly increasing, got {members}")
        if members and (members[0] < 1 or members[-1] > self.universe):
            raise ValueError(f"members {members} outside 1..{self.universe}")
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, universe: int, members) -> "IndexSet":
        """Build from any iterable of 1-based indices (order and repeats ignored)."""
        return cls(universe, tuple(sorted(set(int(i) for i in members))))

    @classmethod
    def full(cls, universe: int) -> "IndexSet":
        return cls(universe, tuple(range(1, universe + 1)))

    @property
    def zero_based(self) -> np.ndarray:
        return np.asarray(self.members, dtype=int) - 1

    def complement(self) -> "IndexSet":
        inside = set(self.members)
        return IndexSet(self.universe, tuple(i for i in range(1, self.universe + 1) if i not in inside))

    def issubset(self, other: "IndexSet") -> bool:
        return self.universe == other.universe and set(self.members) <= set(other.members)

    def union(self, extra) -> "IndexSet":
        return IndexSet.of(self.universe, set(self.members) | set(extra))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, item):
        return item in self.members

    def to_json(self) -> list[int]:
        return list(self.members)


@dataclass(frozen=True)
class LiftedSolution:
    """A solution of ``B X = A`` (side ``"left"``) or ``X C = A`` (side ``"right"``).

    ``support`` lists the rows (left) or columns (right) allowed to be nonzero.
    """

    hat_A: np.ndarray
    side: str
    support: IndexSet
    residual: float


def as_matrix(M, name="matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be two dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def matrix_to_json(M) -> dict:
    M = as_matrix(M)
    return {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "data": [float(v) for v in M.ravel()]}


def matrix_from_json(obj) -> np.ndarray:
    """Parse ``{"rows", "cols", "data"}`` or a plain nested list."""
    if isinstance(obj, dict):
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
        if rows * cols != len(data):
            raise ValueError(f"rows*cols = {rows * cols} but {len(data)} entries given")
        return as_matrix(np.asarray(data, dtype=float).reshape(rows, cols))
    return as_matrix(obj)


def numerical_rank(M, rtol=RANK_RTOL) -> int:
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def _require_full_rank(M, name):
    if numerical_rank(M) < min(M.shape):
        raise RankError(f"{name} is not full rank")


def projection_matrix(I: IndexSet) -> np.ndarray:
    """Diagonal 0/1 matrix with ones at the positions in ``I``."""
    P = np.zeros((I.universe, I.universe))
    idx = I.zero_based
    P[idx, idx] = 1.0
    return P


def k_subsets(universe: int, k: int) -> list[IndexSet]:
    """All ``k``-element subsets of ``{1..universe}`` in lexicographic order."""
    return [IndexSet(universe, c) for c in itertools.combinations(range(1, universe + 1), k)]


def lattice_supersets(I: IndexSet) -> list[IndexSet]:
    """Every superset of ``I`` inside its universe, ordered by size then lexicographically.

    Raises
    ------
    EnumerationLimit
        When more than ``2**20`` supersets exist; use :func:`sample_supersets`.
    """
    free = I.complement().members
    if len(free) > LATTICE_MAX_FREE:
        raise EnumerationLimit(
            f"{2 ** len(free)} supersets requested; sample with sample_supersets instead"
        )
    out = []
    for k in range(len(free) + 1):
        for extra in itertools.combinations(free, k):
            out.append(I.union(extra))
    return out


def sample_supersets(I: IndexSet, count: int, rng: np.random.Generator) -> list[IndexSet]:
    """Draw ``count`` supersets of ``I``, each free channel included with probability 1/2."""
    free = np.asarray(I.complement().members, dtype=int)
    out = []
    for _ in range(count):
        keep = free[rng.random(free.size) < 0.5]
        out.append(I.union(keep.tolist()))
    return out


def lifted_operator(M, side: str) -> np.ndarray:
    """Matrix of ``X -> M X`` (left) or ``X -> X M`` (right) acting on column-major ``vec(X)``.

    For an ``n x m`` matrix ``B`` the left lifting maps ``m x n`` matrices to
    ``n x n`` ones, so the result is ``n^2 x mn``.  For a ``q x n`` matrix ``C``
    the right lifting maps ``n x q`` matrices to ``n x n``, giving ``n^2 x nq``.
    """
    M = as_matrix(M)
    if side == "left":
        n = M.shape[0]
        return np.kron(np.eye(n), M)
    if side == "right":
        n = M.shape[1]
        return np.kron(M.T, np.eye(n))
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def nullspace_dimension(M, side: str) -> int:
    """Nullity of the lifted operator, found by rank counting on its explicit matrix."""
    M = as_matrix(M)
    _require_full_rank(M, "lifting matrix")
    L = lifted_operator(M, side)
    return L.shape[1] - numerical_rank(L)


def _check_residual(residual, A):
    bound = RESIDUAL_RTOL * max(1.0, float(np.linalg.norm(A)))
    if residual > bound:
        raise InvariantViolation(f"lifted solution residual {residual:.3e} exceeds {bound:.3e}")


def _gram_solve(G, rhs, what):
    if numerical_rank(G) < G.shape[0]:
        raise RankError(f"{what} is singular")
    return np.linalg.solve(G, rhs)


def solve_right(A, C) -> LiftedSolution:
    """Particular solution ``A (C^T C)^{-1} C^T`` of ``X C = A``."""
    A, C = as_matrix(A, "A"), as_matrix(C, "C")
    hat_A = A @ _gram_solve(C.T @ C, C.T, "C^T C")
    residual = float(np.linalg.norm(hat_A @ C - A))
    _check_residual(residual, A)
    return LiftedSolution(hat_A, "right", IndexSet.full(C.shape[0]), residual)


def solve_left(A, B) -> LiftedSolution:
    """Particular solution ``B^T (B B^T)^{-1} A`` of ``B X = A``."""
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    hat_A = B.T @ _gram_solve(B @ B.T, A, "B B^T")
    residual = float(np.linalg.norm(B @ hat_A - A))
    _check_residual(residual, A)
    return LiftedSolution(hat_A, "left", IndexSet.full(B.shape[1]), residual)


def solve_right_invariant(A, C, I: IndexSet) -> LiftedSolution:
    """Solution of ``X C = A`` whose columns outside ``I`` are exactly zero.

    The columns in ``I`` are ``A (C_I^T C_I)^{-1} C_I^T`` where ``C_I`` keeps the
    rows of ``C`` indexed by ``I``; hence ``X P_I = X`` holds bit for bit.
    """
    A, C = as_matrix(A, "A"), as_matrix(C, "C")
    n = C.shape[1]
    if I.universe != C.shape[0]:
        raise ValueError(f"index set universe {I.universe} does not match q = {C.shape[0]}")
    if len(I) < n:
        raise InfeasibleInvariance(f"invariance infeasible: |I| = {len(I)} < n = {n}")
    idx = I.zero_based
    C_I = C[idx, :]
    if numerical_rank(C_I) < n:
        raise InfeasibleInvariance(f"invariance infeasible: rows {I.to_json()} of C are rank deficient")
    hat_A = np.zeros((n, C.shape[0]))
    hat_A[:, idx] = A @ np.linalg.solve(C_I.T @ C_I, C_I.T)
    residual = float(np.linalg.norm(hat_A @ C - A))
    _check_residual(residual, A)
    return LiftedSolution(hat_A, "right", I, residual)


def solve_left_invariant(A, B, I: IndexSet) -> LiftedSolution:
    """Solution of ``B X = A`` whose rows outside ``I`` are exactly zero."""
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    n = B.shape[0]
    if I.universe != B.shape[1]:
        raise ValueError(f"index set universe {I.universe} does not match m = {B.shape[1]}")
    if len(I) < n:
        raise InfeasibleInvariance(f"invariance infeasible: |I| = {len(I)} < n = {n}")
    idx = I.zero_based
    B_I = B[:, idx]
    if numerical_rank(B_I) < n:
        raise InfeasibleInvariance(f"invariance infeasible: columns {I.to_json()} of B are rank deficient")
    hat_A = np.zeros((B.shape[1], n))
    hat_A[idx, :] = B_I.T @ np.linalg.solve(B_I @ B_I.T, A)
    residual = float(np.linalg.norm(B @ hat_A - A))
    _check_residual(residual, A)
    return LiftedSolution(hat_A, "left", I, residual)


@dataclass(frozen=True)
class MinorReport:
    ok: bool
    worst_det: float
    worst_set: IndexSet


def _n_choose_k_iter(long: int, n: int) -> Iterator[tuple[int, ...]]:
    return itertools.combinations(range(long), n)


def all_n_minors_nonzero(M, tol: float = 1e-9) -> MinorReport:
    """Check that every maximal ``n x n`` minor of a ``q x n`` or ``n x m`` matrix exceeds ``tol``.

    Rows are selected for tall matrices and columns for wide ones.  The
    returned report names the minor of smallest magnitude (1-based indices).
    """
    M = as_matrix(M)
    tall = M.shape[0] >= M.shape[1]
    W = M if tall else M.T
    long, n = W.shape
    total = math.comb(long, n)
    if total > MINOR_MAX_COMBINATIONS:
        raise EnumerationLimit(f"{total} minors exceeds the limit of {MINOR_MAX_COMBINATIONS}")
    combos = np.array(list(_n_choose_k_iter(long, n)), dtype=int).reshape(total, n)
    dets = np.abs(np.linalg.det(W[combos]))
    k = int(np.argmin(dets))
    worst = IndexSet(long, tuple(int(i) + 1 for i in combos[k]))
    return MinorReport(bool(np.all(dets > tol)), float(dets[k]), worst)
