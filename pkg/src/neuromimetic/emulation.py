"""Quantized emulation of a linear vector field on the unit sphere.

A target flow ``x' = H x`` sampled at interval ``h`` is approximated by one
quantized step ``x0 + h B u``.  The selection of ``u`` per point ``x0`` is
made by an exhaustive oracle or by the multiplicative weight iteration in
:func:`iterate_weights`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .alphabet import AlphabetEntry, nonzero_entries
from .errors import DegenerateScores, InvariantViolation
from .linalg import as_matrix, numerical_rank

TIE_ATOL = 1e-9
TIE_GAIN_RTOL = 1e-7
NORM_LOSS_EPS = 1e-9


@dataclass
class EmulationConfig:
    """Target field ``H``, input matrix ``B`` and metric settings.

    ``loss_kind`` is ``"norm_diff"`` (distance between target and quantized
    step, minimized) or ``"composite"`` (inner product minus weighted norm
    mismatch, maximized).  ``target_kind`` is ``"first_order"`` for
    ``(I + H h) x0`` or ``"exact"`` for ``expm(H h) x0``.  With
    ``scale_input_by_h`` false the quantized step is ``x0 + B u``.
    """

    H: np.ndarray
    B: np.ndarray
    h: float = 0.1
    wt: float = 1.0
    loss_kind: str = "norm_diff"
    target_kind: str = "first_order"
    scale_input_by_h: bool = True

    def __post_init__(self):
        self.H = as_matrix(self.H, "H")
        self.B = as_matrix(self.B, "B")
        n = self.H.shape[0]
        if self.H.shape != (n, n) or self.B.shape[0] != n:
            raise ValueError(f"H must be n x n and B n x m, got {self.H.shape} and {self.B.shape}")
        if not self.h > 0:
            raise ValueError("sampling interval h must be positive")
        if self.wt < 0:
            raise ValueError("weight wt must be nonnegative")
        if self.loss_kind not in ("norm_diff", "composite"):
            raise ValueError(f"unknown loss_kind {self.loss_kind!r}")
        if self.target_kind not in ("first_order", "exact"):
            raise ValueError(f"unknown target_kind {self.target_kind!r}")

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def input_scale(self) -> float:
        return self.h if self.scale_input_by_h else 1.0

    def propagator(self) -> np.ndarray:
        if self.target_kind == "exact":
            return scipy.linalg.expm(self.H * self.h)
        return np.eye(self.n) + self.H * self.h


def _unit(x0):
    x0 = np.asarray(x0, dtype=float)
    if abs(np.linalg.norm(x0) - 1.0) > 1e-9:
        raise ValueError(f"x0 must be a unit vector, |x0| = {np.linalg.norm(x0)}")
    return x0


def target_field(cfg: EmulationConfig, x0) -> np.ndarray:
    return cfg.propagator() @ _unit(x0)


def composite_score(cfg: EmulationConfig, x0, u) -> float:
    """``<H h x0, h B u> - wt * | |H h x0| - |h B u| |``; larger is better."""
    x0 = _unit(x0)
    a = cfg.H @ x0 * cfg.h
    b = cfg.B @ np.asarray(u, dtype=float) * cfg.h
    return float(a @ b - cfg.wt * abs(np.linalg.norm(a) - np.linalg.norm(b)))


def norm_loss(cfg: EmulationConfig, x0, u) -> float:
    """Distance between the target step and the quantized step ``x0 + h B u``."""
    x0 = _unit(x0)
    step = x0 + cfg.input_scale * (cfg.B @ np.asarray(u, dtype=float))
    return float(np.linalg.norm(target_field(cfg, x0) - step))


def objective_matrix(cfg: EmulationConfig, X, D) -> np.ndarray:
    """Loss of every direction ``D[k]`` at every point ``X[s]``, as an ``(S, K)`` array.

    For the composite metric the returned value is the negated score, so the
    oracle always minimizes.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if cfg.loss_kind == "norm_diff":
        motion = X @ cfg.propagator().T - X
        diff = motion[:, None, :] - cfg.input_scale * D[None, :, :]
        return np.linalg.norm(diff, axis=2)
    a = X @ cfg.H.T * cfg.h
    b = D * cfg.h
    score = a @ b.T - cfg.wt * np.abs(
        np.linalg.norm(a, axis=1)[:, None] - np.linalg.norm(b, axis=1)[None, :]
    )
    return -score


def candidate_entries(alphabet: Sequence[AlphabetEntry], H) -> list[AlphabetEntry]:
    """Drop the zero vector when ``H x`` never vanishes on the sphere (``H`` nonsingular)."""
    H = as_matrix(H)
    if numerical_rank(H) == H.shape[0]:
        return nonzero_entries(alphabet)
    return list(alphabet)


def directions_of(entries: Sequence[AlphabetEntry]) -> np.ndarray:
    return np.array([e.direction for e in entries], dtype=float)


@dataclass
class Selection:
    """Optimal alphabet entries at one point, ties included."""

    entries: list
    value: float

    @property
    def directions(self) -> list[tuple]:
        return [e.direction for e in self.entries]

    @property
    def patterns(self) -> list[tuple]:
        return [u for e in self.entries for u in e.preimages]

    @property
    def canonical_pattern(self) -> tuple:
        return self.entries[0].canonical_pattern


def tie_indices(losses, atol: float = TIE_ATOL) -> np.ndarray:
    losses = np.asarray(losses)
    return np.flatnonzero(losses <= losses.min() + atol)


def brute_force_select(cfg: EmulationConfig, x0, alphabet: Sequence[AlphabetEntry]) -> Selection:
    """Exhaustive minimization of the loss over the alphabet entries."""
    if not alphabet:
        raise ValueError("alphabet is empty")
    x0 = _unit(x0)
    losses = objective_matrix(cfg, x0, directions_of(alphabet))[0]
    best = tie_indices(losses)
    return Selection([alphabet[k] for k in best], float(losses.min()))


# ---------------------------------------------------------------------------
# Iterative learning


TIE_RATIO = 1.2
TIE_STABLE_ITERATIONS = 50
WIN_THRESHOLD = 0.99


@dataclass
class LearnerState:
    weights: np.ndarray
    iteration: int
    alpha: float
    x0: np.ndarray | None = None


@dataclass
class HebbResult:
    winners: list  # indices into the scored items
    state: LearnerState
    converged: bool
    history: np.ndarray | None = None
    tie: bool = False


def nonnegative_scores(objective, loss_kind: str) -> np.ndarray:
    """Map oracle losses onto nonnegative values whose maximum marks the optimum.

    Norm losses become ``1 / (eps + loss)``, divided by the largest such
    value.  Composite scores (given here negated, as losses) are rescaled to
    ``(range - deficit) / range``.  Either way the best pattern scores 1, so
    the offset ``alpha`` of the weight update is measured against it.
    """
    objective = np.asarray(objective, dtype=float)
    if loss_kind == "norm_diff":
        inv = 1.0 / (NORM_LOSS_EPS + objective)
        return inv / inv.max()
    score = -objective
    span = score.max() - score.min()
    if span == 0.0:
        return np.ones_like(score)
    return (span - (score.max() - score)) / span


def _check_simplex(m):
    if np.any(m < 0) or abs(m.sum() - 1.0) > 1e-12:
        raise InvariantViolation(f"weights left the simplex: sum = {m.sum()!r}")


def iterate_weights(
    G,
    alpha: float = 0.0,
    max_iter: int = 10_000,
    record: bool = False,
    initial=None,
) -> HebbResult:
    """Run ``m_k <- m_k (alpha + G_k) / sum_l m_l (alpha + G_l)`` until one group dominates.

    Stops when a single weight reaches 0.99, or when a group of weights
    within a factor 1.2 of the leader holds 0.99 of the mass, each member
    above ``0.9 / size``, for 50 consecutive iterations.  Group members must
    also share their growth factor ``alpha + G`` to ``1e-7`` relative, so
    near-ties keep iterating until the better pattern pulls ahead.
    """
    G = np.asarray(G, dtype=float)
    if np.any(G < 0):
        raise ValueError("scores must be nonnegative")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    gain = alpha + G
    if not np.any(gain > 0):
        raise DegenerateScores("degenerate scores: every alpha + G is zero")
    m = np.full(G.shape, 1.0 / G.size) if initial is None else np.asarray(initial, dtype=float).copy()
    history = [m.copy()] if record else None
    group_prev = None
    stable = 0
    winners = None
    j = 0
    while j < max_iter:
        j += 1
        m = m * gain
        m /= m.sum()
        _check_simplex(m)
        if record:
            history.append(m.copy())
        lead = m.max()
        group = np.flatnonzero(m * TIE_RATIO > lead)
        if group.size == 1:
            stable = 0
            group_prev = None
            if lead >= WIN_THRESHOLD:
                winners = group
                break
            continue
        settled = (
            m[group].sum() >= WIN_THRESHOLD
            and m[group].min() > 0.9 / group.size
            and gain[group].max() <= gain[group].min() * (1 + TIE_GAIN_RTOL)
        )
        if settled and group_prev is not None and np.array_equal(group, group_prev):
            stable += 1
        else:
            stable = 0
        group_prev = group
        if settled and stable >= TIE_STABLE_ITERATIONS:
            winners = group
            break
    converged = winners is not None
    if winners is None:
        winners = np.flatnonzero(m == m.max())
    return HebbResult(
        winners=[int(k) for k in winners],
        state=LearnerState(m, j, float(alpha)),
        converged=converged,
        history=np.array(history) if record else None,
        tie=len(winners) > 1,
    )


@dataclass
class PatternTable:
    """Flattened preimages of a set of alphabet entries."""

    entries: list
    patterns: list = field(default_factory=list)
    owner: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @classmethod
    def from_entries(cls, entries):
        patterns, owner = [], []
        for k, e in enumerate(entries):
            for u in e.preimages:
                patterns.append(u)
                owner.append(k)
        return cls(list(entries), patterns, np.asarray(owner, dtype=int))


@dataclass
class HebbSelection:
    selection: Selection
    winner_patterns: list
    result: HebbResult


def hebb_learn(
    cfg: EmulationConfig,
    x0,
    alphabet: Sequence[AlphabetEntry] | PatternTable,
    alpha: float = 0.0,
    max_iter: int = 10_000,
    record: bool = False,
) -> HebbSelection:
    """Learn the optimal activation patterns at ``x0`` by weight iteration over every pattern."""
    table = alphabet if isinstance(alphabet, PatternTable) else PatternTable.from_entries(alphabet)
    x0 = _unit(x0)
    losses = objective_matrix(cfg, x0, directions_of(table.entries))[0]
    G = nonnegative_scores(losses[table.owner], cfg.loss_kind)
    result = iterate_weights(G, alpha, max_iter, record)
    result.state.x0 = x0
    owners = sorted({int(table.owner[k]) for k in result.winners})
    selection = Selection([table.entries[k] for k in owners], float(losses[owners].min()))
    return HebbSelection(selection, [table.patterns[k] for k in result.winners], result)


def iterations_to_mass(history, winners, threshold: float = WIN_THRESHOLD) -> int | None:
    """First iteration at which the winners jointly hold ``threshold`` of the weight."""
    mass = np.asarray(history)[:, winners].sum(axis=1)
    hit = np.flatnonzero(mass >= threshold)
    return int(hit[0]) if hit.size else None


def convergence_compare(
    cfg: EmulationConfig,
    x0,
    alphabet,
    alpha_list=(0.0, 1.0),
    max_iter: int = 100_000,
) -> dict[float, int | None]:
    """Iterations until the optimal patterns hold 0.99 of the weight, per ``alpha``."""
    out = {}
    for alpha in alpha_list:
        sel = hebb_learn(cfg, x0, alphabet, alpha=alpha, max_iter=max_iter, record=True)
        out[float(alpha)] = iterations_to_mass(sel.result.history, sel.result.winners)
    return out


# ---------------------------------------------------------------------------
# Partitions


@dataclass
class PartitionCell:
    """A region of the sphere served by one output direction.

    On the circle the region is the arc ``[theta_lo, theta_hi)``; for Monte
    Carlo partitions in higher dimension only the sample count is kept.
    """

    cell_id: int
    direction: tuple
    pattern: tuple
    alpha: int
    measure: float
    theta_lo: float | None = None
    theta_hi: float | None = None
    samples: int | None = None
    stderr: float | None = None

    def to_json(self) -> dict:
        out = {
            "cell_id": self.cell_id,
            "d": [float(v) for v in self.direction],
            "pattern": list(self.pattern),
            "alpha": self.alpha,
            "p": self.measure,
        }
        if self.theta_lo is not None:
            out["theta_lo"] = self.theta_lo
            out["theta_hi"] = self.theta_hi
        if self.samples is not None:
            out["samples"] = self.samples
            out["stderr"] = self.stderr
        return out


def circle_points(thetas) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    return np.stack([np.cos(thetas), np.sin(thetas)], axis=1)


def label_points(cfg, X, entries, learner: str = "oracle", alpha: float = 0.0) -> np.ndarray:
    """Index of the selected entry at each point (first of a tie set)."""
    X = np.atleast_2d(X)
    if learner == "oracle":
        return np.argmin(objective_matrix(cfg, X, directions_of(entries)), axis=1)
    if learner == "hebb":
        table = PatternTable.from_entries(entries)
        labels = np.empty(len(X), dtype=int)
        for s, x in enumerate(X):
            sel = hebb_learn(cfg, x / np.linalg.norm(x), table, alpha=alpha)
            labels[s] = entries.index(sel.selection.entries[0])
        return labels
    raise ValueError(f"unknown learner {learner!r}")


def _bisect_boundary(cfg, D, a, b, lo, hi, tol):
    """Angle in ``[lo, hi]`` where directions ``a`` and ``b`` are equally good."""

    def gap(theta):
        L = objective_matrix(cfg, circle_points([theta]), D[[a, b]])[0]
        return L[0] - L[1]

    g_lo = gap(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def partition_circle(
    cfg: EmulationConfig,
    alphabet: Sequence[AlphabetEntry],
    resolution: int = 4096,
    learner: str = "oracle",
    tol: float = 1e-6,
    alpha: float = 0.0,
) -> list[PartitionCell]:
    """Partition the unit circle into arcs of constant optimal direction.

    Grid points are labelled by ``learner``; each label change is then
    localized by bisection on the loss difference of the two neighbouring
    directions.  Cells are listed counterclockwise starting with the one
    that contains ``theta = 0``.
    """
    if cfg.n != 2:
        raise ValueError("partition_circle needs n = 2")
    entries = candidate_entries(alphabet, cfg.H)
    D = directions_of(entries)
    grid = 2 * np.pi * np.arange(resolution) / resolution
    labels = label_points(cfg, circle_points(grid), entries, learner, alpha)
    changes = [k for k in range(resolution) if labels[k] != labels[k - 1]]
    if not changes:
        e = entries[labels[0]]
        return [PartitionCell(0, e.direction, e.canonical_pattern, e.multiplicity, 1.0, 0.0, 2 * np.pi)]
    bounds = []
    for k in changes:
        lo = grid[k - 1] if k > 0 else grid[-1] - 2 * np.pi
        bounds.append(_bisect_boundary(cfg, D, labels[k - 1], labels[k], lo, grid[k], tol))
    cells = []
    for i, k in enumerate(changes):
        lo = bounds[i]
        hi = bounds[i + 1] if i + 1 < len(bounds) else bounds[0] + 2 * np.pi
        if hi > 2 * np.pi:
            lo, hi = lo - 2 * np.pi, hi - 2 * np.pi
        cells.append((lo, hi, labels[k]))
    cells.sort()
    out = []
    for cid, (lo, hi, lab) in enumerate(cells):
        e = entries[lab]
        out.append(
            PartitionCell(cid, e.direction, e.canonical_pattern, e.multiplicity, (hi - lo) / (2 * np.pi), lo, hi)
        )
    return out


def sphere_content(n: int) -> float:
    """Surface measure of the unit sphere in ``R^n``."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def partition_sphere_mc(
    cfg: EmulationConfig,
    alphabet: Sequence[AlphabetEntry],
    samples: int = 100_000,
    seed: int = 0,
    chunk: int = 50_000,
) -> list[PartitionCell]:
    """Estimate cell measures from uniformly distributed points on the sphere."""
    if cfg.n < 2:
        raise ValueError("need n >= 2")
    if samples < 10_000:
        raise ValueError("at least 10^4 samples are required")
    entries = candidate_entries(alphabet, cfg.H)
    D = directions_of(entries)
    rng = np.random.default_rng(seed)
    counts = np.zeros(len(entries), dtype=np.int64)
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        X = rng.standard_normal((size, cfg.n))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        counts += np.bincount(np.argmin(objective_matrix(cfg, X, D), axis=1), minlength=len(entries))
        done += size
    out = []
    for k in np.flatnonzero(counts):
        p = counts[k] / samples
        e = entries[k]
        out.append(
            PartitionCell(
                len(out), e.direction, e.canonical_pattern, e.multiplicity, float(p),
                samples=int(counts[k]), stderr=float(math.sqrt(p * (1 - p) / samples)),
            )
        )
    return out


def direction_measures(cells: Sequence[PartitionCell]) -> dict[tuple, float]:
    """Total measure per direction (a direction may own several arcs)."""
    out: dict[tuple, float] = {}
    for c in cells:
        out[c.direction] = out.get(c.direction, 0.0) + c.measure
    return out


def used_pattern_census(cells: Sequence[PartitionCell], alphabet: Sequence[AlphabetEntry]) -> dict:
    """Count the patterns behind the used directions against the rest of the alphabet."""
    used = set(direction_measures(cells))
    zero = sum(e.multiplicity for e in alphabet if e.is_zero)
    used_patterns = sum(e.multiplicity for e in alphabet if e.direction in used)
    total = sum(e.multiplicity for e in alphabet)
    return {
        "directions": len(used),
        "used": used_patterns,
        "unused": total - zero - used_patterns,
        "zero": zero,
        "total": total,
    }


def direction_field(cfg, alphabet, thetas, learner: str = "oracle", alpha: float = 0.0) -> list[tuple]:
    """Selected direction at each angle, the learned quantized field on a circle grid."""
    entries = candidate_entries(alphabet, cfg.H)
    labels = label_points(cfg, circle_points(thetas), entries, learner, alpha)
    return [entries[k].direction for k in labels]
