"""Observer and feedback gains that stay Hurwitz when channels drop out.

With ``Y`` solving ``Y C = A`` and vanishing outside the output channels
``I2``, the observer gain ``E = alpha2 C^T + Y`` gives
``A - E P_L C = -alpha2 C^T P_L C`` for every ``L`` containing ``I2``.  The
feedback gain ``K = -alpha1 B^T - X`` with ``B X = A`` and ``X`` vanishing
outside ``I1`` plays the dual role for input channels.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvariantViolation, LatticeError, NeuromimeticError, ScheduleError
from .linalg import (
    IndexSet,
    LiftedSolution,
    as_matrix,
    lattice_supersets,
    projection_matrix,
    sample_supersets,
    solve_left_invariant,
    solve_right_invariant,
)

IDENTITY_RTOL = 1e-9
EXHAUSTIVE_PAIRS = 2**16
SAMPLED_PAIRS = 10**4


def spectral_abscissa(M) -> float:
    """Largest real part over the eigenvalues of a square matrix."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError("spectral abscissa needs a square matrix")
    if M.size == 0:
        return float("-inf")
    try:
        return float(np.max(np.linalg.eigvals(M).real))
    except np.linalg.LinAlgError as exc:
        raise NeuromimeticError(f"eigensolver did not converge: {exc}") from exc


def _identity_tol(*mats):
    return IDENTITY_RTOL * max(1.0, *(float(np.linalg.norm(M)) for M in mats))


def observer_gain(A, C, I2: IndexSet, alpha2: float = 1.0) -> tuple[np.ndarray, LiftedSolution]:
    """Observer gain ``E = alpha2 C^T + Y`` with ``Y`` right-invariant under ``P_I2``."""
    A, C = as_matrix(A, "A"), as_matrix(C, "C")
    if alpha2 <= 0:
        raise ValueError("alpha2 must be positive")
    hat = solve_right_invariant(A, C, I2)
    E = alpha2 * C.T + hat.hat_A
    for L in (I2, IndexSet.full(C.shape[0])):
        P = projection_matrix(L)
        gap = np.linalg.norm((A - E @ P @ C) + alpha2 * C.T @ P @ C)
        if gap > _identity_tol(A, E, C):
            raise InvariantViolation(f"observer identity fails on L = {L.to_json()}: {gap:.3e}")
    return E, hat


def feedback_gain(A, B, I1: IndexSet, alpha1: float = 1.0) -> tuple[np.ndarray, LiftedSolution]:
    """Feedback gain ``K = -alpha1 B^T - X`` with ``X`` left-invariant under ``P_I1``."""
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    if alpha1 <= 0:
        raise ValueError("alpha1 must be positive")
    hat = solve_left_invariant(A, B, I1)
    K = -alpha1 * B.T - hat.hat_A
    for L in (I1, IndexSet.full(B.shape[1])):
        P = projection_matrix(L)
        gap = np.linalg.norm((A + B @ P @ K) + alpha1 * B @ P @ B.T)
        if gap > _identity_tol(A, K, B):
            raise InvariantViolation(f"feedback identity fails on L = {L.to_json()}: {gap:.3e}")
    return K, hat


@dataclass
class GainDesign:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    K: np.ndarray
    E: np.ndarray
    alpha1: float
    alpha2: float
    I1: IndexSet
    I2: IndexSet
    hatA1: LiftedSolution
    hatA2: LiftedSolution

    @property
    def n(self) -> int:
        return self.A.shape[0]


def design_gains(A, B, C, I1: IndexSet, I2: IndexSet, alpha1: float = 1.0, alpha2: float = 1.0) -> GainDesign:
    A, B, C = as_matrix(A, "A"), as_matrix(B, "B"), as_matrix(C, "C")
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
        raise ValueError(f"inconsistent shapes A {A.shape}, B {B.shape}, C {C.shape}")
    K, hat1 = feedback_gain(A, B, I1, alpha1)
    E, hat2 = observer_gain(A, C, I2, alpha2)
    return GainDesign(A, B, C, K, E, float(alpha1), float(alpha2), I1, I2, hat1, hat2)


@dataclass
class ClosedLoop:
    """Closed-loop matrix in ``(x, e)`` coordinates plus its diagonal closed forms."""

    matrix: np.ndarray
    state_block: np.ndarray
    error_block: np.ndarray


def _check_lattice(design: GainDesign, L1: IndexSet, L2: IndexSet):
    if not design.I1.issubset(L1):
        raise LatticeError(f"input channels {L1.to_json()} outside resilience lattice of {design.I1.to_json()}")
    if not design.I2.issubset(L2):
        raise LatticeError(f"output channels {L2.to_json()} outside resilience lattice of {design.I2.to_json()}")


def closed_loop_matrix(design: GainDesign, L1: IndexSet, L2: IndexSet, check: bool = True) -> ClosedLoop:
    """``[[A + B P1 K, B P1 K], [0, A - E P2 C]]`` for active channel sets ``L1``, ``L2``.

    With ``check`` the diagonal blocks are compared against
    ``-alpha1 B P1 B^T`` and ``-alpha2 C^T P2 C``.
    """
    _check_lattice(design, L1, L2)
    A, B, C, K, E = design.A, design.B, design.C, design.K, design.E
    P1, P2 = projection_matrix(L1), projection_matrix(L2)
    BPK = B @ P1 @ K
    top = A + BPK
    bottom = A - E @ P2 @ C
    n = design.n
    M = np.block([[top, BPK], [np.zeros((n, n)), bottom]])
    state_form = -design.alpha1 * B @ P1 @ B.T
    error_form = -design.alpha2 * C.T @ P2 @ C
    if check:
        tol = _identity_tol(A, K, E)
        if np.linalg.norm(top - state_form) > tol or np.linalg.norm(bottom - error_form) > tol:
            raise InvariantViolation("closed-loop diagonal blocks differ from their closed forms")
    return ClosedLoop(M, state_form, error_form)


@dataclass
class ResilienceReport:
    checked: int
    exhaustive: bool
    worst_abscissa: float
    worst_pair: tuple
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "checked": self.checked,
            "exhaustive": self.exhaustive,
            "worst_abscissa": self.worst_abscissa,
            "worst_pair": [self.worst_pair[0].to_json(), self.worst_pair[1].to_json()],
            "failures": [[a.to_json(), b.to_json(), s] for a, b, s in self.failures],
        }


def verify_resilience(design: GainDesign, margin: float = 0.0, seed: int = 0) -> ResilienceReport:
    """Spectral abscissa of the closed loop over every ``(L1, L2)`` in the dropout lattices.

    Pairs with abscissa ``>= -margin`` are failures.  Above ``2**16`` pairs a
    seeded sample of ``10**4`` pairs replaces exhaustive enumeration.
    """
    free = len(design.I1.complement()) + len(design.I2.complement())
    exhaustive = free <= 16
    if exhaustive:
        pairs = [(a, b) for a in lattice_supersets(design.I1) for b in lattice_supersets(design.I2)]
    else:
        rng = np.random.default_rng(seed)
        pairs = list(
            zip(sample_supersets(design.I1, SAMPLED_PAIRS, rng), sample_supersets(design.I2, SAMPLED_PAIRS, rng))
        )
    worst, worst_pair, failures = -np.inf, pairs[0], []
    for L1, L2 in pairs:
        s = spectral_abscissa(closed_loop_matrix(design, L1, L2, check=False).matrix)
        if s > worst:
            worst, worst_pair = s, (L1, L2)
        if s >= -margin:
            failures.append((L1, L2, s))
    return ResilienceReport(len(pairs), exhaustive, float(worst), worst_pair, failures)


@dataclass
class DropoutSchedule:
    """Piecewise constant active channel sets ``(t_start, t_end, L1, L2)``."""

    intervals: list

    def validate(self, design: GainDesign, T: float):
        if not self.intervals:
            raise ScheduleError("schedule is empty")
        t = 0.0
        for t0, t1, L1, L2 in self.intervals:
            if abs(t0 - t) > 1e-12:
                raise ScheduleError(f"gap or overlap at t = {t}: next interval starts at {t0}")
            if not t1 > t0:
                raise ScheduleError(f"interval [{t0}, {t1}] is empty")
            try:
                _check_lattice(design, L1, L2)
            except LatticeError as exc:
                raise ScheduleError(str(exc)) from exc
            t = t1
        if t < T - 1e-12:
            raise ScheduleError(f"schedule ends at {t}, before T = {T}")

    @classmethod
    def cyclic(cls, phases, period: float, T: float) -> "DropoutSchedule":
        """Repeat ``phases`` (a list of ``(L1, L2)``), each held for ``period`` seconds, up to ``T``."""
        intervals, k, t = [], 0, 0.0
        while t < T - 1e-12:
            t1 = min(T, (k + 1) * period)
            L1, L2 = phases[k % len(phases)]
            intervals.append((t, t1, L1, L2))
            t, k = t1, k + 1
        return cls(intervals)


@dataclass
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    z: np.ndarray

    @property
    def e(self) -> np.ndarray:
        return self.z - self.x

    def to_csv(self) -> str:
        n = self.x.shape[1] if self.x.ndim == 2 else 0
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"z{i + 1}" for i in range(n)] + ["e_norm"])
        for t, x, z, e in zip(self.times, self.x, self.z, self.e):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [repr(float(v)) for v in z]
                       + [repr(float(np.linalg.norm(e)))])
        return buf.getvalue()


def cascade_matrix(design: GainDesign, L1: IndexSet, L2: IndexSet) -> np.ndarray:
    """Plant plus observer in ``(x, z)`` coordinates for fixed active channels."""
    A, B, C, K, E = design.A, design.B, design.C, design.K, design.E
    BPK = B @ projection_matrix(L1) @ K
    EPC = E @ projection_matrix(L2) @ C
    return np.block([[A, BPK], [EPC, A - EPC + BPK]])


def simulate_cascade(design: GainDesign, schedule: DropoutSchedule, x0, z0, h: float, T: float) -> Trajectory:
    """Propagate plant and observer exactly with a matrix exponential per interval.

    Samples are taken every ``h`` seconds and at every schedule switch.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    schedule.validate(design, T)
    n = design.n
    w = np.concatenate([np.asarray(x0, dtype=float), np.asarray(z0, dtype=float)])
    if w.shape != (2 * n,):
        raise ValueError(f"x0 and z0 must have length {n}")
    times, states = [0.0], [w]
    for t0, t1, L1, L2 in schedule.intervals:
        if t0 >= T:
            break
        t1 = min(t1, T)
        M = cascade_matrix(design, L1, L2)
        cache: dict[float, np.ndarray] = {}
        k0 = int(np.floor(t0 / h + 1e-9)) + 1
        grid = [k * h for k in range(k0, int(np.floor(t1 / h + 1e-9)) + 1) if k * h < t1 - 1e-12]
        t = t0
        for tk in grid + [t1]:
            dt = tk - t
            key = round(dt, 12)
            if key not in cache:
                cache[key] = scipy.linalg.expm(M * dt)
            w = cache[key] @ w
            times.append(tk)
            states.append(w)
            t = tk
    S = np.array(states)
    return Trajectory(np.array(times), S[:, :n], S[:, n:])
