"""Ternary activation patterns, their output alphabet and the two entropies."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EnumerationLimit, InvariantViolation

MAX_CHANNELS = 16
MATERIALIZE_LIMIT = 10
MAX_DENOMINATOR = 10**6
DEDUP_ATOL = 1e-9

TERNARY = (-1, 0, 1)
BINARY = (0, 1)

Pattern = tuple  # tuple of ints in {-1, 0, 1}


@dataclass
class AlphabetEntry:
    """One distinct output vector ``d = B u`` and every pattern ``u`` producing it."""

    direction: tuple
    preimages: list = field(default_factory=list)

    @property
    def multiplicity(self) -> int:
        return len(self.preimages)

    @property
    def is_zero(self) -> bool:
        return all(abs(v) <= DEDUP_ATOL for v in self.direction)

    @property
    def canonical_pattern(self) -> Pattern:
        """Lexicographically smallest preimage, the consistent representative."""
        return min(self.preimages)

    def to_json(self) -> dict:
        return {
            "d": [float(v) for v in self.direction],
            "alpha": self.multiplicity,
            "preimages": [list(u) for u in self.preimages],
        }


@dataclass(frozen=True)
class AlphabetStats:
    p: tuple
    alpha: tuple
    H_alphabet: float
    H_activation: float


def enumerate_patterns(m: int, binary_only: bool = False) -> Iterator[Pattern]:
    """Yield every activation pattern of length ``m`` in odometer order.

    The last channel cycles fastest through ``(-1, 0, 1)`` (or ``(0, 1)``
    when ``binary_only``).
    """
    if m < 0 or m > MAX_CHANNELS:
        raise EnumerationLimit(f"m = {m} channels exceeds the cap of {MAX_CHANNELS}")
    levels = BINARY if binary_only else TERNARY
    return itertools.product(levels, repeat=m)


def pattern_array(m: int, binary_only: bool = False) -> np.ndarray:
    """All patterns as an ``(count, m)`` int array, for ``m <= 10``."""
    if m > MATERIALIZE_LIMIT:
        raise EnumerationLimit(f"refusing to materialize patterns for m = {m} > {MATERIALIZE_LIMIT}")
    levels = BINARY if binary_only else TERNARY
    return np.array(list(itertools.product(levels, repeat=m)), dtype=int).reshape(-1, m)


def integer_scale(B, max_denominator: int = MAX_DENOMINATOR) -> int | None:
    """Smallest ``s`` with ``s * B`` integral when every entry is a small-denominator rational."""
    s = 1
    for v in np.asarray(B, dtype=float).ravel():
        frac = Fraction(float(v)).limit_denominator(max_denominator)
        if abs(float(frac) - v) > 1e-12 * max(1.0, abs(v)):
            return None
        s = s * frac.denominator // math.gcd(s, frac.denominator)
        if s > max_denominator:
            return None
    return s


def _key_function(B):
    B = np.asarray(B, dtype=float)
    s = integer_scale(B)
    if s is not None:
        Bint = np.rint(B * s).astype(np.int64)

        def key(u):
            return tuple(int(v) for v in Bint @ np.asarray(u, dtype=np.int64))

        def direction(k):
            return tuple(v / s for v in k)

        return key, direction

    def key(u):
        return tuple(int(v) for v in np.rint(B @ np.asarray(u, dtype=float) / DEDUP_ATOL))

    def direction(k):
        return tuple(v * DEDUP_ATOL for v in k)

    return key, direction


def build_alphabet(B, patterns: Iterable[Pattern]) -> list[AlphabetEntry]:
    """Group patterns by the vector ``B u`` they produce.

    Keys are exact integers when ``B`` has rational entries with denominator at
    most ``10**6``; otherwise vectors are snapped to a ``1e-9`` grid.  Entries
    are returned sorted by direction, preimages in enumeration order.
    """
    key, direction = _key_function(B)
    groups: dict[tuple, list] = {}
    count = 0
    for u in patterns:
        u = tuple(int(v) for v in u)
        groups.setdefault(key(u), []).append(u)
        count += 1
    entries = [AlphabetEntry(direction(k), pre) for k, pre in sorted(groups.items())]
    if sum(e.multiplicity for e in entries) != count:
        raise InvariantViolation("alphabet multiplicities do not add up to the pattern count")
    return entries


def nonzero_entries(alphabet: Sequence[AlphabetEntry]) -> list[AlphabetEntry]:
    return [e for e in alphabet if not e.is_zero]


def alphabet_to_json(alphabet: Sequence[AlphabetEntry]) -> list[dict]:
    return [e.to_json() for e in alphabet]


def drop_channel(patterns: Iterable[Pattern], c: int) -> list[Pattern]:
    """Keep the patterns that leave channel ``c`` (1-based) silent."""
    out = []
    for u in patterns:
        if not 1 <= c <= len(u):
            raise IndexError(f"channel {c} outside 1..{len(u)}")
        if u[c - 1] == 0:
            out.append(tuple(u))
    return out


def _direction_counts(B, binary_only=False) -> Counter:
    """Multiplicity of each distinct ``B u``, enumerated in vectorized chunks."""
    B = np.asarray(B, dtype=float)
    m = B.shape[1]
    s = integer_scale(B)
    if s is None:
        raise ValueError("chunked counting needs a rational B")
    Bint = np.rint(B * s).astype(np.int64)
    levels = np.array(BINARY if binary_only else TERNARY, dtype=np.int64)
    tail = min(m, MATERIALIZE_LIMIT)
    tail_patterns = pattern_array(tail, binary_only).astype(np.int64)
    tail_out = tail_patterns @ Bint[:, m - tail:].T
    counts: Counter = Counter()
    for head in itertools.product(levels, repeat=m - tail):
        offset = Bint[:, : m - tail] @ np.asarray(head, dtype=np.int64) if head else 0
        rows, mult = np.unique(tail_out + offset, axis=0, return_counts=True)
        for r, c in zip(map(tuple, rows), mult):
            counts[r] += int(c)
    return counts


def symmetric_basis_matrix(n: int) -> np.ndarray:
    """The ``n x 2n`` matrix ``(e_1 .. e_n, -e_1 .. -e_n)``."""
    return np.hstack([np.eye(n), -np.eye(n)])


def distinct_direction_count(n: int) -> int:
    """Number of distinct vectors ``B u`` for ``B = (I, -I)`` over all ternary patterns."""
    if n < 1 or n > 8:
        raise EnumerationLimit(f"n = {n} outside the enumerable range 1..8")
    return len(_direction_counts(symmetric_basis_matrix(n)))


def average_multiplicity(n: int) -> float:
    """Mean number of patterns per distinct vector for ``B = (I, -I)``, i.e. ``9^n / 5^n``."""
    closed_form = 9.0**n / 5.0**n
    counts = _direction_counts(symmetric_basis_matrix(n))
    enumerated = sum(counts.values()) / len(counts)
    if abs(enumerated - closed_form) > 1e-9 * closed_form:
        raise InvariantViolation(f"enumerated mean {enumerated} differs from 9^n/5^n = {closed_form}")
    return closed_form


def _check_probabilities(p):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    return p


def _plogq(p, q):
    # 0 log 0 = 0
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log2(q[nz])
    return out


def alphabet_entropy(p) -> float:
    """Shannon entropy ``-sum p_i log2 p_i`` of the output directions, in bits."""
    p = _check_probabilities(p)
    return float(-_plogq(p, p).sum())


def activation_entropy(p, alpha) -> float:
    """Entropy ``-sum p_i log2(p_i / alpha_i)`` of the underlying activation patterns.

    Every direction's probability is split evenly over its ``alpha_i``
    patterns.  The per-pattern sum ``-sum alpha_i q_i log2 q_i`` with
    ``q_i = p_i / alpha_i`` is evaluated as well and must agree to 1e-12.
    """
    p = _check_probabilities(p)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != p.shape:
        raise ValueError("p and alpha must have the same length")
    if np.any(alpha < 1) or np.any(alpha != np.round(alpha)):
        raise ValueError("multiplicities must be integers >= 1")
    direct = float(-_plogq(p, p / alpha).sum())
    q = p / alpha
    per_pattern = float(-(alpha * _plogq(q, q)).sum())
    if abs(direct - per_pattern) > 1e-12:
        raise InvariantViolation(f"entropy formulas disagree: {direct} vs {per_pattern}")
    return direct


def alphabet_stats(p, alpha) -> AlphabetStats:
    return AlphabetStats(
        tuple(float(v) for v in p),
        tuple(int(a) for a in alpha),
        alphabet_entropy(p),
        activation_entropy(p, alpha),
    )
