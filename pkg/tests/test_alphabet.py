import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neuromimetic import golden
from neuromimetic.alphabet import (
    activation_entropy,
    alphabet_entropy,
    alphabet_to_json,
    average_multiplicity,
    build_alphabet,
    distinct_direction_count,
    drop_channel,
    enumerate_patterns,
    nonzero_entries,
    pattern_array,
)
from neuromimetic.errors import EnumerationLimit


def test_odometer_order():
    pats = list(enumerate_patterns(2))
    assert pats[:4] == [(-1, -1), (-1, 0), (-1, 1), (0, -1)]
    assert len(pats) == 9
    assert list(enumerate_patterns(2, binary_only=True)) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_enumeration_cap():
    with pytest.raises(EnumerationLimit):
        enumerate_patterns(17)
    with pytest.raises(EnumerationLimit):
        pattern_array(11)


def test_ternary_alphabet_of_simple_b(example_alphabet):
    assert len(example_alphabet) == 25
    assert sum(e.multiplicity for e in example_alphabet) == 81
    zero = [e for e in example_alphabet if e.is_zero]
    assert len(zero) == 1 and zero[0].multiplicity == 9
    by_dir = {e.direction: e.multiplicity for e in example_alphabet}
    assert by_dir[(1.0, -2.0)] == 2 and by_dir[(0.0, -1.0)] == 6 and by_dir[(0.0, -2.0)] == 3


def test_binary_alphabet_of_simple_b():
    alph = build_alphabet(golden.SIMPLE_B, enumerate_patterns(4, binary_only=True))
    assert len(alph) == 9
    assert len(nonzero_entries(alph)) == 8


def test_preimages_and_canonical_pattern(example_alphabet):
    e = next(e for e in example_alphabet if e.direction == (1.0, -2.0))
    assert set(e.preimages) == set(golden.FIG2_PATTERNS)
    assert e.canonical_pattern == min(golden.FIG2_PATTERNS)
    assert alphabet_to_json([e])[0]["alpha"] == 2


def test_irrational_b_is_deduplicated():
    alph = build_alphabet(golden.NON_REDUNDANT_B, enumerate_patterns(4))
    assert sum(e.multiplicity for e in alph) == 81
    assert len(alph) == 81  # no two patterns share an output
    assert sum(e.is_zero for e in alph) == 1


def test_drop_channel():
    pats = drop_channel(enumerate_patterns(4), 2)
    assert len(pats) == 27 and all(u[1] == 0 for u in pats)
    with pytest.raises(IndexError):
        drop_channel(enumerate_patterns(4), 5)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_distinct_direction_count(n):
    assert distinct_direction_count(n) == 5**n


def test_average_multiplicity():
    assert average_multiplicity(3) == pytest.approx((9 / 5) ** 3)


def test_entropy_of_reference_table():
    p = [row[4] for row in golden.TABLE1]
    alpha = [row[3] for row in golden.TABLE1]
    p = np.array(p) / np.sum(p)
    assert alphabet_entropy(p) == pytest.approx(3.0528, abs=5e-4)
    assert activation_entropy(p, alpha) == pytest.approx(4.748, abs=5e-4)


def test_entropy_edge_cases():
    assert alphabet_entropy([1.0, 0.0]) == 0.0
    assert activation_entropy([1.0], [4]) == pytest.approx(2.0)
    assert alphabet_entropy([0.25] * 4) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        alphabet_entropy([0.5, 0.6])
    with pytest.raises(ValueError):
        activation_entropy([0.5, 0.5], [1, 0])


def _distribution(draw_p):
    p = np.asarray(draw_p, dtype=float)
    return p / p.sum()


@settings(max_examples=1000, deadline=None)
@given(
    raw=st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=12),
    alpha_seed=st.integers(0, 2**32 - 1),
)
def test_activation_entropy_dominates(raw, alpha_seed):
    p = _distribution(raw)
    alpha = np.random.default_rng(alpha_seed).integers(1, 10, size=p.size)
    Ha, Hact = alphabet_entropy(p), activation_entropy(p, alpha)
    assert Hact >= Ha - 1e-12
    # the gap is the expected log multiplicity
    assert Hact - Ha == pytest.approx(float(np.sum(p * np.log2(alpha))), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(raw=st.lists(st.floats(1e-9, 1.0), min_size=1, max_size=20), seed=st.integers(0, 2**32 - 1))
def test_entropy_formulas_agree(raw, seed):
    p = _distribution(raw)
    alpha = np.random.default_rng(seed).integers(1, 50, size=p.size)
    q = p / alpha
    per_pattern = -float(np.sum(alpha * q * np.log2(q)))
    assert abs(activation_entropy(p, alpha) - per_pattern) <= 1e-12
    assert alphabet_entropy(p) <= math.log2(p.size) + 1e-12
