"""
Classical automaton tests

Validates:
- Ring invertibility of the three-neighbor parity rule (fails exactly when 3 | L)
- Inverse search for reversible automata and its failure on non-injective ones
- Quantization of shift, cellwise permutation and block-exchange automata
"""

import numpy as np
import pytest

from app.core.classical import (
    ClassicalCA,
    all_configurations,
    block_exchange_automaton,
    cellwise_permutation,
    elementary_rule,
    find_inverse,
    global_map,
    is_globally_invertible,
    quantize_classical,
    round_trip_failures,
    shift_automaton,
)
from app.core.errors import ClassicalInverseError, DimensionMismatchError
from app.core.lattice import Region, region_arith
from app.core.rules import cellwise_rule, rule_distance, shift_rule, validate_rule

PARITY = 150


@pytest.mark.parametrize("length", range(3, 13))
def test_parity_rule_invertible_unless_length_divisible_by_three(length):
    assert is_globally_invertible(elementary_rule(PARITY), length) == (length % 3 != 0)


def test_parity_rule_has_no_local_inverse():
    with pytest.raises(ClassicalInverseError, match="no inverse"):
        find_inverse(elementary_rule(PARITY))


def test_elementary_table_uses_wolfram_order():
    ca = elementary_rule(PARITY)
    configs = np.array([[1, 0, 0, 0, 0]])
    # the single 1 spreads to its neighbours
    assert global_map(ca, configs).tolist() == [[1, 1, 0, 0, 1]]


def test_all_configurations_are_lexicographic():
    assert all_configurations(2, 2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]


def test_table_entries_are_range_checked():
    with pytest.raises(DimensionMismatchError):
        ClassicalCA(2, (0,), np.array([0, 2]))


def test_find_inverse_of_block_exchange_round_trips():
    ca = block_exchange_automaton()
    searched = find_inverse(ClassicalCA(ca.alphabet_size, ca.scheme_fwd, ca.outputs))
    for length in (3, 4, 5):
        assert round_trip_failures(searched, length) == 0


def test_quantized_shift_is_the_quantum_shift():
    rule = quantize_classical(shift_automaton(2, 1))
    assert rule.region == Region.of([1])
    assert rule_distance(rule, shift_rule(2, 1)) <= 1e-12


def test_quantized_permutation_is_cellwise():
    perm = [1, 2, 0]
    rule = quantize_classical(cellwise_permutation(perm))
    p = np.zeros((3, 3))
    for c, target in enumerate(perm):
        p[target, c] = 1.0
    assert rule.region == Region.of([0])
    assert rule_distance(rule, cellwise_rule(p)) <= 1e-12


def test_quantized_block_exchange_stays_inside_bound():
    ca = block_exchange_automaton()
    rule = quantize_classical(ca)
    fwd = Region.of(ca.scheme_fwd)
    spread = region_arith(fwd, fwd, "difference")
    bound = region_arith(spread, Region.of(ca.scheme_inv), "difference")
    assert rule.region.issubset(bound)
    assert validate_rule(rule).valid


def test_quantize_without_inverse_searches_first():
    bare = ClassicalCA(2, (1,), np.array([0, 1]))
    rule = quantize_classical(bare)
    assert rule_distance(rule, shift_rule(2, 1)) <= 1e-12
