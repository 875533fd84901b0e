"""
Coined walk tests

Validates:
- The lifted rule conserves particle number (local gauge and dense sector check)
- One-particle evolution agrees with the direct coined-walk simulator
- Walk parameters are checked before any evolution
"""

import numpy as np
import pytest

from app.core.errors import SectorLeakError, WalkSpecError
from app.core.rules import cellwise_rule, rule_distance, validate_rule
from app.core.walks import (
    CoinedWalkSpec,
    coin_on_cell,
    coined_walk_reference,
    free_shift_rule,
    gauge_residual,
    global_sector_leak,
    lift_coined_walk,
    particle_numbers,
    sector_matrix,
    walk_history,
    walk_sector_evolve,
)
from tests.helpers import HADAMARD, SX, random_unitary

BALANCED = (1 / np.sqrt(2), 1j / np.sqrt(2))


def test_coin_acts_only_on_single_particles():
    c4 = coin_on_cell(HADAMARD)
    assert np.allclose(c4[np.ix_([2, 1], [2, 1])], HADAMARD)
    assert c4[0, 0] == 1 and c4[3, 3] == 1


def test_particle_numbers_of_two_cells():
    assert particle_numbers(2).tolist() == [0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4]


def test_lifted_rule_conserves_particles():
    rule = lift_coined_walk(HADAMARD)
    assert validate_rule(rule).valid
    assert gauge_residual(rule) <= 1e-9
    assert global_sector_leak(rule, 5) <= 1e-9


def test_hadamard_walk_matches_reference():
    spec = CoinedWalkSpec(HADAMARD, steps=25, length=64, start=32, amplitudes=BALANCED)
    rows = walk_history(lift_coined_walk(HADAMARD), spec)
    reference = coined_walk_reference(spec)
    assert len(rows) == 26
    for got, want in zip(rows, reference):
        assert np.max(np.abs(got - want)) <= 1e-9
        assert got.sum() == pytest.approx(1.0)


def test_identity_coin_is_the_free_two_way_shift():
    rule = lift_coined_walk(np.eye(2))
    assert rule_distance(rule, free_shift_rule()) <= 1e-12
    spec = CoinedWalkSpec(np.eye(2), steps=5, length=16, start=0)
    final = walk_history(rule, spec)[-1]
    assert int(np.argmax(final)) == 5
    assert final[5] == pytest.approx(1.0)


def test_sigma_x_coin_bounces():
    spec = CoinedWalkSpec(SX, steps=6, length=16, start=8)
    rows = walk_history(lift_coined_walk(SX), spec)
    # the flipped chirality sends the particle straight back
    assert [int(np.argmax(row)) for row in rows] == [8, 9, 8, 9, 8, 9, 8]
    assert all(row.max() == pytest.approx(1.0) for row in rows)
    for got, want in zip(rows, coined_walk_reference(spec)):
        assert np.max(np.abs(got - want)) <= 1e-9


def test_random_coin_on_short_ring_with_wrap():
    coin = random_unitary(2, seed=31)
    spec = CoinedWalkSpec(coin, steps=12, length=7, start=3, allow_wrap=True)
    final = walk_sector_evolve(lift_coined_walk(coin), spec)
    assert np.max(np.abs(final - coined_walk_reference(spec)[-1])) <= 1e-9


def test_sector_matrix_is_unitary():
    w = sector_matrix(lift_coined_walk(HADAMARD), 9)
    assert np.allclose(w.conj().T @ w, np.eye(18), atol=1e-9)


def test_vacuum_mixing_rule_leaks():
    swap_empty = np.eye(4)[[1, 0, 2, 3]]
    rule = cellwise_rule(swap_empty)
    assert gauge_residual(rule) > 1e-3
    with pytest.raises(SectorLeakError):
        sector_matrix(rule, 8)


@pytest.mark.parametrize("kwargs", [
    {"coin": np.eye(3), "steps": 1, "length": 8},
    {"coin": HADAMARD, "steps": 1, "length": 8, "amplitudes": (1.0, 1.0)},
    {"coin": HADAMARD, "steps": 3, "length": 5},
    {"coin": HADAMARD, "steps": 1, "length": 4},
])
def test_invalid_specs(kwargs):
    with pytest.raises(WalkSpecError):
        CoinedWalkSpec(**kwargs)
