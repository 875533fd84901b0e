"""
Local rule tests

Validates:
- Translate commutation validation, with offending offsets for broken rules
- Heisenberg evolution on tori against dense global unitaries
- Elementary constructors (cellwise, shift, composition) and their global unitaries
- Commuting-unitary, abelian phase-gate and two-layer block constructions
- Dimension cap and unitary cache behaviour
"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.algebra import phase_distance, residual_norm, tensor
from app.core.errors import (
    DimensionCapError,
    HomomorphismError,
    PhaseTableError,
    TranslationInvarianceError,
)
from app.core.lattice import NeighborhoodScheme, Region, TorusSpec
from app.core.operators import LocalOperator, matrix_unit
from app.core.rules import (
    AbelianRuleSpec,
    LocalRule,
    apply_on_lattice,
    cellwise_rule,
    compose_rules,
    embed_on_torus,
    from_abelian_spec,
    from_commuting_unitary,
    from_margolus,
    functional_equation_residual,
    global_apply,
    global_unitary,
    identity_rule,
    images_on_torus,
    ising_family,
    phase_gate_rule,
    rule_distance,
    shift_rule,
    three_site_phase,
    validate_rule,
)
from app.core.settings import reload_settings
from tests.helpers import HADAMARD, SX, SY, SZ, random_unitary


def conjugation_rule(u: np.ndarray) -> LocalRule:
    """T0(A) = U^dag (A (x) 1) U on the sites {0, 1}."""
    stack = np.stack([
        np.stack([u.conj().T @ np.kron(matrix_unit(2, i, j), np.eye(2)) @ u for j in range(2)])
        for i in range(2)
    ])
    return LocalRule(2, NeighborhoodScheme.of([0, 1]), stack)


class TestValidation:
    def test_phase_gate_is_valid_on_nearest_neighbors(self):
        report = validate_rule(phase_gate_rule(np.pi))
        assert report.valid
        assert report.scheme == ((-1,), (0,), (1,))
        assert report.offending == ()

    def test_generic_two_site_conjugation_is_rejected(self):
        report = validate_rule(conjugation_rule(random_unitary(4, seed=11)))
        assert not report.valid
        assert set(report.offending) == {(-1,), (1,)}
        assert report.worst > 1e-3

    def test_swap_conjugation_is_the_shift(self):
        swap = np.eye(4)[[0, 2, 1, 3]]
        rule = conjugation_rule(swap)
        assert validate_rule(rule).valid
        assert rule_distance(rule.trimmed(), shift_rule(2, 1)) <= 1e-12

    def test_broken_images_fail_the_homomorphism_check(self):
        stack = np.stack([np.stack([matrix_unit(2, i, j) for j in range(2)]) for i in range(2)])
        stack[1, 1] = 0.0
        with pytest.raises(HomomorphismError):
            validate_rule(LocalRule(2, NeighborhoodScheme.of([0]), stack))

    def test_report_serializes_offsets(self):
        body = validate_rule(phase_gate_rule(np.pi / 2)).to_dict()
        assert body["valid"] is True
        assert [o["offset"] for o in body["offsets"]] == [[-2], [-1], [1], [2]]


class TestEvolution:
    def test_shift_moves_observables_right(self):
        image = apply_on_lattice(shift_rule(2, 1), LocalOperator.at_site(SX, 0))
        assert image.region == Region.of([1])
        assert residual_norm(image.matrix - SX) <= 1e-12

    def test_phase_gate_maps_x_to_zxz(self):
        image = apply_on_lattice(phase_gate_rule(np.pi), LocalOperator.at_site(SX, 0))
        assert image.region == Region.interval(-1, 1)
        assert residual_norm(image.matrix - tensor(SZ, SX, SZ)) <= 1e-9

    @given(
        phi=st.floats(min_value=0.0, max_value=2 * np.pi),
        site=st.integers(min_value=0, max_value=4),
    )
    def test_global_apply_matches_dense_unitary(self, phi, site):
        torus = TorusSpec.of(5)
        rule = compose_rules(phase_gate_rule(phi), cellwise_rule(HADAMARD))
        obs = LocalOperator(Region.interval(site, site + 1), np.kron(SX, SY), 2)
        g = global_unitary(rule, torus)
        local = global_apply(rule, obs, torus)
        dense = g.conj().T @ embed_on_torus(obs, torus) @ g
        assert residual_norm(embed_on_torus(local, torus) - dense) <= 1e-9

    def test_cellwise_global_unitary_is_tensor_power(self):
        w = random_unitary(2, seed=5)
        g = global_unitary(cellwise_rule(w), TorusSpec.of(3))
        assert phase_distance(g, tensor(w, w, w)) <= 1e-9

    def test_images_read_back_from_global_unitary(self):
        rule = compose_rules(shift_rule(2, -1), phase_gate_rule(1.1))
        back = images_on_torus(rule, TorusSpec.of(7))
        assert np.max(np.abs(back - rule.images)) <= 1e-9

    def test_dimension_cap_is_enforced(self, monkeypatch):
        monkeypatch.setenv("QCA_DIMENSION_CAP", "16")
        reload_settings()
        with pytest.raises(DimensionCapError):
            global_unitary(identity_rule(2), TorusSpec.of(5))

    def test_unitary_cache_returns_copies(self):
        rule = phase_gate_rule(0.3)
        first = global_unitary(rule, TorusSpec.of(5))
        first[0, 0] = 99.0
        second = global_unitary(rule, TorusSpec.of(5))
        assert second[0, 0] != 99.0


class TestConstructors:
    def test_composition_order(self):
        w = random_unitary(2, seed=2)
        rule = compose_rules(shift_rule(2, 1), cellwise_rule(w))
        image = rule.image_of(SZ)
        assert image.region == Region.of([1])
        assert residual_norm(image.matrix - w.conj().T @ SZ @ w) <= 1e-9

    def test_composed_unitaries_multiply_inner_first(self):
        torus = TorusSpec.of(5)
        outer, inner = phase_gate_rule(0.7), cellwise_rule(random_unitary(2, seed=8))
        g = global_unitary(compose_rules(outer, inner), torus)
        product = global_unitary(inner, torus) @ global_unitary(outer, torus)
        assert phase_distance(g, product) <= 1e-9

    def test_shift_round_trip_is_identity(self):
        rule = compose_rules(shift_rule(3, 1), shift_rule(3, -1))
        assert rule.region == Region.of([0])
        assert rule_distance(rule, identity_rule(3)) <= 1e-12

    def test_two_dimensional_shift(self):
        rule = shift_rule(2, (1, 0), s=2)
        image = apply_on_lattice(rule, LocalOperator.at_site(SX, (0, 0), s=2))
        assert image.region == Region.of([(1, 0)])

    def test_ising_family_builds_valid_rule(self):
        rule = from_commuting_unitary(ising_family(np.pi / 4))
        assert validate_rule(rule).valid
        assert rule.region.issubset(Region.interval(-1, 1))

    def test_abelian_spec_validation(self):
        with pytest.raises(PhaseTableError):
            AbelianRuleSpec(np.array([[1.0, 1.0], [1.0, 2.0]]), np.eye(2))
        with pytest.raises(PhaseTableError):
            AbelianRuleSpec(np.array([[1.0, -1.0], [1.0, -1.0]]), np.eye(2))

    def test_abelian_qutrit_rule_is_valid(self):
        omega = np.exp(2j * np.pi / 3)
        phases = np.array([[1, 1, 1], [1, omega, omega ** 2], [1, omega ** 2, omega]])
        rule = from_abelian_spec(AbelianRuleSpec(phases, random_unitary(3, seed=4)))
        assert validate_rule(rule).valid
        assert functional_equation_residual(three_site_phase(phases)) <= 1e-12

    def test_phase_gate_at_zero_trims_to_cellwise(self):
        assert phase_gate_rule(0.0).region == Region.of([0])

    def test_margolus_swap_layer_gives_identity(self):
        swap = np.eye(4)[[0, 2, 1, 3]]
        rule = from_margolus(np.eye(4), swap, [2, 2], 2)
        assert rule.region == Region.of([0])
        assert rule_distance(rule, identity_rule(2)) <= 1e-12

    def test_margolus_full_right_slot_gives_right_shift(self):
        rule = from_margolus(np.eye(4), np.eye(4), [1, 4], 2)
        assert rule_distance(rule, shift_rule(2, 1)) <= 1e-12
        left = from_margolus(np.eye(4), np.eye(4), [4, 1], 2)
        assert rule_distance(left, shift_rule(2, -1)) <= 1e-12

    def test_margolus_rejects_translation_breaking_pair(self):
        with pytest.raises(TranslationInvarianceError):
            from_margolus(np.eye(4), np.eye(4), [2, 2], 2)
