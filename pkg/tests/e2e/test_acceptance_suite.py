"""
End-to-end acceptance suite

Runs the seeded oracle batteries across the whole engine:
1. Parity-rule ring invertibility and quantized classical automata
2. Block decompositions, inverses and classification of random nearest-neighbor qubit rules
3. The Clifford palindrome search and the prototype light cone
4. Quasi-probability facts and the coined-walk equivalence
5. Algebra-core oracles (planted blocks, planted conjugations, support commutation)
"""

import numpy as np
import pytest

from app.core.algebra import (
    MatrixAlgebra,
    decompose,
    generated_algebra,
    phase_distance,
    residual_norm,
    support_space,
    unitary_from_automorphism,
)
from app.core.classical import (
    block_exchange_automaton,
    cellwise_permutation,
    elementary_rule,
    is_globally_invertible,
    quantize_classical,
    shift_automaton,
)
from app.core.clifford import (
    PROTOTYPE,
    PauliString,
    dense_residual,
    evolve_history,
    gauge_ok,
    interior_filling,
    search_clifford,
    to_poly_matrix,
)
from app.core.lattice import Region, TorusSpec
from app.core.operators import matrix_unit
from app.core.quasiprob import compare_two_site, quasi_probs, wigner_basis
from app.core.rules import (
    LocalRule,
    cellwise_rule,
    compose_rules,
    global_unitary,
    phase_gate_rule,
    rule_distance,
    shift_rule,
    validate_rule,
)
from app.core.structure import RuleKind, classify_nn_qubit, invert, margolus_decompose
from app.core.walks import (
    CoinedWalkSpec,
    coined_walk_reference,
    global_sector_leak,
    lift_coined_walk,
    walk_history,
)
from tests.helpers import HADAMARD, planted_algebra, random_unitary

pytestmark = pytest.mark.slow

FILLINGS = {"empty", "identity", "y", "xy", "yx", "irregular"}


def random_nearest_neighbor_rule(rng: np.random.Generator):
    """Cellwise rotations around a shift, a phase gate or nothing, with the expected family."""
    before = cellwise_rule(random_unitary(2, int(rng.integers(1 << 30))))
    after = cellwise_rule(random_unitary(2, int(rng.integers(1 << 30))))
    choice = int(rng.integers(4))
    if choice == 0:
        core, kind = cellwise_rule(np.eye(2)), RuleKind.CELLWISE_ROTATION
    elif choice == 1:
        core, kind = shift_rule(2, 1), RuleKind.RIGHT_SHIFT_COMPOSED
    elif choice == 2:
        core, kind = shift_rule(2, -1), RuleKind.LEFT_SHIFT_COMPOSED
    else:
        phi = float(rng.uniform(0.3, 2 * np.pi - 0.3))
        core, kind = phase_gate_rule(phi), RuleKind.PHASE_GATE_COMPOSED
    return compose_rules(after, compose_rules(core, before)), kind


def decomposition_suite() -> list[LocalRule]:
    rng = np.random.default_rng(6)
    fixed = [shift_rule(2, 1), cellwise_rule(HADAMARD), phase_gate_rule(np.pi)]
    return fixed + [random_nearest_neighbor_rule(rng)[0] for _ in range(20)]


class TestClassicalAutomata:
    def test_parity_ring_law(self):
        ca = elementary_rule(150)
        for length in range(3, 13):
            assert is_globally_invertible(ca, length) == (length % 3 != 0)

    @pytest.mark.parametrize("ca", [
        shift_automaton(2, 1),
        cellwise_permutation([2, 0, 1]),
        block_exchange_automaton(),
    ], ids=["shift", "cellwise", "block-exchange"])
    def test_quantized_supports_stay_in_the_bound(self, ca):
        rule = quantize_classical(ca)
        bound = Region.of(
            [(a - b - c,) for a in ca.scheme_fwd for b in ca.scheme_fwd for c in ca.scheme_inv]
        )
        assert rule.region.issubset(bound)
        assert validate_rule(rule).valid


class TestDecompositions:
    def test_block_dimensions_multiply_to_supercell(self):
        for rule in decomposition_suite():
            form = margolus_decompose(rule)
            assert int(np.prod(form.quadrant_dims)) == 4
            assert form.residual <= 1e-9
            assert rule_distance(form.to_rule(), rule) <= 1e-9

    def test_inverse_undoes_every_rule(self):
        torus = TorusSpec.of(6)
        for rule in decomposition_suite():
            inverse = invert(margolus_decompose(rule))
            assert inverse.region.issubset(Region.interval(-1, 1))
            product = global_unitary(inverse, torus) @ global_unitary(rule, torus)
            assert phase_distance(product, np.eye(64)) <= 1e-9

    def test_random_rules_classify_back(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            rule, kind = random_nearest_neighbor_rule(rng)
            result = classify_nn_qubit(rule)
            assert result.kind is kind
            assert result.residual <= 1e-9


class TestCliffordAcceptance:
    def test_half_width_one_search(self):
        found = search_clifford(1)
        assert all(spec.is_palindrome() for spec in found)
        assert PROTOTYPE in found
        assert all(gauge_ok(to_poly_matrix(spec, strict=False), spec.shift) for spec in found)

    @pytest.mark.parametrize("letter,first_width", [("x", 1), ("z", 3)])
    def test_prototype_light_cone(self, letter, first_width):
        history = evolve_history(PROTOTYPE, PauliString.single(letter), 30)
        # the edges move outwards by one site per step
        for t, p in enumerate(history[1:], start=1):
            assert len(p.letters) == first_width + 2 * (t - 1)
            assert p.phase % 2 == 0
            assert interior_filling(p.letters) in FILLINGS
        for t in range(5):
            assert dense_residual(PROTOTYPE, PauliString.single(letter, 4), t) <= 1e-9


class TestQuasiProbabilities:
    def test_reported_facts(self):
        assert quasi_probs(phase_gate_rule(np.pi)).is_deterministic()
        assert quasi_probs(phase_gate_rule(np.pi / 2)).negative_entries(1e-9) > 0
        assert compare_two_site(phase_gate_rule(np.pi), 0, 0).min_eigenvalue < -1e-6
        c, _ = wigner_basis().sum_constant()
        assert c == pytest.approx(2.0)


class TestWalkAcceptance:
    def test_hadamard_walk(self):
        spec = CoinedWalkSpec(HADAMARD, steps=25, length=64, start=20)
        rule = lift_coined_walk(HADAMARD)
        rows = walk_history(rule, spec)
        reference = coined_walk_reference(spec)
        deviation = max(float(np.max(np.abs(a - b))) for a, b in zip(rows, reference))
        assert deviation <= 1e-9
        assert global_sector_leak(rule, 5) <= 1e-9


class TestAlgebraOracles:
    def test_planted_block_structures(self):
        rng = np.random.default_rng(10)
        choices = [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1)]
        for seed in range(50):
            count = int(rng.integers(1, 4))
            blocks = [choices[int(k)] for k in rng.integers(len(choices), size=count)]
            while sum(n * m for n, m in blocks) > 8:
                blocks.pop()
            basis, _ = planted_algebra(blocks, seed)
            structure = decompose(MatrixAlgebra.spanned_by(basis))
            assert structure.block_sizes() == sorted(blocks, key=lambda b: (-b[0], -b[1]))

    def test_planted_conjugations(self):
        for seed in range(20):
            v = random_unitary(4, seed)
            images = np.stack([
                np.stack([v @ matrix_unit(4, i, j) @ v.conj().T for j in range(4)])
                for i in range(4)
            ])
            assert phase_distance(unitary_from_automorphism(images), v) <= 1e-9

    def test_support_algebras_of_commuting_families_commute(self):
        rng = np.random.default_rng(12)
        for seed in range(20):
            w = random_unitary(4, seed)
            left = [
                w @ np.kron(random_unitary(2, 1000 + 2 * seed + k), np.eye(2)) @ w.conj().T
                for k in range(2)
            ]
            right = [
                w @ np.kron(np.eye(2), random_unitary(2, 5000 + 2 * seed + k)) @ w.conj().T
                for k in range(2)
            ]
            outer = [
                rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(4)
            ]
            a1 = [np.kron(outer[k], left[k]) for k in range(2)]
            a2 = [np.kron(right[k], outer[2 + k]) for k in range(2)]
            s1 = generated_algebra(support_space(a1, "right", (2, 4)))
            s2 = generated_algebra(support_space(a2, "left", (4, 2)))
            for x in s1.basis:
                for y in s2.basis:
                    assert residual_norm(x @ y - y @ x) <= 1e-9
