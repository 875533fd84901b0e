"""
Operator-algebra engine tests

Validates:
- Block decomposition of planted algebras (sizes, multiplicities, basis change)
- Implementing unitaries of automorphisms, up to phase
- Support spaces, generated algebras and commuting factorizations
- Error paths for non-closed, non-commuting and non-Hermitian input
"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.algebra import (
    MatrixAlgebra,
    commuting_factorization,
    decompose,
    fix_global_phase,
    generated_algebra,
    homomorphism_multiplicity,
    phase_distance,
    residual_norm,
    spectral_projections,
    support_space,
    unitarity_residual,
    unitary_from_automorphism,
)
from app.core.errors import (
    AlgebraClosureError,
    HomomorphismError,
    NonCommutingError,
    NotHermitianError,
)
from app.core.operators import matrix_unit
from tests.helpers import SX, SZ, planted_algebra, random_unitary

BLOCK_CHOICES = [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1)]


@given(
    blocks=st.lists(st.sampled_from(BLOCK_CHOICES), min_size=1, max_size=3).filter(
        lambda b: sum(n * m for n, m in b) <= 7
    ),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_decompose_recovers_planted_blocks(blocks, seed):
    basis, _ = planted_algebra(blocks, seed)
    structure = decompose(MatrixAlgebra.spanned_by(basis))

    expected = sorted(blocks, key=lambda b: (-b[0], -b[1]))
    assert structure.block_sizes() == expected
    assert structure.dimension == sum(n * n for n, _ in blocks)
    assert unitarity_residual(structure.basis_change) <= 1e-8


def test_block_compress_expand_matches_central_cut():
    blocks = [(2, 2), (1, 1)]
    basis, _ = planted_algebra(blocks, seed=7)
    alg = MatrixAlgebra.spanned_by(basis)
    structure = decompose(alg)
    rng = np.random.default_rng(3)
    x = alg.generic_element(rng, hermitian=False)

    for index, block in enumerate(structure.blocks):
        z = block.central_projection
        cut = z @ x @ z
        rebuilt = structure.expand(structure.compress(x, index), index)
        assert residual_norm(rebuilt - cut) <= 1e-8


def test_diagonal_generator_gives_three_minimal_blocks():
    alg = generated_algebra([np.diag([1.0, 2.0, 3.0])])
    assert alg.dim == 3
    structure = decompose(alg)
    assert structure.block_sizes() == [(1, 1), (1, 1), (1, 1)]


def test_non_unital_algebra_is_completed_by_support_projection():
    alg = MatrixAlgebra.spanned_by([matrix_unit(2, 0, 0)])
    structure = decompose(alg)
    assert structure.block_sizes() == [(1, 1)]
    assert residual_norm(structure.unit - matrix_unit(2, 0, 0)) <= 1e-9
    assert unitarity_residual(structure.basis_change) <= 1e-9


def test_decompose_rejects_span_without_adjoints():
    with pytest.raises(AlgebraClosureError):
        decompose(MatrixAlgebra.spanned_by([matrix_unit(2, 0, 1)]))


def test_generated_algebra_closes_products_and_adjoints():
    assert generated_algebra([SX]).dim == 2
    assert generated_algebra([matrix_unit(2, 0, 1)]).dim == 4
    closure = generated_algebra([matrix_unit(3, 0, 1)]).closure_residuals()
    assert closure["adjoint"] <= 1e-9 and closure["product"] <= 1e-9


@given(seed=st.integers(min_value=0, max_value=10_000), d=st.integers(min_value=2, max_value=4))
def test_unitary_from_automorphism_recovers_planted_conjugation(seed, d):
    v = random_unitary(d, seed)
    images = np.stack([
        np.stack([v @ matrix_unit(d, i, j) @ v.conj().T for j in range(d)]) for i in range(d)
    ])
    recovered = unitary_from_automorphism(images)
    assert phase_distance(recovered, v) <= 1e-9
    assert residual_norm(recovered - fix_global_phase(recovered)) <= 1e-12


def test_unitary_from_automorphism_rejects_broken_images():
    images = np.stack([np.stack([matrix_unit(2, i, j) for j in range(2)]) for i in range(2)])
    images[0, 1] = 2.0 * images[0, 1]
    with pytest.raises(HomomorphismError):
        unitary_from_automorphism(images)


def test_homomorphism_multiplicity_of_amplification():
    images = np.stack([
        np.stack([np.kron(matrix_unit(2, i, j), np.eye(3)) for j in range(2)]) for i in range(2)
    ])
    assert homomorphism_multiplicity(images) == 3


def test_commuting_factorization_of_tensor_factors():
    left = MatrixAlgebra.spanned_by(
        [np.kron(matrix_unit(2, i, j), np.eye(3)) for i in range(2) for j in range(2)]
    )
    right = MatrixAlgebra.spanned_by(
        [np.kron(np.eye(2), matrix_unit(3, i, j)) for i in range(3) for j in range(3)]
    )
    table = commuting_factorization(left, right)
    assert table.n == (2,)
    assert table.m == (3,)
    assert table.table.tolist() == [[1]]
    assert table.total() == 6


def test_commuting_factorization_rejects_overlapping_algebras():
    alg = MatrixAlgebra.spanned_by([np.kron(SX, np.eye(2)), np.kron(SZ, np.eye(2))])
    with pytest.raises(NonCommutingError):
        commuting_factorization(alg, alg)


def test_support_space_of_product_terms():
    span_set = [np.kron(SX, np.eye(2)), np.kron(np.eye(2), SZ)]
    left = support_space(span_set, "left", (2, 2))
    right = support_space(span_set, "right", (2, 2))
    assert len(left) == 2
    assert len(right) == 2
    assert MatrixAlgebra(2, tuple(left)).contains(SX)
    assert MatrixAlgebra(2, tuple(right)).contains(SZ)


def test_spectral_projections_largest_first():
    pairs = spectral_projections(np.diag([1.0, 1.0, 3.0]))
    assert [round(value, 9) for value, _ in pairs] == [3.0, 1.0]
    assert residual_norm(pairs[1][1] - np.diag([1.0, 1.0, 0.0])) <= 1e-9


def test_spectral_projections_reject_non_hermitian():
    with pytest.raises(NotHermitianError):
        spectral_projections(matrix_unit(2, 0, 1))


def test_fix_global_phase_makes_largest_entry_positive():
    v = np.exp(0.4j) * np.array([0.2, -0.9j, 0.1])
    fixed = fix_global_phase(v)
    assert fixed[1].real > 0 and abs(fixed[1].imag) <= 1e-12
    assert phase_distance(fixed, v) <= 1e-12
