"""
Clifford rule tests

Validates:
- Pauli string arithmetic with exact phases
- Symplectic validation and the exhaustive search (palindromes, determinant gauge)
- Polynomial composition law with the fixed twist matrix
- Symbolic evolution against the dense engine on a ring
"""

import pytest

from app.core.clifford import (
    COMPOSITION_TWIST,
    PROTOTYPE,
    CliffordRuleSpec,
    PauliString,
    apply_spec,
    clifford_rule,
    compose_specs,
    dense_residual,
    evolve_history,
    evolve_pauli,
    gauge_ok,
    interior_filling,
    light_cone_report,
    relabel_xz,
    search_clifford,
    spaced,
    symplectic_form,
    to_poly_matrix,
    validate_clifford,
)
from app.core.errors import CliffordSpecError
from app.core.laurent import LaurentPolyF2
from app.core.rules import validate_rule

RIGHT_SHIFT = CliffordRuleSpec(0, "x", "y", shift=1)


class TestPauliStrings:
    def test_product_carries_phase(self):
        assert PauliString.single("x") @ PauliString.single("y") == PauliString(0, "z", 1)
        assert PauliString.single("y") @ PauliString.single("x") == PauliString(0, "z", 3)

    def test_identity_padding_is_stripped(self):
        p = PauliString(3, "00x0")
        assert (p.offset, p.letters) == (5, "x")
        assert PauliString(4, "000").is_identity

    def test_symplectic_form(self):
        assert symplectic_form(PauliString.single("x"), PauliString.single("z")) == 1
        assert symplectic_form(PauliString.single("x"), PauliString.single("z", 1)) == 0
        assert PauliString(0, "xx").commutes_with(PauliString(0, "zz"))

    def test_unknown_letters(self):
        with pytest.raises(CliffordSpecError):
            PauliString(0, "xq")


class TestSearch:
    def test_prototype_is_valid(self):
        assert validate_clifford(PROTOTYPE)
        assert validate_clifford(relabel_xz(PROTOTYPE))
        assert validate_clifford(spaced(PROTOTYPE, 2))

    def test_single_site_rules(self):
        assert len(search_clifford(0)) == 6

    def test_half_width_one_gives_centered_palindromes(self):
        found = search_clifford(1)
        assert found
        assert all(spec.is_palindrome() for spec in found)
        assert PROTOTYPE in found
        assert all(validate_clifford(spec) for spec in found)

    def test_every_solution_passes_the_gauge(self):
        for spec in search_clifford(1):
            assert gauge_ok(to_poly_matrix(spec, strict=False), spec.shift)

    def test_spec_length_is_checked(self):
        with pytest.raises(CliffordSpecError):
            CliffordRuleSpec(1, "z", "zxz")
        with pytest.raises(CliffordSpecError):
            CliffordRuleSpec(0, "x", "y", signs=(1, 2))


class TestPolynomials:
    def test_prototype_matrix(self):
        matrix = to_poly_matrix(PROTOTYPE)
        assert matrix.det() == LaurentPolyF2.monomial(0)
        assert matrix.d.exponents() == [-1, 1]

    def test_shift_sets_the_gauge(self):
        matrix = to_poly_matrix(RIGHT_SHIFT)
        assert matrix.det().monomial_degree() == 2

    @pytest.mark.parametrize("outer,inner", [
        (PROTOTYPE, RIGHT_SHIFT),
        (PROTOTYPE, PROTOTYPE),
        (RIGHT_SHIFT, relabel_xz(PROTOTYPE)),
    ])
    def test_composition_law(self, outer, inner):
        composite = compose_specs(outer, inner)
        expected = to_poly_matrix(outer) @ COMPOSITION_TWIST @ to_poly_matrix(inner)
        assert to_poly_matrix(composite) == expected

    def test_shift_after_prototype_moves_the_center(self):
        composite = compose_specs(PROTOTYPE, RIGHT_SHIFT)
        assert composite == CliffordRuleSpec(1, "0z0", "zxz", shift=1)


class TestEvolution:
    def test_prototype_maps_z_to_zyz(self):
        assert apply_spec(PROTOTYPE, PauliString.single("z")) == PauliString(-1, "zyz")

    def test_history_opens_a_light_cone(self):
        history = evolve_history(PROTOTYPE, PauliString.single("x"), 4)
        assert [p.letters for p in history[:3]] == ["x", "z", "zyz"]
        assert [len(p.letters) for p in history[2:]] == [3, 5, 7]
        assert history[3].letters == "zxxxz"
        assert history[4].letters == "zy0z0yz"

    def test_evolve_pauli_is_the_last_history_entry(self):
        start = PauliString.single("z", 3)
        assert evolve_pauli(PROTOTYPE, start, 6) == evolve_history(PROTOTYPE, start, 6)[-1]
        assert evolve_pauli(PROTOTYPE, start, 0) == start
        with pytest.raises(ValueError):
            evolve_pauli(PROTOTYPE, start, -1)

    @pytest.mark.parametrize("letter", ["x", "y", "z"])
    def test_symbolic_matches_dense(self, letter):
        start = PauliString.single(letter, 2)
        for t in range(5):
            assert dense_residual(PROTOTYPE, start, t) <= 1e-9

    def test_dense_rule_is_valid(self):
        assert validate_rule(clifford_rule(PROTOTYPE)).valid

    def test_light_cone_rows(self):
        rows = light_cone_report(PROTOTYPE, PauliString.single("x"), 3)
        assert [r["t"] for r in rows] == [0, 1, 2, 3]
        assert rows[2]["filling"] == "empty"
        assert {r["filling"] for r in rows} <= {
            "empty", "identity", "y", "xy", "yx", "irregular"
        }

    def test_interior_filling(self):
        assert interior_filling("zx0x0xz") == "irregular"
        assert interior_filling("zy000yz") == "identity"
        assert interior_filling("zyyyyz") == "y"
        assert interior_filling("zyxyxyz") == "xy"
