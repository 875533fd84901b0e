"""
app/core/structure.py - Structural decompositions of local rules

Implements:
1. Two-layer block (Margolus) decomposition via support algebras
2. Inversion of a block decomposition
3. Unilateral decomposition for the scheme {0, 1} and its inverse construction
4. Regrouping into supercells
5. Conditional unitaries and their simultaneous-diagonalization residual
6. Complete classification of nearest-neighbor qubit rules on a line
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.core.algebra import (
    MatrixAlgebra,
    decompose,
    fix_global_phase,
    generated_algebra,
    phase_distance,
    residual_norm,
    support_space,
    unitary_from_automorphism,
)
from app.core.errors import (
    HomomorphismError,
    NonUnitaryError,
    NotAutomorphismError,
    SchemeError,
    SupportStructureError,
)
from app.core.lattice import NeighborhoodScheme, Region, Site, TorusSpec
from app.core.operators import LocalOperator, matrix_unit, permute_tensor_factors
from app.core.rules import (
    LocalRule,
    apply_on_lattice,
    cellwise_rule,
    compose_rules,
    from_margolus,
    global_unitary,
    margolus_layout,
    phase_gate_rule,
    require_valid,
    rule_distance,
    shift_rule,
)
from app.core.settings import get_settings

logger = logging.getLogger(__name__)


def support_algebra(
    gens: Sequence[np.ndarray], region: Region, sub: Region, d: int
) -> MatrixAlgebra:
    """Algebra generated by the support of gens (operators on region) on the sites of sub."""
    order = list(sub.sites) + [x for x in region.sites if x not in sub]
    perm = [region.index(x) for x in order]
    moved = [permute_tensor_factors(g, [d] * len(region), perm) for g in gens]
    split = (d ** len(sub), d ** (len(region) - len(sub)))
    span = support_space(moved, "left", split)
    if not span:
        raise SupportStructureError("empty support space")
    return generated_algebra(span)


def _single_block(alg: MatrixAlgebra, label: str):
    structure = decompose(alg)
    if len(structure.blocks) != 1:
        raise SupportStructureError(
            f"support algebra on {label} has blocks {structure.block_sizes()}, expected one"
        )
    return structure


def _reduce_multiplicities(z: np.ndarray, mults: Sequence[int], ns: Sequence[int]) -> np.ndarray:
    """Normalized trace over the multiplicity factor of each slot (mult slow, n fast)."""
    dims = [x for pair in zip(mults, ns) for x in pair]
    t = z.reshape(tuple(dims) * 2)
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    rows = [next(letters) for _ in dims]
    cols = [next(letters) for _ in dims]
    for k in range(0, len(dims), 2):
        cols[k] = rows[k]
    out = "".join(rows[k] for k in range(1, len(dims), 2)) + "".join(
        cols[k] for k in range(1, len(dims), 2)
    )
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    size = int(np.prod(ns))
    return reduced.reshape(size, size) / float(np.prod(mults))


def _cell_product(
    rule_images: Dict[Site, np.ndarray], cells, index: Sequence[int], jndex: Sequence[int]
):
    out = None
    for c, i, j in zip(cells, index, jndex):
        m = rule_images[c][i, j]
        out = m if out is None else out @ m
    return out


def _digits(k: int, base: int, width: int) -> List[int]:
    out = []
    for _ in range(width):
        out.append(k % base)
        k //= base
    return out[::-1]


# ---------------------------------------------------------------------------
# Two-layer block decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MargolusForm:
    cell_dim: int
    s: int
    quadrant_dims: Tuple[int, ...]
    block_bases: Tuple[np.ndarray, ...]
    u: np.ndarray
    v: np.ndarray
    residual: float = 0.0

    @property
    def quadrants(self):
        return margolus_layout(self.s).quadrants

    def dims_by_quadrant(self) -> Dict[Tuple[int, ...], int]:
        return dict(zip(self.quadrants, self.quadrant_dims))

    def to_rule(self) -> LocalRule:
        return from_margolus(self.u, self.v, self.quadrant_dims, self.cell_dim, self.s)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cell_dim": self.cell_dim,
            "s": self.s,
            "quadrants": [
                {"q": list(q), "n": n} for q, n in zip(self.quadrants, self.quadrant_dims)
            ],
            "block_bases": list(self.block_bases),
            "u": self.u,
            "v": self.v,
            "reconstruction_residual": self.residual,
        }


def margolus_decompose(rule: LocalRule) -> MargolusForm:
    """Block unitaries (u, v) and quadrant dimensions of a nearest-neighbor rule."""
    d, s = rule.cell_dim, rule.s
    layout = margolus_layout(s)
    if not rule.region.issubset(layout.neighborhood):
        raise SchemeError(
            f"scheme {rule.region.to_list()} is wider than nearest neighbors; regroup first"
        )
    local = rule.widened(layout.neighborhood)
    window = layout.window
    cells = layout.cube.sites
    block = d ** len(cells)

    cell_images: Dict[Site, np.ndarray] = {}
    for c in cells:
        cell_images[c] = np.stack([
            np.stack([
                LocalOperator(local.region, local.images[i, j], d).translate(c).embed(window).matrix
                for j in range(d)
            ])
            for i in range(d)
        ])
    gens = [np.eye(d ** len(window), dtype=complex)]
    for c in cells:
        gens.extend(cell_images[c].reshape((d * d,) + cell_images[c].shape[2:]))

    structures = []
    for q, slot in zip(layout.quadrants, layout.slot_regions):
        alg = support_algebra(gens, window, slot, d)
        structures.append(_single_block(alg, f"quadrant {q}"))
    dims = tuple(st.blocks[0].n for st in structures)
    mults = tuple(st.blocks[0].multiplicity for st in structures)
    if int(np.prod(dims)) != block:
        raise SupportStructureError(
            f"quadrant dims {dims} multiply to {int(np.prod(dims))}, not {block}"
        )
    bases = tuple(st.basis_change for st in structures)
    logger.info("Quadrant dims %s for rule on scheme %s", dims, rule.region.to_list())

    concat = layout.concat_sites
    perm = [window.index(x) for x in concat]
    w_all = bases[0]
    for w in bases[1:]:
        w_all = np.kron(w_all, w)
    psi = np.zeros((block, block, block, block), dtype=complex)
    for big_i in range(block):
        index = _digits(big_i, d, len(cells))
        for big_j in range(block):
            jndex = _digits(big_j, d, len(cells))
            image = _cell_product(cell_images, cells, index, jndex)
            moved = permute_tensor_factors(image, [d] * len(window), perm)
            psi[big_i, big_j] = _reduce_multiplicities(w_all.conj().T @ moved @ w_all, mults, dims)
    u = unitary_from_automorphism(psi)

    chi = np.zeros((block, block, block, block), dtype=complex)
    for big_k in range(block):
        ks = np.unravel_index(big_k, dims)
        for big_l in range(block):
            ls = np.unravel_index(big_l, dims)
            acc = np.eye(block, dtype=complex)
            for w, m, n, k, l in zip(bases, mults, dims, ks, ls):
                acc = acc @ (w @ np.kron(np.eye(m), matrix_unit(n, k, l)) @ w.conj().T)
            chi[big_k, big_l] = acc
    v = unitary_from_automorphism(chi)

    rebuilt = from_margolus(u, v, dims, d, s)
    residual = rule_distance(rebuilt, rule)
    if residual > get_settings().tolerance:
        raise SupportStructureError(f"block unitaries reproduce the rule only to {residual:.3e}")
    return MargolusForm(d, s, dims, bases, u, v, residual)


def _slot_permutation(old_dims: Sequence[int], new_of_old: Sequence[int]) -> np.ndarray:
    """Matrix taking the new slot order to the old one; new slot new_of_old[a] holds old slot a."""
    new_dims = [0] * len(old_dims)
    for a, b in enumerate(new_of_old):
        new_dims[b] = old_dims[a]
    total = int(np.prod(old_dims))
    flat_new = np.arange(total).reshape(new_dims).transpose(list(new_of_old)).reshape(-1)
    p = np.zeros((total, total), dtype=complex)
    p[np.arange(total), flat_new] = 1.0
    return p


def invert(form: MargolusForm) -> LocalRule:
    """Inverse rule: the block unitaries become (v^dag, u^dag) with quadrants reflected."""
    quads = list(form.quadrants)
    new_of_old = [quads.index(tuple(-c for c in q)) for q in quads]
    p = _slot_permutation(form.quadrant_dims, new_of_old)
    u_new = p.conj().T @ form.v.conj().T
    v_new = form.u.conj().T @ p
    dims_new = tuple(form.quadrant_dims[quads.index(tuple(-c for c in q))] for q in quads)
    return from_margolus(u_new, v_new, dims_new, form.cell_dim, form.s)


# ---------------------------------------------------------------------------
# Unilateral rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnilateralForm:
    n0: int
    n1: int
    u: np.ndarray
    v: np.ndarray

    @property
    def cell_dim(self) -> int:
        return self.n0 * self.n1


def unilateral_decompose(rule: LocalRule) -> UnilateralForm:
    d = rule.cell_dim
    pair = Region.interval(0, 1)
    if rule.s != 1 or not rule.region.issubset(pair):
        raise SchemeError(
            f"unilateral decomposition needs scheme within {{0, 1}}, got {rule.region.to_list()}"
        )
    local = rule.widened(pair)
    gens = [np.eye(d * d, dtype=complex)] + [local.images[i, j] for i in range(d) for j in range(d)]
    st0 = _single_block(generated_algebra(support_space(gens, "left", (d, d))), "site 0")
    st1 = _single_block(generated_algebra(support_space(gens, "right", (d, d))), "site 1")
    n0, n1 = st0.blocks[0].n, st1.blocks[0].n
    if n0 * n1 != d:
        raise SupportStructureError(f"support dims {n0} x {n1} do not factor cell dim {d}")
    w0, w1 = st0.basis_change, st1.basis_change
    m0, m1 = st0.blocks[0].multiplicity, st1.blocks[0].multiplicity

    w = np.kron(w0, w1)
    psi = np.stack([
        np.stack([
            _reduce_multiplicities(w.conj().T @ local.images[i, j] @ w, (m0, m1), (n0, n1))
            for j in range(d)
        ])
        for i in range(d)
    ])
    u = unitary_from_automorphism(psi)

    chi = np.zeros((d, d, d, d), dtype=complex)
    for big_k in range(d):
        k1, k0 = divmod(big_k, n0)
        for big_l in range(d):
            l1, l0 = divmod(big_l, n0)
            right = w1 @ np.kron(np.eye(m1), matrix_unit(n1, k1, l1)) @ w1.conj().T
            left = w0 @ np.kron(np.eye(m0), matrix_unit(n0, k0, l0)) @ w0.conj().T
            chi[big_k, big_l] = right @ left
    v = unitary_from_automorphism(chi)
    logger.info("Unilateral split n0=%d n1=%d", n0, n1)
    return UnilateralForm(n0, n1, u, v)


def from_unilateral(form: UnilateralForm) -> LocalRule:
    """T0(X) = sum (u X u^dag)_{(k0 k1),(l0 l1)} v(1 (x) E_k0l0)v^dag (x) v(E_k1l1 (x) 1)v^dag."""
    n0, n1, d = form.n0, form.n1, form.cell_dim
    u, v = form.u, form.v
    phi0 = np.stack([
        np.stack([v @ np.kron(np.eye(n1), matrix_unit(n0, k, l)) @ v.conj().T for l in range(n0)])
        for k in range(n0)
    ])
    phi1 = np.stack([
        np.stack([v @ np.kron(matrix_unit(n1, k, l), np.eye(n0)) @ v.conj().T for l in range(n1)])
        for k in range(n1)
    ])
    stack = np.zeros((d, d, d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            xp = (u @ matrix_unit(d, i, j) @ u.conj().T).reshape(n0, n1, n0, n1)
            stack[i, j] = np.einsum("abcd,acXY,bdZW->XZYW", xp, phi0, phi1).reshape(d * d, d * d)
    rule = LocalRule(d, NeighborhoodScheme(Region.interval(0, 1)), stack)
    return require_valid(rule.trimmed())


# ---------------------------------------------------------------------------
# Supercells
# ---------------------------------------------------------------------------

def regroup(rule: LocalRule, k: int) -> LocalRule:
    """Rule on supercells of k consecutive cells (one-dimensional lattices)."""
    if rule.s != 1:
        raise SchemeError("regrouping is implemented for one-dimensional lattices")
    if k < 1:
        raise ValueError("supercell size must be positive")
    if k == 1:
        return rule
    d = rule.cell_dim
    big = d ** k
    lo, hi = rule.region.bounds()
    first = lo[0] // k
    last = (k - 1 + hi[0]) // k
    target = Region.interval(first * k, last * k + k - 1)
    cells = Region.interval(0, k - 1)
    stack = np.zeros((big, big) + (big ** (last - first + 1),) * 2, dtype=complex)
    for i in range(big):
        for j in range(big):
            obs = LocalOperator(cells, matrix_unit(big, i, j), d)
            stack[i, j] = apply_on_lattice(rule, obs).embed(target).matrix
    scheme = NeighborhoodScheme(Region.interval(first, last))
    return LocalRule(big, scheme, stack).trimmed()


# ---------------------------------------------------------------------------
# Conditional unitaries
# ---------------------------------------------------------------------------

def conditional_unitaries(rule: LocalRule) -> np.ndarray:
    """U[mu, nu] with T0(A) = sum |mu><mu| (x) U^dag A U (x) |nu><nu| on {-1, 0, 1}."""
    d = rule.cell_dim
    window = Region.interval(-1, 1)
    if rule.s != 1 or not rule.region.issubset(window):
        raise SchemeError("conditional unitaries need a nearest-neighbor rule on a line")
    local = rule.widened(window)
    images = local.images.reshape(d, d, d, d, d, d, d, d)
    out = np.zeros((d, d, d, d), dtype=complex)
    worst = 0.0
    for mu in range(d):
        for nu in range(d):
            block = images[:, :, mu, :, nu, mu, :, nu]
            try:
                out[mu, nu] = unitary_from_automorphism(block).conj().T
            except (HomomorphismError, NotAutomorphismError, NonUnitaryError) as exc:
                raise SupportStructureError(
                    f"block ({mu}, {nu}) is not an automorphism of the middle cell"
                ) from exc
    for i in range(d):
        for j in range(d):
            rebuilt = sum(
                np.kron(
                    np.kron(
                        matrix_unit(d, mu, mu),
                        out[mu, nu].conj().T @ matrix_unit(d, i, j) @ out[mu, nu],
                    ),
                    matrix_unit(d, nu, nu),
                )
                for mu in range(d) for nu in range(d)
            )
            worst = max(worst, residual_norm(rebuilt - local.images[i, j]))
    if worst > get_settings().tolerance:
        raise SupportStructureError(
            f"rule is not block-conditional in this basis (residual {worst:.3e})"
        )
    return out


def diagonalization_residual(units: np.ndarray) -> float:
    """Largest commutator among U_00^dag U_{mu nu}; zero iff one rotation diagonalizes all."""
    d = units.shape[0]
    ref = units[0, 0].conj().T
    rel = [ref @ units[mu, nu] for mu in range(d) for nu in range(d)]
    worst = 0.0
    for a in rel:
        for b in rel:
            worst = max(worst, residual_norm(a @ b - b @ a))
    return worst


# ---------------------------------------------------------------------------
# Nearest-neighbor qubit classification
# ---------------------------------------------------------------------------

class RuleKind(str, Enum):
    """Canonical families of nearest-neighbor qubit rules."""
    CELLWISE_ROTATION = "cellwise-rotation"
    RIGHT_SHIFT_COMPOSED = "right-shift-composed"
    LEFT_SHIFT_COMPOSED = "left-shift-composed"
    PHASE_GATE_COMPOSED = "phase-gate-composed"


@dataclass(frozen=True)
class ClassificationResult:
    kind: RuleKind
    cellwise: np.ndarray
    phase: Optional[float] = None
    basis_change: Optional[np.ndarray] = None
    residual: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "cellwise": self.cellwise,
            "phase": self.phase,
            "basis_change": self.basis_change if self.basis_change is not None else np.eye(2),
            "residual": self.residual,
        }


def _site_automorphism(rule: LocalRule, site: int) -> np.ndarray:
    """W with T0(A) = W^dag A W at the given site."""
    d = rule.cell_dim
    target = Region.of([site], s=1)
    images = np.stack([
        np.stack([rule.image(i, j).reduce_to(target).matrix for j in range(d)]) for i in range(d)
    ])
    return fix_global_phase(unitary_from_automorphism(images).conj().T)


def _hermitian_generator(alg: MatrixAlgebra) -> np.ndarray:
    """Traceless Hermitian element of largest norm taken from the basis."""
    best, best_norm = None, -1.0
    n = alg.ambient_dim
    for b in alg.basis:
        for h in (0.5 * (b + b.conj().T), 0.5j * (b.conj().T - b)):
            h = h - np.trace(h) / n * np.eye(n)
            norm = float(np.linalg.norm(h))
            if norm > best_norm:
                best, best_norm = h, norm
    return best


def canonical_rule(result: ClassificationResult) -> LocalRule:
    if result.kind is RuleKind.CELLWISE_ROTATION:
        return cellwise_rule(result.cellwise)
    if result.kind is RuleKind.RIGHT_SHIFT_COMPOSED:
        return compose_rules(shift_rule(2, 1), cellwise_rule(result.cellwise))
    if result.kind is RuleKind.LEFT_SHIFT_COMPOSED:
        return compose_rules(shift_rule(2, -1), cellwise_rule(result.cellwise))
    b = result.basis_change
    return compose_rules(
        cellwise_rule(b.conj().T),
        compose_rules(phase_gate_rule(result.phase), cellwise_rule(result.cellwise)),
    )


def classify_nn_qubit(rule: LocalRule, torus: Optional[TorusSpec] = None) -> ClassificationResult:
    """Assign a valid nearest-neighbor qubit rule to its canonical family.

    Logic:
    - support algebras of T0(A0) on the sites -1 and +1
    - one side trivial: the rule is a cellwise rotation or a shift composed with one
    - both sides abelian: diagonalize them, read off the conditional unitaries
      and the bond phase
    """
    window = Region.interval(-1, 1)
    if rule.cell_dim != 2 or rule.s != 1 or not rule.region.issubset(window):
        raise SchemeError("classification covers nearest-neighbor qubit rules on a line")
    require_valid(rule)
    local = rule.widened(window)
    gens = [np.eye(8, dtype=complex)] + [local.images[i, j] for i in range(2) for j in range(2)]
    left = support_algebra(gens, window, Region.of([-1], s=1), 2)
    right = support_algebra(gens, window, Region.of([1], s=1), 2)
    dims = (left.dim, right.dim)
    logger.debug("Side support algebra dims %s", dims)

    if dims == (1, 1):
        result = ClassificationResult(RuleKind.CELLWISE_ROTATION, _site_automorphism(local, 0))
    elif dims == (1, 4):
        result = ClassificationResult(RuleKind.RIGHT_SHIFT_COMPOSED, _site_automorphism(local, 1))
    elif dims == (4, 1):
        result = ClassificationResult(RuleKind.LEFT_SHIFT_COMPOSED, _site_automorphism(local, -1))
    elif dims == (2, 2):
        _, b = linalg.eigh(_hermitian_generator(right))
        b = np.stack([fix_global_phase(b[:, k]) for k in range(2)], axis=1)
        rotated = compose_rules(cellwise_rule(b), compose_rules(rule, cellwise_rule(b.conj().T)))
        units = conditional_unitaries(rotated)
        c = units[0, 0]
        rel = c.conj().T @ units[0, 1]
        phi = float(np.mod(np.angle(rel[1, 1] / rel[0, 0]), 2 * np.pi))
        result = ClassificationResult(RuleKind.PHASE_GATE_COMPOSED, b @ c, phi, b)
    else:
        raise SupportStructureError(f"side support algebras of dims {dims} fit no known family")

    residual = phase_distance(
        global_unitary(rule, torus or TorusSpec.of(6)),
        global_unitary(canonical_rule(result), torus or TorusSpec.of(6)),
    )
    logger.info("Classified rule as %s (residual %.3e)", result.kind.value, residual)
    return ClassificationResult(
        result.kind, result.cellwise, result.phase, result.basis_change, residual
    )
