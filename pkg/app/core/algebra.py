"""
app/core/algebra.py - Finite-dimensional operator algebra engine

Implements:
1. Hilbert-Schmidt orthonormalization and span membership
2. Support spaces of operator sets on a bipartite tensor product
3. Generated *-algebras and their block (Wedderburn) decomposition
4. Multiplicity tables for commuting pairs of algebras
5. Implementing unitaries of automorphisms of M_d
6. Spectral projections with eigenvalue clustering

All matrices are dense complex numpy arrays. Tensor factors are ordered with
the left factor varying slowest (np.kron convention).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from app.core.errors import (
    AlgebraClosureError,
    AlgebraStructureError,
    DimensionMismatchError,
    HomomorphismError,
    NonCommutingError,
    NonUnitaryError,
    NotAutomorphismError,
    NotHermitianError,
)
from app.core.settings import get_settings

logger = logging.getLogger(__name__)

Matrix = np.ndarray
ImageMap = Union[np.ndarray, Mapping[Tuple[int, int], np.ndarray]]

# Relative threshold for deciding whether two entries tie for largest magnitude
_PHASE_TIE = 1e-8


def as_matrix(a) -> Matrix:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionMismatchError("matrix has non-finite entries")
    return m


def tensor(*factors) -> Matrix:
    """Kronecker product of square matrices, left factor slowest."""
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, as_matrix(f))
    return out


def operator_norm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(linalg.svdvals(a)[0])


def residual_norm(a) -> float:
    """Spectral norm of a residual.

    The Frobenius norm bounds the spectral norm from above, so it is returned
    directly whenever it already sits below the tolerance.
    """
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    fro = float(np.linalg.norm(a))
    if fro <= get_settings().tolerance:
        return fro
    return operator_norm(a)


def unitarity_residual(u: Matrix) -> float:
    u = np.asarray(u, dtype=complex)
    return residual_norm(u.conj().T @ u - np.eye(u.shape[1]))


def require_unitary(u, name: str = "matrix") -> Matrix:
    u = as_matrix(u)
    residual = unitarity_residual(u)
    if residual > get_settings().tolerance:
        raise NonUnitaryError(name, residual)
    return u


def fix_global_phase(v: Matrix) -> Matrix:
    """Rescale by a unit phase so the first largest-magnitude entry is real positive."""
    v = np.asarray(v, dtype=complex)
    flat = v.reshape(-1)
    mags = np.abs(flat)
    top = mags.max() if mags.size else 0.0
    if top == 0.0:
        return v.copy()
    idx = int(np.flatnonzero(mags >= top * (1.0 - _PHASE_TIE))[0])
    return v * (np.conj(flat[idx]) / mags[idx])


def phase_distance(a: Matrix, b: Matrix) -> float:
    """min over theta of ||a - e^{i theta} b||."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return residual_norm(a - phase * b)


def _rank_cutoff(singular_values: np.ndarray) -> float:
    top = float(singular_values[0]) if singular_values.size else 0.0
    return get_settings().rank_tolerance * max(top, 1.0)


def _column_basis(stacked: np.ndarray) -> np.ndarray:
    """Orthonormal basis (as columns) of the column space of `stacked`."""
    if stacked.size == 0:
        return np.zeros((stacked.shape[0], 0), dtype=complex)
    u, s, _ = linalg.svd(stacked, full_matrices=False)
    keep = s >= _rank_cutoff(s)
    return u[:, keep]


def hs_orthonormalize(mats: Sequence[Matrix]) -> List[Matrix]:
    """Orthonormal basis of span(mats) under the trace inner product tr(A^dag B)."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if not mats:
        return []
    dim = mats[0].shape[0]
    frame = _column_basis(np.stack([m.reshape(-1) for m in mats], axis=1))
    return [frame[:, k].reshape(dim, dim) for k in range(frame.shape[1])]


@dataclass(frozen=True)
class MatrixAlgebra:
    ambient_dim: int
    basis: Tuple[Matrix, ...]
    _frame: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for b in self.basis:
            if b.shape != (self.ambient_dim, self.ambient_dim):
                raise DimensionMismatchError(
                    f"basis element shape {b.shape} does not match ambient dim {self.ambient_dim}"
                )
        if self.basis:
            frame = np.stack([b.reshape(-1) for b in self.basis], axis=1)
        else:
            frame = np.zeros((self.ambient_dim ** 2, 0), dtype=complex)
        object.__setattr__(self, "_frame", frame)

    @classmethod
    def spanned_by(cls, mats: Sequence[Matrix]) -> "MatrixAlgebra":
        mats = [as_matrix(m) for m in mats]
        if not mats:
            raise DimensionMismatchError("cannot infer ambient dimension from an empty set")
        return cls(mats[0].shape[0], tuple(hs_orthonormalize(mats)))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, x: Matrix) -> Matrix:
        vec = np.asarray(x, dtype=complex).reshape(-1)
        coeffs = self._frame.conj().T @ vec
        return (self._frame @ coeffs).reshape(self.ambient_dim, self.ambient_dim)

    def distance(self, x: Matrix) -> float:
        return residual_norm(np.asarray(x, dtype=complex) - self.project(x))

    def contains(self, x: Matrix, tol: Optional[float] = None) -> bool:
        limit = get_settings().tolerance if tol is None else tol
        return self.distance(x) <= limit

    def closure_residuals(self) -> Dict[str, float]:
        adjoint = max((self.distance(b.conj().T) for b in self.basis), default=0.0)
        product = max(
            (self.distance(a @ b) for a in self.basis for b in self.basis), default=0.0
        )
        return {"adjoint": adjoint, "product": product}

    def generic_element(self, rng: np.random.Generator, hermitian: bool = True) -> Matrix:
        coeffs = rng.standard_normal(self.dim)
        if not hermitian:
            coeffs = coeffs + 1j * rng.standard_normal(self.dim)
        start = np.zeros((self.ambient_dim,) * 2, complex)
        x = sum((c * b for c, b in zip(coeffs, self.basis)), start)
        if hermitian:
            # adjoint-closed span: the Hermitian part stays inside
            x = 0.5 * (x + x.conj().T)
        return x


def _realign(x: Matrix, d1: int, d2: int) -> np.ndarray:
    """Operator-Schmidt realignment: R[(i1,j1),(i2,j2)] = X[(i1,i2),(j1,j2)]."""
    return x.reshape(d1, d2, d1, d2).transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2)


def support_space(span_set: Sequence[Matrix], side: str, split: Tuple[int, int]) -> List[Matrix]:
    """Orthonormal basis of the support space of span_set on one tensor factor.

    Every input X on B1 (x) B2 expands as sum_mu a_mu (x) e_mu; the left support
    is the span of all coefficients a_mu, the right support the analogous span
    on B2.
    """
    d1, d2 = split
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got '{side}'")
    blocks = []
    for x in span_set:
        x = as_matrix(x)
        if x.shape[0] != d1 * d2:
            raise DimensionMismatchError(
                f"element of dim {x.shape[0]} does not match split {d1}x{d2}"
            )
        r = _realign(x, d1, d2)
        blocks.append(r if side == "left" else r.T)
    if not blocks:
        return []
    frame = _column_basis(np.concatenate(blocks, axis=1))
    n = d1 if side == "left" else d2
    return [frame[:, k].reshape(n, n) for k in range(frame.shape[1])]


def generated_algebra(span_set: Sequence[Matrix]) -> MatrixAlgebra:
    """Smallest *-closed, product-closed subspace containing span_set."""
    mats = [as_matrix(m) for m in span_set]
    if not mats:
        raise DimensionMismatchError("cannot generate an algebra from an empty set")
    dim = mats[0].shape[0]
    for m in mats:
        if m.shape[0] != dim:
            raise DimensionMismatchError("generators must share one dimension")
    gens = hs_orthonormalize(mats + [m.conj().T for m in mats])
    basis = list(gens)
    passes = 0
    while len(basis) < dim * dim:
        passes += 1
        grown = hs_orthonormalize(basis + [g @ b for g in gens for b in basis])
        if len(grown) == len(basis):
            break
        basis = grown
    logger.debug("Generated algebra of dim %d in M_%d after %d passes", len(basis), dim, passes)
    return MatrixAlgebra(dim, tuple(basis))


@dataclass(frozen=True)
class AlgebraBlock:
    n: int
    multiplicity: int
    central_projection: Matrix
    offset: int  # first column of this block inside basis_change


@dataclass(frozen=True)
class AlgebraBlockStructure:
    ambient_dim: int
    blocks: Tuple[AlgebraBlock, ...]
    basis_change: Matrix
    unit: Matrix

    @property
    def dimension(self) -> int:
        return sum(b.n * b.n for b in self.blocks)

    def block_sizes(self) -> List[Tuple[int, int]]:
        return [(b.n, b.multiplicity) for b in self.blocks]

    def compress(self, x: Matrix, index: int = 0) -> Matrix:
        """The M_n component of an algebra element in block `index` (first copy)."""
        b = self.blocks[index]
        w = self.basis_change[:, b.offset:b.offset + b.n]
        return w.conj().T @ np.asarray(x, dtype=complex) @ w

    def expand(self, m: Matrix, index: int = 0) -> Matrix:
        """Inverse of compress: W (1_mult (x) m) W^dag inside block `index`."""
        b = self.blocks[index]
        w = self.basis_change[:, b.offset:b.offset + b.multiplicity * b.n]
        return w @ np.kron(np.eye(b.multiplicity), as_matrix(m)) @ w.conj().T


def _support_projection(basis: Sequence[Matrix], dim: int) -> Matrix:
    acc = np.zeros((dim, dim), dtype=complex)
    for b in basis:
        acc += b @ b.conj().T
    vals, vecs = linalg.eigh(0.5 * (acc + acc.conj().T))
    keep = vals > get_settings().rank_tolerance * max(float(vals.max()) if vals.size else 0.0, 1.0)
    v = vecs[:, keep]
    return v @ v.conj().T


def _center(alg: MatrixAlgebra, rng: np.random.Generator) -> List[Matrix]:
    """Basis of the center of `alg`.

    Two generic elements and their adjoints generate a semisimple algebra, so
    commuting with them is tested first and then confirmed against the basis.
    """
    generators = []
    for _ in range(2):
        g = alg.generic_element(rng, hermitian=False)
        generators.extend([g, g.conj().T])
    columns = []
    for b in alg.basis:
        columns.append(np.concatenate([(b @ p - p @ b).reshape(-1) for p in generators]))
    system = np.stack(columns, axis=1)
    _, s, vh = linalg.svd(system, full_matrices=True)
    rank = int(np.sum(s >= _rank_cutoff(s))) if s.size else 0
    null = vh[rank:].conj().T
    center = []
    for k in range(null.shape[1]):
        start = np.zeros((alg.ambient_dim,) * 2, complex)
        z = sum((c * b for c, b in zip(null[:, k], alg.basis)), start)
        center.append(z)
    tol = get_settings().tolerance
    for z in center:
        worst = max(residual_norm(z @ b - b @ z) for b in alg.basis)
        if worst > max(tol, 1e-7):
            raise AlgebraStructureError(f"center element fails to commute (residual {worst:.3e})")
    return center


def _cluster_projections(h: Matrix) -> List[Tuple[float, Matrix]]:
    gap = get_settings().spectral_gap
    vals, vecs = linalg.eigh(0.5 * (h + h.conj().T))
    groups: List[List[int]] = []
    for i, val in enumerate(vals):
        if groups and val - vals[groups[-1][-1]] <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    out = []
    for g in groups:
        v = vecs[:, g]
        out.append((float(np.mean(vals[g])), v @ v.conj().T))
    return out


def _orthonormal_range(p: Matrix) -> np.ndarray:
    vals, vecs = linalg.eigh(0.5 * (p + p.conj().T))
    v = vecs[:, vals > 0.5]
    # order vectors by their dominant computational basis index, then fix phases
    order = sorted(range(v.shape[1]), key=lambda k: _leading_index(v[:, k]))
    return np.stack([fix_global_phase(v[:, k]) for k in order], axis=1) if order else v


def _leading_index(vec: np.ndarray) -> int:
    mags = np.abs(vec)
    return int(np.flatnonzero(mags >= mags.max() * (1 - _PHASE_TIE))[0])


def _dominant_index(p: Matrix) -> int:
    diag = np.real(np.diag(p))
    return int(np.flatnonzero(diag >= diag.max() * (1 - _PHASE_TIE))[0])


def decompose(alg: MatrixAlgebra) -> AlgebraBlockStructure:
    """Block structure of a finite-dimensional *-algebra.

    Logic:
    - verify adjoint and product closure
    - adjoin the support projection when the unit is missing from the span
    - minimal central projections are spectral projections of a generic
      Hermitian central element
    - inside each central block, spectral projections of a generic Hermitian
      element give minimal projections; matrix units built from them fix the
      basis change
    """
    settings = get_settings()
    tol = settings.tolerance
    for test, value in alg.closure_residuals().items():
        if value > tol:
            raise AlgebraClosureError(test, value)

    dim = alg.ambient_dim
    unit = _support_projection(alg.basis, dim)
    if not alg.contains(unit):
        logger.debug("Adjoining support projection as unit (dim %d)", alg.dim)
        alg = MatrixAlgebra(dim, tuple(hs_orthonormalize(list(alg.basis) + [unit])))

    rng = np.random.default_rng(settings.seed)
    center = _center(alg, rng)
    h = np.zeros((dim, dim), dtype=complex)
    for z in center:
        h += rng.standard_normal() * 0.5 * (z + z.conj().T)
        h += rng.standard_normal() * 0.5j * (z.conj().T - z)

    central = []
    for _, q in _cluster_projections(h):
        z = unit @ q @ unit
        if np.real(np.trace(z)) > 0.5:
            central.append(z)

    raw_blocks = []
    for z in central:
        compressed = MatrixAlgebra.spanned_by([z @ b for b in alg.basis])
        n = int(round(np.sqrt(compressed.dim)))
        if n * n != compressed.dim:
            raise AlgebraStructureError(
                f"central block of dim {compressed.dim} is not a full matrix algebra"
            )
        rank = int(round(np.real(np.trace(z))))
        if rank % n:
            raise AlgebraStructureError(f"block rank {rank} is not a multiple of n={n}")
        raw_blocks.append((n, rank // n, z, compressed))
    raw_blocks.sort(key=lambda item: (-item[0], -item[1], _dominant_index(item[2])))

    columns = []
    blocks = []
    offset = 0
    for n, mult, z, compressed in raw_blocks:
        columns.append(_block_basis(compressed, z, n, mult, rng))
        blocks.append(AlgebraBlock(n=n, multiplicity=mult, central_projection=z, offset=offset))
        offset += n * mult
    complement = np.eye(dim) - unit
    if np.real(np.trace(complement)) > 0.5:
        columns.append(_orthonormal_range(complement))
    basis_change = np.concatenate(columns, axis=1)
    residual = unitarity_residual(basis_change)
    if residual > max(tol, 1e-7):
        raise AlgebraStructureError(f"basis change is not unitary (residual {residual:.3e})")

    structure = AlgebraBlockStructure(dim, tuple(blocks), basis_change, unit)
    logger.debug("Decomposed algebra: blocks=%s", structure.block_sizes())
    return structure


def _block_basis(
    block: MatrixAlgebra, z: Matrix, n: int, mult: int, rng: np.random.Generator
) -> np.ndarray:
    """Columns spanning range(z) so the block reads 1_mult (x) M_n (copy index slow)."""
    if n == 1:
        return _orthonormal_range(z)
    h = block.generic_element(rng, hermitian=True)
    minimal = []
    for _, q in _cluster_projections(h):
        e = z @ q @ z
        if np.real(np.trace(e)) > 0.5:
            minimal.append(e)
    if len(minimal) != n or any(int(round(np.real(np.trace(e)))) != mult for e in minimal):
        raise AlgebraStructureError(
            "generic element failed to split the block into minimal projections"
        )
    minimal.sort(key=_dominant_index)
    g = block.generic_element(rng, hermitian=False)
    first = minimal[0]
    units = [first]
    for e in minimal[1:]:
        y = e @ g @ first
        c = np.real(np.trace(y.conj().T @ y)) / mult
        if c <= get_settings().rank_tolerance:
            raise AlgebraStructureError("degenerate matrix unit while building block basis")
        units.append(y / np.sqrt(c))
    vectors = _orthonormal_range(first)
    cols = [units[k] @ vectors[:, j] for j in range(mult) for k in range(n)]
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class MultiplicityTable:
    n: Tuple[int, ...]
    m: Tuple[int, ...]
    table: np.ndarray

    def total(self) -> int:
        return int(sum(
            self.table[i, j] * self.n[i] * self.m[j]
            for i in range(len(self.n))
            for j in range(len(self.m))
        ))


def commuting_factorization(alg_a: MatrixAlgebra, alg_b: MatrixAlgebra) -> MultiplicityTable:
    """Integer multiplicities r_{mu nu} of a commuting pair of algebras."""
    if alg_a.ambient_dim != alg_b.ambient_dim:
        raise DimensionMismatchError("algebras live on different spaces")
    worst = max(
        (residual_norm(a @ b - b @ a) for a in alg_a.basis for b in alg_b.basis), default=0.0
    )
    if worst > get_settings().tolerance:
        raise NonCommutingError(worst)
    sa = decompose(alg_a)
    sb = decompose(alg_b)
    table = np.zeros((len(sa.blocks), len(sb.blocks)), dtype=int)
    for i, ba in enumerate(sa.blocks):
        for j, bb in enumerate(sb.blocks):
            raw = np.real(np.trace(ba.central_projection @ bb.central_projection)) / (ba.n * bb.n)
            r = int(round(raw))
            if abs(raw - r) > 1e-6:
                raise AlgebraStructureError(f"non-integer multiplicity {raw:.6f}")
            table[i, j] = r
    result = MultiplicityTable(
        n=tuple(b.n for b in sa.blocks), m=tuple(b.n for b in sb.blocks), table=table
    )
    joint = int(round(np.real(np.trace(sa.unit @ sb.unit))))
    if result.total() != joint:
        raise AlgebraStructureError(f"multiplicities sum to {result.total()}, expected {joint}")
    return result


def image_stack(images: ImageMap) -> np.ndarray:
    """Normalize an image map to an array of shape (d, d, D, D)."""
    if isinstance(images, np.ndarray):
        stack = np.asarray(images, dtype=complex)
    else:
        keys = list(images.keys())
        d = max(max(i, j) for i, j in keys) + 1
        if len(keys) != d * d:
            raise DimensionMismatchError(f"expected {d * d} matrix-unit images, got {len(keys)}")
        first = as_matrix(images[keys[0]])
        stack = np.zeros((d, d) + first.shape, dtype=complex)
        for (i, j), m in images.items():
            stack[i, j] = as_matrix(m)
    if stack.ndim != 4 or stack.shape[0] != stack.shape[1] or stack.shape[2] != stack.shape[3]:
        raise DimensionMismatchError(f"image stack has shape {stack.shape}")
    return stack


def homomorphism_residual(images: ImageMap) -> float:
    """Largest violation of E_ij E_kl = delta_jk E_il, E_ij^dag = E_ji and sum E_ii = 1."""
    stack = image_stack(images)
    d, dim = stack.shape[0], stack.shape[2]
    worst = residual_norm(sum(stack[i, i] for i in range(d)) - np.eye(dim))
    for i in range(d):
        for j in range(d):
            worst = max(worst, residual_norm(stack[i, j].conj().T - stack[j, i]))
            for l in range(d):
                for k in range(d):
                    expected = stack[i, l] if j == k else 0.0
                    worst = max(worst, residual_norm(stack[i, j] @ stack[k, l] - expected))
    return worst


def homomorphism_multiplicity(images: ImageMap) -> int:
    """For a unital homomorphism M_d -> M_n return n / d, which must be an integer."""
    stack = image_stack(images)
    residual = homomorphism_residual(stack)
    if residual > get_settings().tolerance:
        raise HomomorphismError(residual)
    d, n = stack.shape[0], stack.shape[2]
    if n % d:
        raise AlgebraStructureError(f"unital homomorphism M_{d} -> M_{n} with {d} not dividing {n}")
    return n // d


def unitary_from_automorphism(images: ImageMap) -> Matrix:
    """Unitary V with images(A) = V A V^dag, global phase fixed."""
    stack = image_stack(images)
    d, dim = stack.shape[0], stack.shape[2]
    if dim != d:
        raise DimensionMismatchError(f"automorphism images must be {d}x{d}, got {dim}x{dim}")
    residual = homomorphism_residual(stack)
    if residual > get_settings().tolerance:
        raise HomomorphismError(residual)
    vals, vecs = linalg.eigh(0.5 * (stack[0, 0] + stack[0, 0].conj().T))
    rank = int(np.sum(vals > 0.5))
    if rank != 1:
        raise NotAutomorphismError(f"image of E_11 has rank {rank}, expected 1")
    psi = vecs[:, -1]
    v = np.stack([stack[k, 0] @ psi for k in range(d)], axis=1)
    return fix_global_phase(require_unitary(v, "implementing unitary"))


def spectral_projections(h) -> List[Tuple[float, Matrix]]:
    """Eigenvalue/projection pairs of a Hermitian matrix, largest eigenvalue first."""
    h = as_matrix(h)
    residual = residual_norm(h - h.conj().T)
    if residual > get_settings().tolerance:
        raise NotHermitianError(f"matrix deviates from its adjoint by {residual:.3e}")
    return list(reversed(_cluster_projections(h)))
