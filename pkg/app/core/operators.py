"""
app/core/operators.py - Local observables on finite regions

Implements:
1. LocalOperator: a matrix on the tensor product over a lexicographically
   ordered region
2. Embedding into larger regions (identity on new sites, any factor order)
3. Partial traces and minimal-support trimming
4. Translation of operators and regions
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.core.algebra import as_matrix, operator_norm, residual_norm
from app.core.errors import DimensionMismatchError
from app.core.lattice import Region, Site
from app.core.settings import get_settings

logger = logging.getLogger(__name__)


def permute_tensor_factors(
    matrix: np.ndarray, dims: Sequence[int], perm: Sequence[int]
) -> np.ndarray:
    """Reorder tensor factors: output factor k is input factor perm[k]."""
    dims = tuple(int(x) for x in dims)
    n = len(dims)
    total = int(np.prod(dims)) if dims else 1
    t = np.asarray(matrix, dtype=complex).reshape(dims + dims)
    axes = list(perm) + [n + p for p in perm]
    return t.transpose(axes).reshape(total, total)


def embed_matrix(matrix: np.ndarray, src_sites: Sequence[Site], dst: Region, d: int) -> np.ndarray:
    """Embed an operator on src_sites (in the given order) into dst, identity elsewhere."""
    src = [tuple(x) for x in src_sites]
    missing = [x for x in src if x not in dst]
    if missing:
        raise DimensionMismatchError(f"sites {missing} are not inside the target region")
    rest = [x for x in dst.sites if x not in set(src)]
    full = np.kron(as_matrix(matrix), np.eye(d ** len(rest)))
    order = src + rest
    perm = [order.index(x) for x in dst.sites]
    return permute_tensor_factors(full, [d] * len(order), perm)


def partial_trace(matrix: np.ndarray, n_sites: int, d: int, traced: Sequence[int]) -> np.ndarray:
    """Trace out the factors at positions `traced` (positions in the region order)."""
    t = np.asarray(matrix, dtype=complex).reshape((d,) * (2 * n_sites))
    keep = [k for k in range(n_sites) if k not in set(traced)]
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n_sites > len(letters):
        raise DimensionMismatchError("too many sites for a partial trace")
    row = list(letters[:n_sites])
    col = list(letters[n_sites:2 * n_sites])
    for k in traced:
        col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    dim = d ** len(keep)
    return reduced.reshape(dim, dim)


@dataclass(frozen=True)
class LocalOperator:
    region: Region
    matrix: np.ndarray
    cell_dim: int

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        expected = self.cell_dim ** len(self.region)
        if m.shape != (expected, expected):
            raise DimensionMismatchError(
                f"operator on {len(self.region)} sites of dim {self.cell_dim} "
                f"needs shape ({expected}, {expected}), got {m.shape}"
            )
        object.__setattr__(self, "matrix", m)

    @classmethod
    def at_site(cls, matrix, site, s: int = 1) -> "LocalOperator":
        m = as_matrix(matrix)
        return cls(Region.of([site], s=s), m, m.shape[0])

    @classmethod
    def identity(cls, region: Region, d: int) -> "LocalOperator":
        return cls(region, np.eye(d ** len(region), dtype=complex), d)

    @property
    def n_sites(self) -> int:
        return len(self.region)

    def embed(self, target: Region) -> "LocalOperator":
        if target == self.region:
            return self
        return LocalOperator(
            target,
            embed_matrix(self.matrix, self.region.sites, target, self.cell_dim),
            self.cell_dim,
        )

    def translate(self, shift) -> "LocalOperator":
        # translation preserves lexicographic order
        return LocalOperator(self.region.translate(shift), self.matrix, self.cell_dim)

    def reduce_to(self, target: Region) -> "LocalOperator":
        """Normalized partial trace onto target (a subset of the region)."""
        traced = [k for k, x in enumerate(self.region.sites) if x not in target]
        reduced = partial_trace(self.matrix, self.n_sites, self.cell_dim, traced)
        kept = Region.of([x for x in self.region.sites if x in target], s=self.region.s)
        return LocalOperator(kept, reduced / self.cell_dim ** len(traced), self.cell_dim)

    def trimmed(self, tol: Optional[float] = None) -> "LocalOperator":
        """Drop sites on which the operator acts as the identity."""
        limit = get_settings().tolerance if tol is None else tol
        current = self
        for site in self.region.sites:
            if current.n_sites <= 1:
                break
            rest = current.region.difference(Region.of([site], s=current.region.s))
            candidate = current.reduce_to(rest)
            if residual_norm(candidate.embed(current.region).matrix - current.matrix) <= limit:
                current = candidate
        return current

    def norm(self) -> float:
        return operator_norm(self.matrix)

    def adjoint(self) -> "LocalOperator":
        return LocalOperator(self.region, self.matrix.conj().T, self.cell_dim)

    def __matmul__(self, other: "LocalOperator") -> "LocalOperator":
        joint = self.region.union(other.region)
        return LocalOperator(
            joint, self.embed(joint).matrix @ other.embed(joint).matrix, self.cell_dim
        )

    def distance(self, other: "LocalOperator") -> float:
        joint = self.region.union(other.region)
        return residual_norm(self.embed(joint).matrix - other.embed(joint).matrix)


def matrix_unit(d: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    return e


def weyl_generators(d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Clock and shift matrices; together they generate M_d."""
    shift = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return shift, clock


def apply_local(psi: np.ndarray, op: np.ndarray, axes: Sequence[int], d: int) -> np.ndarray:
    """Apply op (on the listed tensor axes, in order) to a state tensor of shape (d,)*n."""
    k = len(axes)
    t = np.asarray(op, dtype=complex).reshape((d,) * (2 * k))
    out = np.tensordot(t, psi, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))
