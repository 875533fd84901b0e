"""
app/core/classical.py - Reversible classical cellular automata and their quantization

Implements:
1. ClassicalCA: lookup-table automata on a one-dimensional ring
2. Exhaustive global invertibility check on rings
3. Inverse-rule search by windowed table collection
4. Quantization: permutation-unitary rules from an automaton and its inverse

Tables are indexed base d with the first (leftmost) offset most significant,
matching the Wolfram numbering for elementary rules.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.core.errors import (
    ClassicalInverseError,
    DimensionCapError,
    DimensionMismatchError,
    NonLocalImageError,
)
from app.core.lattice import NeighborhoodScheme, Region, region_arith, smallest_regular_torus
from app.core.rules import LocalRule, require_valid
from app.core.settings import get_settings

logger = logging.getLogger(__name__)

# Largest number of ring configurations enumerated in one pass
MAX_CONFIGURATIONS = 1 << 18


@dataclass(frozen=True)
class ClassicalCA:
    alphabet_size: int
    scheme_fwd: Tuple[int, ...]
    outputs: np.ndarray
    scheme_inv: Optional[Tuple[int, ...]] = None
    inverse_outputs: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        d = int(self.alphabet_size)
        if d < 2:
            raise DimensionMismatchError("alphabet needs at least two states")
        object.__setattr__(self, "scheme_fwd", tuple(sorted(int(n) for n in self.scheme_fwd)))
        object.__setattr__(self, "outputs", _check_table(self.outputs, d, len(self.scheme_fwd)))
        if (self.scheme_inv is None) != (self.inverse_outputs is None):
            raise DimensionMismatchError("inverse scheme and inverse table must be given together")
        if self.scheme_inv is not None:
            object.__setattr__(self, "scheme_inv", tuple(sorted(int(n) for n in self.scheme_inv)))
            object.__setattr__(
                self, "inverse_outputs", _check_table(self.inverse_outputs, d, len(self.scheme_inv))
            )

    @property
    def has_inverse(self) -> bool:
        return self.inverse_outputs is not None

    def with_inverse(self, scheme_inv: Sequence[int], table: np.ndarray) -> "ClassicalCA":
        return ClassicalCA(
            self.alphabet_size, self.scheme_fwd, self.outputs, tuple(scheme_inv), table
        )


def _check_table(table, d: int, width: int) -> np.ndarray:
    t = np.asarray(table, dtype=np.int64).reshape(-1)
    if t.size != d ** width:
        raise DimensionMismatchError(f"table needs {d ** width} entries, got {t.size}")
    if t.size and (t.min() < 0 or t.max() >= d):
        raise DimensionMismatchError(f"table entries must lie in 0..{d - 1}")
    return t


def all_configurations(d: int, length: int) -> np.ndarray:
    """Every ring configuration, one per row, in lexicographic order."""
    count = d ** length
    if count > MAX_CONFIGURATIONS:
        raise DimensionCapError(count, MAX_CONFIGURATIONS)
    powers = d ** np.arange(length - 1, -1, -1)
    return (np.arange(count)[:, None] // powers[None, :]) % d


def _windows(configs: np.ndarray, offsets: Sequence[int], d: int) -> np.ndarray:
    idx = np.zeros(configs.shape, dtype=np.int64)
    for n in offsets:
        idx = idx * d + np.roll(configs, -n, axis=-1)
    return idx


def apply_table(
    configs: np.ndarray, offsets: Sequence[int], table: np.ndarray, d: int
) -> np.ndarray:
    return table[_windows(np.asarray(configs), offsets, d)]


def global_map(ca: ClassicalCA, configs: np.ndarray) -> np.ndarray:
    return apply_table(configs, ca.scheme_fwd, ca.outputs, ca.alphabet_size)


def inverse_map(ca: ClassicalCA, configs: np.ndarray) -> np.ndarray:
    if not ca.has_inverse:
        raise ClassicalInverseError("automaton carries no inverse table")
    return apply_table(configs, ca.scheme_inv, ca.inverse_outputs, ca.alphabet_size)


def elementary_rule(code: int) -> ClassicalCA:
    """Wolfram elementary rule on {0,1} with neighborhood (-1, 0, 1)."""
    if not 0 <= code < 256:
        raise DimensionMismatchError(f"elementary rule code {code} out of range")
    return ClassicalCA(2, (-1, 0, 1), np.array([(code >> i) & 1 for i in range(8)]))


def cellwise_permutation(perm: Sequence[int]) -> ClassicalCA:
    perm = np.asarray(perm, dtype=np.int64)
    inverse = np.argsort(perm)
    return ClassicalCA(len(perm), (0,), perm, (0,), inverse)


def shift_automaton(d: int, step: int = 1) -> ClassicalCA:
    """c'_x = c_{x+step}, inverse c_x = c'_{x-step}."""
    identity = np.arange(d)
    return ClassicalCA(d, (step,), identity, (-step,), identity)


def block_exchange_automaton() -> ClassicalCA:
    """Cells hold two bits (a, b); the update is (a, b)_x -> (b_x, a_{x+1})."""
    outputs = np.zeros(16, dtype=np.int64)
    inverse = np.zeros(16, dtype=np.int64)
    for left in range(4):
        for right in range(4):
            outputs[4 * left + right] = 2 * (left & 1) + (right >> 1)
            inverse[4 * left + right] = 2 * (left & 1) + (right >> 1)
    return ClassicalCA(4, (0, 1), outputs, (-1, 0), inverse)


def is_globally_invertible(ca: ClassicalCA, length: int) -> bool:
    images = global_map(ca, all_configurations(ca.alphabet_size, length))
    powers = ca.alphabet_size ** np.arange(length - 1, -1, -1)
    codes = images @ powers
    return np.unique(codes).size == codes.size


def round_trip_failures(ca: ClassicalCA, length: int) -> int:
    configs = all_configurations(ca.alphabet_size, length)
    back = inverse_map(ca, global_map(ca, configs))
    return int(np.sum(np.any(back != configs, axis=1)))


def find_inverse(ca: ClassicalCA, max_radius: int = 3) -> ClassicalCA:
    """Search for a local inverse on the windows {-r..r}, r <= max_radius."""
    d = ca.alphabet_size
    span = max(ca.scheme_fwd) - min(ca.scheme_fwd)
    for radius in range(max_radius + 1):
        offsets = tuple(range(-radius, radius + 1))
        width = len(offsets)
        low = np.full(d ** width, d, dtype=np.int64)
        high = np.full(d ** width, -1, dtype=np.int64)
        base = max(span + 2 * radius + 2, 3)
        for length in range(base, base + 3):
            if d ** length > MAX_CONFIGURATIONS:
                raise ClassicalInverseError(
                    f"inverse search exceeds enumeration limit at radius {radius}"
                )
            if not is_globally_invertible(ca, length):
                raise ClassicalInverseError(
                    "no inverse automaton: global map is not injective"
                    f" on a ring of length {length}"
                )
            configs = all_configurations(d, length)
            images = global_map(ca, configs)
            idx = _windows(images, offsets, d).reshape(-1)
            vals = configs.reshape(-1)
            np.minimum.at(low, idx, vals)
            np.maximum.at(high, idx, vals)
        seen = high >= 0
        if np.any(low[seen] != high[seen]):
            logger.debug("Radius %d inverse table has conflicts", radius)
            continue
        table = np.where(seen, high, 0)
        candidate = ca.with_inverse(offsets, table)
        if all(round_trip_failures(candidate, length) == 0 for length in range(base, base + 3)):
            logger.info("Found inverse with radius %d", radius)
            return candidate
    raise ClassicalInverseError(f"no inverse automaton with radius <= {max_radius}")


def quantize_classical(ca: ClassicalCA, max_radius: int = 3) -> LocalRule:
    """Permutation-unitary rule of a reversible automaton.

    The image of |a><b| at the origin has matrix element 1 between c and e iff
    F(c)_0 = a, F(e)_0 = b and F(c), F(e) agree elsewhere. It is read off on a
    ring that is regular for N_C - N_C - N_I and reduced to that neighborhood.
    """
    if not ca.has_inverse:
        ca = find_inverse(ca, max_radius)
    d = ca.alphabet_size
    fwd = Region.of(ca.scheme_fwd, s=1)
    inv = Region.of(ca.scheme_inv, s=1)
    bound = region_arith(region_arith(fwd, fwd, "difference"), inv, "difference")
    scheme = NeighborhoodScheme(bound)
    everything = fwd.union(inv).union(bound)
    lo, hi = everything.bounds()
    length = max(smallest_regular_torus(scheme).periods[0], hi[0] - lo[0] + 2)

    configs = all_configurations(d, length)
    images = global_map(ca, configs)
    failures = int(np.sum(np.any(inverse_map(ca, images) != configs, axis=1)))
    if failures:
        raise ClassicalInverseError(
            f"inverse table fails the round trip on {failures} configurations"
        )

    positions = [n[0] % length for n in bound.sites]
    rest = [k for k in range(length) if k not in positions]
    weight = float(d ** len(rest))
    powers = d ** np.arange(len(positions) - 1, -1, -1)
    dim = d ** len(positions)
    stack = np.zeros((d, d, dim, dim), dtype=complex)
    residual = 0.0
    for a in range(d):
        mask = images[:, 0] == a
        c = configs[mask]
        for b in range(d):
            y = images[mask].copy()
            y[:, 0] = b
            e = inverse_map(ca, y)
            stay = np.all(e[:, rest] == c[:, rest], axis=1)
            residual = max(residual, float(np.sum(~stay)) / weight)
            reduced = np.zeros((dim, dim))
            rows = c[stay][:, positions] @ powers
            cols = e[stay][:, positions] @ powers
            np.add.at(reduced, (rows, cols), 1.0)
            reduced /= weight
            residual = max(residual, float(np.max(np.abs(reduced - np.round(reduced)))))
            stack[a, b] = reduced
    if residual > get_settings().tolerance:
        raise NonLocalImageError(residual)
    rule = LocalRule(d, scheme, stack).trimmed()
    logger.info(
        "Quantized automaton d=%d: bound %s trimmed to %s",
        d, bound.to_list(), rule.region.to_list(),
    )
    return require_valid(rule)
