"""
app/core/walks.py - Coined quantum walks as one-particle sectors

Implements:
1. Lifting a qubit coin to a four-state rule on two counter-moving chains
2. Particle-number gauge checks (local images and dense global unitary)
3. One-particle sector extraction and evolution without the full space
4. A direct coined-walk simulator used as a reference

Cell states are R-bit (x) L-bit with the R-bit slow:
empty = 0, L = 1, R = 2, RL = 3. Coin amplitudes are ordered (R, L).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from app.core.algebra import as_matrix, require_unitary, residual_norm, unitarity_residual
from app.core.errors import SectorLeakError, WalkSpecError
from app.core.lattice import NeighborhoodScheme, Region, TorusSpec, wrap, wrap_region
from app.core.operators import matrix_unit
from app.core.rules import LocalRule, cellwise_rule, compose_rules, global_unitary, require_valid
from app.core.settings import get_settings

logger = logging.getLogger(__name__)

EMPTY, LEFT, RIGHT, BOTH = 0, 1, 2, 3
# cell state of a particle with chirality 0 (R) or 1 (L)
CHIRAL_STATES = (RIGHT, LEFT)
# particle number of each cell state
OCCUPATION = np.array([0, 1, 1, 2])


@dataclass(frozen=True)
class CoinedWalkSpec:
    coin: np.ndarray
    steps: int
    length: int
    start: int = 0
    amplitudes: Tuple[complex, complex] = (1.0, 0.0)
    allow_wrap: bool = False

    def __post_init__(self) -> None:
        coin = require_unitary(self.coin, "coin")
        if coin.shape != (2, 2):
            raise WalkSpecError(f"coin must be 2x2, got {coin.shape}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2:
            raise WalkSpecError("initial state needs one amplitude per chirality")
        if abs(float(np.linalg.norm(amps)) - 1.0) > get_settings().tolerance:
            raise WalkSpecError("initial amplitudes must be normalized")
        if self.steps < 0:
            raise WalkSpecError("steps must be non-negative")
        if self.length < 5:
            raise WalkSpecError("chain length must be at least 5 for a regular ring")
        if not self.allow_wrap and 2 * self.steps + 1 > self.length:
            raise WalkSpecError(
                f"{self.steps} steps wrap around a ring of {self.length} sites; pass allow_wrap"
            )
        object.__setattr__(self, "coin", coin)
        object.__setattr__(self, "amplitudes", (complex(amps[0]), complex(amps[1])))

    def initial_vector(self) -> np.ndarray:
        psi = np.zeros(2 * self.length, dtype=complex)
        x = self.start % self.length
        psi[2 * x] = self.amplitudes[0]
        psi[2 * x + 1] = self.amplitudes[1]
        return psi


def coin_on_cell(coin) -> np.ndarray:
    """Cell unitary acting as the coin on {R, L} and trivially on empty and RL."""
    c4 = np.eye(4, dtype=complex)
    c4[np.ix_(list(CHIRAL_STATES), list(CHIRAL_STATES))] = as_matrix(coin)
    return c4


def free_shift_rule() -> LocalRule:
    """R-chain moves right, L-chain moves left; observables follow backwards."""
    stack = np.zeros((4, 4, 16, 16), dtype=complex)
    eye = np.eye(2)
    for i in range(4):
        for j in range(4):
            (ri, li), (rj, lj) = divmod(i, 2), divmod(j, 2)
            left_cell = np.kron(matrix_unit(2, ri, rj), eye)
            right_cell = np.kron(eye, matrix_unit(2, li, lj))
            stack[i, j] = np.kron(left_cell, right_cell)
    return LocalRule(4, NeighborhoodScheme(Region.of([-1, 1], s=1)), stack)


def lift_coined_walk(coin) -> LocalRule:
    """Free two-way shift composed after the coin."""
    coin = require_unitary(coin, "coin")
    rule = compose_rules(free_shift_rule(), cellwise_rule(coin_on_cell(coin)))
    return require_valid(rule)


def _gauge(theta: float) -> np.ndarray:
    return np.diag(np.exp(1j * theta * OCCUPATION))


def gauge_residual(rule: LocalRule, theta: float = 0.7) -> float:
    """Largest ||T0(g A g^dag) - g_N T0(A) g_N^dag|| over matrix units, g the number phase."""
    g = _gauge(theta)
    big = np.ones((1, 1), dtype=complex)
    for _ in rule.region.sites:
        big = np.kron(big, g)
    worst = 0.0
    for i in range(4):
        for j in range(4):
            lhs = rule.image_of(g @ matrix_unit(4, i, j) @ g.conj().T).matrix
            rhs = big @ rule.images[i, j] @ big.conj().T
            worst = max(worst, residual_norm(lhs - rhs))
    return worst


def particle_numbers(length: int) -> np.ndarray:
    counts = np.zeros(1, dtype=int)
    for _ in range(length):
        counts = (counts[:, None] + OCCUPATION[None, :]).reshape(-1)
    return counts


def global_sector_leak(rule: LocalRule, length: int = 5) -> float:
    """Largest global unitary entry between different particle numbers."""
    g = global_unitary(rule, TorusSpec.of(length))
    n = particle_numbers(length)
    off = n[:, None] != n[None, :]
    return float(np.max(np.abs(g[off]))) if np.any(off) else 0.0


def sector_matrix(rule: LocalRule, length: int) -> np.ndarray:
    """One-particle block W[2y + c', 2x + c] of the global step on a ring, up to phase.

    The amplitude <y c'| G |x c> equals <vacuum| T(|0><s(c')| at y) |x c> once
    the vacuum is invariant, so it is read off the translated cell image.
    """
    if rule.cell_dim != 4 or rule.s != 1:
        raise WalkSpecError("sector extraction needs a four-state rule on a line")
    torus = TorusSpec.of(length)
    wrap_region(rule.region, torus)
    tol = get_settings().tolerance
    vacuum = 1.0 - float(np.real(rule.images[EMPTY, EMPTY][0, 0]))
    if vacuum > tol:
        raise SectorLeakError(vacuum)

    n_sites = len(rule.region)
    w = np.zeros((2 * length, 2 * length), dtype=complex)
    for c_out, s_out in enumerate(CHIRAL_STATES):
        row = rule.images[EMPTY, s_out][0]
        for y in range(length):
            for k, (n,) in enumerate(rule.region.sites):
                x = wrap((y + n,), torus)[0]
                for c_in, s_in in enumerate(CHIRAL_STATES):
                    col = s_in * 4 ** (n_sites - 1 - k)
                    w[2 * y + c_out, 2 * x + c_in] += row[col]
    residual = unitarity_residual(w)
    if residual > tol:
        raise SectorLeakError(residual)
    return w


def walk_history(rule: LocalRule, spec: CoinedWalkSpec) -> List[np.ndarray]:
    """Per-site occupation probabilities for t = 0 .. steps."""
    w = sector_matrix(rule, spec.length)
    psi = spec.initial_vector()
    rows = [_site_probabilities(psi)]
    for _ in range(spec.steps):
        psi = w @ psi
        rows.append(_site_probabilities(psi))
    logger.info("Walked %d steps on a ring of %d sites", spec.steps, spec.length)
    return rows


def walk_sector_evolve(rule: LocalRule, spec: CoinedWalkSpec) -> np.ndarray:
    return walk_history(rule, spec)[-1]


def _site_probabilities(psi: np.ndarray) -> np.ndarray:
    amps = np.abs(psi.reshape(-1, 2)) ** 2
    return amps.sum(axis=1)


def coined_walk_reference(
    spec: CoinedWalkSpec, coin: Optional[np.ndarray] = None
) -> List[np.ndarray]:
    """Direct simulation: shift R right and L left, then apply the coin per site."""
    coin = spec.coin if coin is None else as_matrix(coin)
    a = spec.initial_vector().reshape(-1, 2)
    rows = [(np.abs(a) ** 2).sum(axis=1)]
    for _ in range(spec.steps):
        moved = np.stack([np.roll(a[:, 0], 1), np.roll(a[:, 1], -1)])
        a = (coin @ moved).T
        rows.append((np.abs(a) ** 2).sum(axis=1))
    return rows
