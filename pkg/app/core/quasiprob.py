"""
app/core/quasiprob.py - Transition quasi-probabilities for qubit rules

Implements:
1. The four-element Wigner operator frame on a qubit and its dual
2. Quasi-probability tensors M(eta | xi) of a local rule
3. Two-observable comparison of the quasi-probabilistic product rule
   against the homomorphic one, with a positivity scan
4. The product criterion F(a) F(b) = delta_ab F(a) for operator frames

Frame elements are ordered (u, v) = (+,+), (+,-), (-,+), (-,-). Their sum is
twice the identity; M is taken with respect to the normalized frame F / 2.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import norm, qmc

from app.core.algebra import residual_norm
from app.core.errors import DimensionMismatchError, SchemeError
from app.core.lattice import Region
from app.core.operators import LocalOperator
from app.core.rules import LocalRule, apply_on_lattice

logger = logging.getLogger(__name__)

LABELS: Tuple[Tuple[int, int], ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)

# Number of quasi-random pure states in the positivity scan
SCAN_POINTS = 200


@dataclass(frozen=True)
class WignerBasis:
    frame: np.ndarray
    dual: np.ndarray
    labels: Tuple[Tuple[int, int], ...] = LABELS

    @property
    def normalized(self) -> np.ndarray:
        """F / 2, which sums to the identity."""
        return self.frame / 2.0

    @property
    def normalized_dual(self) -> np.ndarray:
        return 2.0 * self.dual

    def sum_constant(self) -> Tuple[float, float]:
        """(c, residual) with sum_a F_a = c 1."""
        total = self.frame.sum(axis=0)
        c = float(np.real(np.trace(total))) / 2.0
        return c, residual_norm(total - c * np.eye(2))

    def dual_residual(self) -> float:
        gram = np.einsum("aij,bji->ab", self.dual, self.frame)
        return float(np.max(np.abs(gram - np.eye(len(self.labels)))))


def wigner_basis() -> WignerBasis:
    frame = np.stack([
        0.5 * (np.eye(2) + u * _SZ) + (v / 4.0) * (_SX + u * _SY) for u, v in LABELS
    ]).astype(complex)
    gram = np.einsum("aij,bji->ab", frame, frame)
    dual = np.einsum("ab,bij->aij", linalg.inv(gram), frame)
    return WignerBasis(frame, dual)


def product_rule_residual(frame: np.ndarray) -> float:
    """Largest ||F_a F_b - delta_ab F_a|| over a frame given as (k, n, n)."""
    frame = np.asarray(frame, dtype=complex)
    worst = 0.0
    for a in range(frame.shape[0]):
        for b in range(frame.shape[0]):
            expected = frame[a] if a == b else 0.0
            worst = max(worst, residual_norm(frame[a] @ frame[b] - expected))
    return worst


def classical_frame(d: int = 2) -> np.ndarray:
    return np.stack([np.diag(np.eye(d)[a]).astype(complex) for a in range(d)])


@dataclass(frozen=True)
class QuasiTransitionTensor:
    tensor: np.ndarray
    offsets: Tuple[Tuple[int, ...], ...]
    imaginary_residual: float
    reconstruction_residual: float

    def negative_entries(self, threshold: float = 0.0) -> int:
        return int(np.sum(self.tensor < -threshold))

    def is_deterministic(self, tol: float = 1e-9) -> bool:
        t = self.tensor
        return bool(np.all(np.abs(t * (t - 1.0)) <= tol))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "offsets": [list(x) for x in self.offsets],
            "tensor": self.tensor.reshape(4, -1),
            "min_entry": float(self.tensor.min()),
            "negative_entries": self.negative_entries(1e-12),
            "deterministic": self.is_deterministic(),
            "imaginary_residual": self.imaginary_residual,
            "reconstruction_residual": self.reconstruction_residual,
        }


def _qubit_check(rule: LocalRule) -> None:
    if rule.cell_dim != 2:
        raise DimensionMismatchError(f"quasi-probabilities need qubit cells, got d={rule.cell_dim}")


def _product_frame(frame: np.ndarray, n: int) -> np.ndarray:
    """All n-fold tensor products, first factor slowest: shape (4,)*n + (2^n, 2^n)."""
    out = np.ones((1, 1, 1), dtype=complex)
    for _ in range(n):
        out = np.einsum("aij,bkl->abikjl", out, frame).reshape(
            out.shape[0] * frame.shape[0], out.shape[1] * 2, out.shape[2] * 2
        )
    return out.reshape((frame.shape[0],) * n + (2 ** n, 2 ** n))


def quasi_probs(rule: LocalRule, basis: WignerBasis | None = None) -> QuasiTransitionTensor:
    """M(eta | xi) = tr(dual(xi) T0(F(eta))) in the normalized frame."""
    _qubit_check(rule)
    basis = basis or wigner_basis()
    n = len(rule.region)
    images = np.stack([rule.image_of(f).matrix for f in basis.normalized])
    duals = _product_frame(basis.normalized_dual, n)
    raw = np.einsum("...ij,eji->e...", duals, images)
    imag = float(np.max(np.abs(raw.imag))) if raw.size else 0.0
    tensor = np.real(raw)
    frames = _product_frame(basis.normalized, n)
    rebuilt = np.einsum(
        "ex,xij->eij",
        tensor.reshape(tensor.shape[0], -1).astype(complex),
        frames.reshape(-1, 2 ** n, 2 ** n),
    )
    recon = max(residual_norm(rebuilt[e] - images[e]) for e in range(4))
    logger.debug("Quasi-probabilities on %s: min entry %.3e", rule.region.to_list(), tensor.min())
    return QuasiTransitionTensor(tensor, rule.region.sites, imag, recon)


@dataclass(frozen=True)
class ComparisonReport:
    etas: Tuple[int, int]
    t_quasi: np.ndarray
    t_hom: np.ndarray
    max_difference: float
    min_eigenvalue: float
    witness: int
    sum_constant: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "etas": [list(LABELS[e]) for e in self.etas],
            "t_quasi": self.t_quasi,
            "t_hom": self.t_hom,
            "max_difference": self.max_difference,
            "positivity": {"min_eigenvalue": self.min_eigenvalue, "witness": self.witness},
            "frame_sum_constant": self.sum_constant,
        }


def _nearest_neighbor(rule: LocalRule) -> LocalRule:
    window = Region.interval(-1, 1)
    if rule.s != 1 or not rule.region.issubset(window):
        raise SchemeError(
            f"two-site comparison needs scheme within {{-1, 0, 1}}, got {rule.region.to_list()}"
        )
    return rule.widened(window)


def _pair_maps(rule: LocalRule, basis: WignerBasis) -> Tuple[np.ndarray, np.ndarray]:
    """T_quasi and T_hom for every (eta1, eta2), as (4, 4, 16, 16) arrays."""
    m = quasi_probs(rule, basis).tensor.astype(complex)
    f = basis.normalized
    ff = np.einsum("bij,ejk->beik", f, f)
    quasi = np.einsum("xabc,ybcd,aij,bkl,cmn,dop->xyikmojlnp", m, m, f, f, f, f, optimize=True)
    hom = np.einsum("xabc,yefg,aij,bekl,cfmn,gop->xyikmojlnp", m, m, f, ff, ff, f, optimize=True)
    return quasi.reshape(4, 4, 16, 16), hom.reshape(4, 4, 16, 16)


def scan_states(count: int = SCAN_POINTS) -> np.ndarray:
    """Deterministic two-qubit pure states: a Halton frame plus the computational basis."""
    points = qmc.Halton(d=8, scramble=False).random(count + 1)[1:]
    gauss = norm.ppf(points)
    vecs = gauss[:, :4] + 1j * gauss[:, 4:]
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    return np.concatenate([vecs, np.eye(4, dtype=complex)])


def positivity_scan(quasi: np.ndarray, basis: WignerBasis, states: np.ndarray) -> Tuple[float, int]:
    """Smallest eigenvalue of the quasi map applied to each projector, and its index."""
    dual2 = _product_frame(basis.normalized_dual, 2).reshape(4, 4, 4, 4)
    worst, witness = np.inf, -1
    for k, psi in enumerate(states):
        rho = np.outer(psi, psi.conj())
        coeffs = np.einsum("abij,ji->ab", dual2, rho)
        image = np.einsum("ab,abij->ij", coeffs, quasi)
        low = float(linalg.eigvalsh(0.5 * (image + image.conj().T))[0])
        if low < worst:
            worst, witness = low, k
    return worst, witness


def compare_two_site(rule: LocalRule, eta1: int, eta2: int) -> ComparisonReport:
    _qubit_check(rule)
    if not (0 <= eta1 < 4 and 0 <= eta2 < 4):
        raise ValueError("Wigner indices run over 0..3")
    local = _nearest_neighbor(rule)
    basis = wigner_basis()
    quasi, hom = _pair_maps(local, basis)
    diff = float(np.max(np.abs(quasi[eta1, eta2] - hom[eta1, eta2])))
    low, witness = positivity_scan(quasi, basis, scan_states())
    c, _ = basis.sum_constant()
    logger.info(
        "Two-site comparison (%d, %d): difference %.3e, min eigenvalue %.3e", eta1, eta2, diff, low
    )
    return ComparisonReport((eta1, eta2), quasi[eta1, eta2], hom[eta1, eta2], diff, low, witness, c)


def homomorphic_reference(rule: LocalRule, eta1: int, eta2: int) -> np.ndarray:
    """T(F(eta1) at 1, F(eta2) at 2) from the generic engine, on sites 0..3."""
    local = _nearest_neighbor(rule)
    f = wigner_basis().normalized
    obs = LocalOperator(Region.interval(1, 2), np.kron(f[eta1], f[eta2]), 2)
    return apply_on_lattice(local, obs).embed(Region.interval(0, 3)).matrix


def quasi_report(rule: LocalRule) -> Dict[str, Any]:
    """Tensor, frame facts and the two-site comparison over all observable pairs."""
    basis = wigner_basis()
    local = _nearest_neighbor(rule)
    quasi, hom = _pair_maps(local, basis)
    low, witness = positivity_scan(quasi, basis, scan_states())
    c, c_res = basis.sum_constant()
    pairs: List[Dict[str, Any]] = []
    for e1, e2 in itertools.product(range(4), repeat=2):
        pairs.append({
            "etas": [list(LABELS[e1]), list(LABELS[e2])],
            "max_difference": float(np.max(np.abs(quasi[e1, e2] - hom[e1, e2]))),
        })
    return {
        "tensor": quasi_probs(rule, basis).to_dict(),
        "frame_sum_constant": c,
        "frame_sum_residual": c_res,
        "dual_residual": basis.dual_residual(),
        "product_rule_residual": product_rule_residual(basis.frame),
        "pairs": pairs,
        "positivity": {"min_eigenvalue": low, "witness": witness},
    }
