"""
app/core/clifford.py - Clifford rules on qubit chains

Implements:
1. PauliString: letters over {0, x, y, z} with an exact phase i^k
2. CliffordRuleSpec: images of sigma_x and sigma_y at the origin
3. Symplectic validation and the exhaustive palindrome search
4. Polynomial-matrix encoding over F2 and its determinant gauge
5. Exact Heisenberg iteration of Pauli strings and light-cone fillings
6. Dense rules for cross-checking against the generic engine

Letters encode as x -> (1, 0), z -> (0, 1), y -> (1, 1) (x-bit, z-bit).
Strings are bit masks over positions; position j of a string with offset o
sits on site o + j.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app.core.algebra import residual_norm
from app.core.errors import CliffordGaugeError, CliffordPalindromeError, CliffordSpecError
from app.core.lattice import NeighborhoodScheme, Region, TorusSpec
from app.core.laurent import LaurentPolyF2, PolyMatrixF2
from app.core.operators import LocalOperator
from app.core.rules import LocalRule, embed_on_torus, global_unitary

logger = logging.getLogger(__name__)

LETTERS = "0xyz"
_BITS = {"0": (0, 0), "x": (1, 0), "y": (1, 1), "z": (0, 1)}

# a * b = i^k c for single-site Paulis
_PRODUCT: Dict[Tuple[str, str], Tuple[int, str]] = {}
for _a in LETTERS:
    _PRODUCT[("0", _a)] = (0, _a)
    _PRODUCT[(_a, "0")] = (0, _a)
    _PRODUCT[(_a, _a)] = (0, "0")
for _a, _b, _c in (("x", "y", "z"), ("y", "z", "x"), ("z", "x", "y")):
    _PRODUCT[(_a, _b)] = (1, _c)
    _PRODUCT[(_b, _a)] = (3, _c)

_PAULI = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _check_letters(letters: str) -> str:
    letters = str(letters).lower()
    bad = sorted(set(letters) - set(LETTERS))
    if bad:
        raise CliffordSpecError(f"unknown Pauli letters {bad}; use 0, x, y, z")
    return letters


@dataclass(frozen=True)
class PauliString:
    offset: int
    letters: str
    phase: int = 0  # exponent of i

    def __post_init__(self) -> None:
        letters = _check_letters(self.letters)
        stripped = letters.strip("0")
        offset = int(self.offset)
        if stripped:
            offset += len(letters) - len(letters.lstrip("0"))
        else:
            offset = 0
        object.__setattr__(self, "letters", stripped)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def single(cls, letter: str, site: int = 0) -> "PauliString":
        return cls(site, letter)

    @classmethod
    def identity(cls) -> "PauliString":
        return cls(0, "")

    @property
    def is_identity(self) -> bool:
        return not self.letters

    @property
    def last(self) -> int:
        return self.offset + len(self.letters) - 1

    def at(self, site: int) -> str:
        k = site - self.offset
        return self.letters[k] if 0 <= k < len(self.letters) else "0"

    def masks(self) -> Tuple[int, int]:
        return _letter_masks(self.letters)

    def __matmul__(self, other: "PauliString") -> "PauliString":
        if self.is_identity:
            return PauliString(other.offset, other.letters, other.phase + self.phase)
        if other.is_identity:
            return PauliString(self.offset, self.letters, self.phase + other.phase)
        lo = min(self.offset, other.offset)
        hi = max(self.last, other.last)
        phase = self.phase + other.phase
        out = []
        for site in range(lo, hi + 1):
            k, c = _PRODUCT[(self.at(site), other.at(site))]
            phase += k
            out.append(c)
        return PauliString(lo, "".join(out), phase)

    def translate(self, step: int) -> "PauliString":
        return PauliString(self.offset + step, self.letters, self.phase)

    def scaled(self, k: int) -> "PauliString":
        return PauliString(self.offset, self.letters, self.phase + k)

    def commutes_with(self, other: "PauliString") -> bool:
        return symplectic_form(self, other) == 0

    def to_matrix(self, region: Region) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for (site,) in region.sites:
            out = np.kron(out, _PAULI[self.at(site)])
        return (1j ** self.phase) * out

    def to_operator(self) -> LocalOperator:
        if self.is_identity:
            region = Region.interval(0, 0)
        else:
            region = Region.interval(self.offset, self.last)
        return LocalOperator(region, self.to_matrix(region), 2)

    def __str__(self) -> str:
        sign = ("+", "+i", "-", "-i")[self.phase]
        return f"{sign} {self.letters or '1'} @ {self.offset}"

    def to_dict(self) -> Dict[str, Any]:
        return {"offset": self.offset, "letters": self.letters, "phase": self.phase}


def _omega(px: int, pz: int, qx: int, qz: int) -> int:
    return ((px & qz) ^ (pz & qx)).bit_count() & 1


def _omega_shifted(p: Tuple[int, int], q: Tuple[int, int], k: int) -> int:
    """Symplectic form of p against q translated k positions to the right."""
    if k >= 0:
        return _omega(p[0], p[1], q[0] << k, q[1] << k)
    return _omega(p[0] << -k, p[1] << -k, q[0], q[1])


def symplectic_form(p: PauliString, q: PauliString) -> int:
    """0 if p and q commute, 1 if they anticommute."""
    return _omega_shifted(p.masks(), q.masks(), q.offset - p.offset)


@dataclass(frozen=True)
class CliffordRuleSpec:
    """Images of sigma_x and sigma_y at the origin, placed on shift - N .. shift + N."""

    half_width: int
    xi: str
    eta: str
    shift: int = 0
    signs: Tuple[int, int] = (1, 1)

    def __post_init__(self) -> None:
        n = int(self.half_width)
        if n < 0:
            raise CliffordSpecError("half width must be non-negative")
        xi, eta = _check_letters(self.xi), _check_letters(self.eta)
        if len(xi) != 2 * n + 1 or len(eta) != 2 * n + 1:
            raise CliffordSpecError(
                f"xi and eta need {2 * n + 1} letters, got {len(xi)} and {len(eta)}"
            )
        signs = tuple(int(x) for x in self.signs)
        if len(signs) != 2 or any(x not in (1, -1) for x in signs):
            raise CliffordSpecError("signs must be a pair of +1/-1")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "signs", signs)

    @property
    def first(self) -> int:
        return self.shift - self.half_width

    def image_x(self) -> PauliString:
        return PauliString(self.first, self.xi, 0 if self.signs[0] > 0 else 2)

    def image_y(self) -> PauliString:
        return PauliString(self.first, self.eta, 0 if self.signs[1] > 0 else 2)

    def image_z(self) -> PauliString:
        # sigma_z = -i sigma_x sigma_y
        return (self.image_x() @ self.image_y()).scaled(3)

    def image(self, letter: str) -> PauliString:
        if letter == "x":
            return self.image_x()
        if letter == "y":
            return self.image_y()
        if letter == "z":
            return self.image_z()
        return PauliString.identity()

    def is_palindrome(self) -> bool:
        return self.xi == self.xi[::-1] and self.eta == self.eta[::-1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "half_width": self.half_width,
            "xi": self.xi,
            "eta": self.eta,
            "shift": self.shift,
            "signs": list(self.signs),
        }


def _letter_masks(letters: str) -> Tuple[int, int]:
    x = z = 0
    for j, c in enumerate(letters):
        bx, bz = _BITS[c]
        x |= bx << j
        z |= bz << j
    return x, z


def _conditions(xi: Tuple[int, int], eta: Tuple[int, int], width: int) -> bool:
    for k in range(1, width):
        if _omega_shifted(xi, xi, k) or _omega_shifted(eta, eta, k):
            return False
    for k in range(-(width - 1), width):
        if _omega_shifted(xi, eta, k) != (1 if k == 0 else 0):
            return False
    return True


def validate_clifford(spec: CliffordRuleSpec) -> bool:
    """True iff the images commute with their translates and anticommute only on site."""
    width = 2 * spec.half_width + 1
    return _conditions(_letter_masks(spec.xi), _letter_masks(spec.eta), width)


def _self_commuting(x: Tuple[int, int], width: int) -> bool:
    return not any(_omega_shifted(x, x, k) for k in range(1, width))


def _center2(letters: str) -> Optional[int]:
    """Twice the palindrome center position, or None if not a palindrome."""
    stripped = letters.strip("0")
    if not stripped or stripped != stripped[::-1]:
        return None
    lo = len(letters) - len(letters.lstrip("0"))
    return 2 * lo + len(stripped) - 1


def recentered(half_width: int, xi: str, eta: str) -> CliffordRuleSpec:
    """Move a valid pair to its common palindrome center, recorded as the shift."""
    c_xi, c_eta = _center2(xi), _center2(eta)
    if c_xi is None or c_eta is None or c_xi != c_eta or c_xi % 2:
        raise CliffordPalindromeError(f"images {xi!r}, {eta!r} share no palindrome center")
    center = c_xi // 2
    delta = center - half_width
    if delta > 0:
        xi, eta = xi[delta:] + "0" * delta, eta[delta:] + "0" * delta
    elif delta < 0:
        xi, eta = "0" * -delta + xi[:delta], "0" * -delta + eta[:delta]
    return CliffordRuleSpec(half_width, xi, eta, shift=delta)


def search_clifford(half_width: int) -> List[CliffordRuleSpec]:
    """Every valid (xi, eta) pair on 2N + 1 sites, recentered to its palindrome center."""
    if half_width < 0:
        raise CliffordSpecError("half width must be non-negative")
    width = 2 * half_width + 1
    words = []
    for code in range(4 ** width):
        letters = "".join(LETTERS[(code >> (2 * (width - 1 - j))) & 3] for j in range(width))
        masks = _letter_masks(letters)
        if _self_commuting(masks, width):
            words.append((letters, masks))
    logger.debug("%d self-commuting strings of width %d", len(words), width)
    found = []
    for xi, mx in words:
        for eta, me in words:
            if _conditions(mx, me, width):
                found.append(recentered(half_width, xi, eta))
    logger.info("Clifford search N=%d: %d valid pairs", half_width, len(found))
    return found


def relabel_xz(spec: CliffordRuleSpec) -> CliffordRuleSpec:
    table = str.maketrans("xz", "zx")
    return CliffordRuleSpec(
        spec.half_width, spec.xi.translate(table), spec.eta.translate(table), spec.shift, spec.signs
    )


def spaced(spec: CliffordRuleSpec, spacing: int) -> CliffordRuleSpec:
    """The same rule acting on `spacing` interleaved chains."""
    if spacing < 1:
        raise CliffordSpecError("spacing must be positive")
    gap = "0" * (spacing - 1)
    return CliffordRuleSpec(
        spec.half_width * spacing,
        gap.join(spec.xi),
        gap.join(spec.eta),
        spec.shift * spacing,
        spec.signs,
    )


# ---------------------------------------------------------------------------
# Polynomial matrices
# ---------------------------------------------------------------------------

def _bit_polys(image: PauliString) -> Tuple[LaurentPolyF2, LaurentPolyF2]:
    plus, minus = [], []
    for j, c in enumerate(image.letters):
        bx, bz = _BITS[c]
        if bx:
            plus.append(image.offset + j)
        if bz:
            minus.append(image.offset + j)
    return LaurentPolyF2.from_exponents(plus), LaurentPolyF2.from_exponents(minus)


def to_poly_matrix(spec: CliffordRuleSpec, strict: bool = True) -> PolyMatrixF2:
    """[[xi+, eta+], [xi-, eta-]]: x-bits in the first row, z-bits in the second."""
    xi_p, xi_m = _bit_polys(spec.image_x())
    eta_p, eta_m = _bit_polys(spec.image_y())
    matrix = PolyMatrixF2(xi_p, eta_p, xi_m, eta_m)
    if strict and not gauge_ok(matrix, spec.shift):
        raise CliffordGaugeError(f"determinant {matrix.det()} is not z^{2 * spec.shift}")
    return matrix


def gauge_ok(matrix: PolyMatrixF2, shift: int = 0) -> bool:
    """Determinant equals z^(2 shift); the identity rule fixes this gauge to 1."""
    return matrix.det().monomial_degree() == 2 * shift


# Right factor of the composition law M(T1 T2) = M(T1) B M(T2)
COMPOSITION_TWIST = PolyMatrixF2(
    LaurentPolyF2.monomial(0), LaurentPolyF2.monomial(0), LaurentPolyF2(), LaurentPolyF2.monomial(0)
)


def spec_from_images(image_x: PauliString, image_y: PauliString) -> CliffordRuleSpec:
    """Smallest centered spec with the given images."""
    if image_x.phase % 2 or image_y.phase % 2:
        raise CliffordSpecError("images of Hermitian Paulis must carry a real sign")
    lo = min(image_x.offset, image_y.offset)
    hi = max(image_x.last, image_y.last)
    center2 = lo + hi
    if center2 % 2:
        raise CliffordPalindromeError("images have no integer center")
    center = center2 // 2
    n = max(center - lo, hi - center)
    sites = range(center - n, center + n + 1)
    xi = "".join(image_x.at(x) for x in sites)
    eta = "".join(image_y.at(x) for x in sites)
    signs = (1 if image_x.phase == 0 else -1, 1 if image_y.phase == 0 else -1)
    return CliffordRuleSpec(n, xi, eta, center, signs)


def compose_specs(outer: CliffordRuleSpec, inner: CliffordRuleSpec) -> CliffordRuleSpec:
    """Spec of A -> outer(inner(A))."""
    return spec_from_images(
        apply_spec(outer, inner.image_x()), apply_spec(outer, inner.image_y())
    )


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------

def apply_spec(spec: CliffordRuleSpec, p: PauliString) -> PauliString:
    """One Heisenberg step; images of different sites commute, so order is free."""
    cache = {c: spec.image(c) for c in "xyz"}
    out = PauliString.identity().scaled(p.phase)
    for j, c in enumerate(p.letters):
        if c != "0":
            out = out @ cache[c].translate(p.offset + j)
    return out


def evolve_pauli(spec: CliffordRuleSpec, p: PauliString, t: int) -> PauliString:
    if t < 0:
        raise ValueError("time must be non-negative")
    for _ in range(t):
        p = apply_spec(spec, p)
    return p


def evolve_history(spec: CliffordRuleSpec, p: PauliString, t: int) -> List[PauliString]:
    out = [p]
    for _ in range(t):
        out.append(apply_spec(spec, out[-1]))
    return out


def interior_filling(letters: str) -> str:
    """Classify the region between the two outermost letter pairs."""
    inner = letters[2:-2]
    if not inner:
        return "empty"
    if set(inner) == {"0"}:
        return "identity"
    if set(inner) == {"y"}:
        return "y"
    if all(c == "xy"[k % 2] for k, c in enumerate(inner)):
        return "xy"
    if all(c == "yx"[k % 2] for k, c in enumerate(inner)):
        return "yx"
    return "irregular"


def light_cone_report(spec: CliffordRuleSpec, p: PauliString, t_max: int) -> List[Dict[str, Any]]:
    rows = []
    for t, q in enumerate(evolve_history(spec, p, t_max)):
        rows.append({
            "t": t,
            "offset": q.offset,
            "phase": q.phase,
            "letters": q.letters,
            "filling": interior_filling(q.letters),
        })
    return rows


# ---------------------------------------------------------------------------
# Dense cross-checks
# ---------------------------------------------------------------------------

_MATRIX_UNITS = {
    (0, 0): (("0", 0.5), ("z", 0.5)),
    (0, 1): (("x", 0.5), ("y", 0.5j)),
    (1, 0): (("x", 0.5), ("y", -0.5j)),
    (1, 1): (("0", 0.5), ("z", -0.5)),
}


def clifford_rule(spec: CliffordRuleSpec) -> LocalRule:
    """Dense qubit rule with the Pauli images of the rule."""
    region = Region.interval(spec.first, spec.shift + spec.half_width)
    dim = 2 ** len(region)
    stack = np.zeros((2, 2, dim, dim), dtype=complex)
    for (i, j), terms in _MATRIX_UNITS.items():
        for letter, coeff in terms:
            stack[i, j] += coeff * spec.image(letter).to_matrix(region)
    return LocalRule(2, NeighborhoodScheme(region), stack).trimmed()


def dense_residual(spec: CliffordRuleSpec, p: PauliString, t: int, length: int = 10) -> float:
    """Distance between the symbolic evolution and the dense one on a ring."""
    torus = TorusSpec.of(length)
    g = global_unitary(clifford_rule(spec), torus)
    a = embed_on_torus(p.to_operator(), torus)
    for _ in range(t):
        a = g.conj().T @ a @ g
    expected = embed_on_torus(evolve_pauli(spec, p, t).to_operator(), torus)
    return residual_norm(a - expected)


PROTOTYPE = CliffordRuleSpec(1, "0z0", "zxz")
