"""
app/core/errors.py - Exception hierarchy

Every failure raised by the engine derives from QCAError so the CLI can map
validation problems to exit status 1 and schema problems to exit status 2.
"""

from __future__ import annotations

from typing import Optional, Tuple


class QCAError(Exception):
    """Base class for all engine failures."""
    pass


class SchemaError(QCAError):
    """Raised when a definition file or option set does not match its schema."""

    def __init__(self, message: str, source: Optional[str] = None):
        self.source = source
        super().__init__(f"{source}: {message}" if source else message)


class DimensionMismatchError(QCAError, ValueError):
    """Raised when operand shapes or lattice dimensions disagree."""
    pass


class DimensionCapError(QCAError):
    """Raised when a dense computation would exceed the configured dimension cap."""

    def __init__(self, dimension: int, cap: int):
        self.dimension = dimension
        self.cap = cap
        super().__init__(f"dense dimension {dimension} exceeds cap {cap}")


class NotHermitianError(QCAError, ValueError):
    """Raised when a Hermitian input deviates from its adjoint."""
    pass


class NonUnitaryError(QCAError, ValueError):
    """Raised when a matrix expected to be unitary is not."""

    def __init__(self, name: str, residual: float):
        self.residual = residual
        super().__init__(f"{name} is not unitary (residual {residual:.3e})")


class AlgebraClosureError(QCAError):
    """Raised when a span is not closed under adjoints or products."""

    def __init__(self, test: str, residual: float):
        self.test = test
        self.residual = residual
        super().__init__(f"{test} closure failed (residual {residual:.3e})")


class AlgebraStructureError(QCAError):
    """Raised when block data extracted from an algebra is inconsistent."""
    pass


class NonCommutingError(QCAError):
    """Raised when two algebras expected to commute do not."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"algebras do not commute (residual {residual:.3e})")


class HomomorphismError(QCAError):
    """Raised when matrix-unit images violate the *-homomorphism relations."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"images are not a unital *-homomorphism (residual {residual:.3e})")


class NotAutomorphismError(QCAError):
    """Raised when the image of E_11 is not a rank-one projection."""
    pass


class IrregularTorusError(QCAError):
    """Raised when a torus is too small for the neighborhood scheme."""
    pass


class RegionOverflowError(QCAError):
    """Raised when a region does not fit inside a torus without self-overlap."""
    pass


class RuleValidationError(QCAError):
    """Raised when a rule fails the translate commutation test."""

    def __init__(self, offending: Tuple[Tuple[int, ...], ...], worst: float):
        self.offending = offending
        self.worst = worst
        super().__init__(
            f"translates fail to commute at offsets {list(offending)} (max norm {worst:.3e})"
        )


class PhaseCommutationError(QCAError):
    """Raised when a commuting-unitary family violates its phase relation."""

    def __init__(self, offset: Tuple[int, ...], residual: float):
        self.offset = offset
        self.residual = residual
        super().__init__(
            f"phase commutation fails at offset {offset} (residual {residual:.3e})"
        )


class ClassicalInverseError(QCAError):
    """Raised when a classical automaton lacks a working local inverse."""
    pass


class NonLocalImageError(QCAError):
    """Raised when quantized images spread beyond the allowed neighborhood."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(
            f"quantized image is not localized on the bound region (residual {residual:.3e})"
        )


class MargolusDimensionError(QCAError):
    """Raised when quadrant dimensions do not multiply to the supercell dimension."""
    pass


class TranslationInvarianceError(QCAError):
    """Raised when a two-layer construction is only invariant under even translations."""

    def __init__(self, deviation: float):
        self.deviation = deviation
        super().__init__(f"rule is not translation invariant (deviation {deviation:.3e})")


class SupportStructureError(QCAError):
    """Raised when support algebras contradict the structure of a valid automaton."""
    pass


class SchemeError(QCAError, ValueError):
    """Raised when a rule's neighborhood scheme is outside an operation's scope."""
    pass


class CliffordSpecError(QCAError, ValueError):
    """Raised for malformed Pauli letters or Clifford rule strings."""
    pass


class CliffordGaugeError(QCAError):
    """Raised when a polynomial matrix fails the frozen determinant gauge."""
    pass


class SectorLeakError(QCAError):
    """Raised when a rule fails to preserve the one-particle sector."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"one-particle sector leaks (residual {residual:.3e})")


class PhaseTableError(QCAError, ValueError):
    """Raised when a two-cell phase table is not normalized or not unimodular."""
    pass


class CliffordPalindromeError(QCAError):
    """Raised when a Clifford rule's strings share no common palindrome center."""
    pass


class WalkSpecError(QCAError, ValueError):
    """Raised when a walk specification is inconsistent (amplitudes, lengths, steps)."""
    pass
