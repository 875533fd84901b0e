"""
app/core/lattice.py - Lattice geometry on Z^s

Implements:
1. Regions (sorted, duplicate-free site sets) and neighborhood schemes
2. Minkowski sums and differences of regions
3. Rectangular wrapping subgroups and the regularity test
4. Smallest regular torus search
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Tuple

from app.core.errors import DimensionMismatchError, IrregularTorusError, RegionOverflowError

Site = Tuple[int, ...]


def _as_site(x) -> Site:
    if isinstance(x, int):
        return (x,)
    return tuple(int(c) for c in x)


@dataclass(frozen=True)
class Region:
    sites: Tuple[Site, ...]
    s: int

    @classmethod
    def of(cls, sites: Iterable, s: int | None = None) -> "Region":
        cleaned = sorted(set(_as_site(x) for x in sites))
        if not cleaned:
            if s is None:
                raise DimensionMismatchError("empty region needs an explicit dimension")
            return cls((), s)
        dims = {len(x) for x in cleaned}
        if len(dims) != 1:
            raise DimensionMismatchError(f"sites of mixed dimension {sorted(dims)}")
        found = dims.pop()
        if s is not None and s != found:
            raise DimensionMismatchError(f"sites have dimension {found}, expected {s}")
        return cls(tuple(cleaned), found)

    @classmethod
    def interval(cls, lo: int, hi: int) -> "Region":
        """The one-dimensional region {lo, ..., hi}."""
        return cls.of(range(lo, hi + 1), s=1)

    @classmethod
    def box(cls, lo: int, hi: int, s: int) -> "Region":
        return cls.of(itertools.product(range(lo, hi + 1), repeat=s), s=s)

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.sites)

    def __contains__(self, x) -> bool:
        return _as_site(x) in self.sites

    def index(self, x) -> int:
        return self.sites.index(_as_site(x))

    def translate(self, shift) -> "Region":
        v = _as_site(shift)
        self._check(len(v))
        return Region.of((tuple(a + b for a, b in zip(x, v)) for x in self.sites), s=self.s)

    def union(self, other: "Region") -> "Region":
        self._check(other.s)
        return Region.of(self.sites + other.sites, s=self.s)

    def intersection(self, other: "Region") -> "Region":
        self._check(other.s)
        common = set(other.sites)
        return Region.of((x for x in self.sites if x in common), s=self.s)

    def difference(self, other: "Region") -> "Region":
        self._check(other.s)
        drop = set(other.sites)
        return Region.of((x for x in self.sites if x not in drop), s=self.s)

    def issubset(self, other: "Region") -> bool:
        return set(self.sites) <= set(other.sites)

    def negate(self) -> "Region":
        return Region.of((tuple(-c for c in x) for x in self.sites), s=self.s)

    def bounds(self) -> Tuple[Site, Site]:
        """Componentwise minimum and maximum over the region."""
        if not self.sites:
            zero = (0,) * self.s
            return zero, zero
        lo = tuple(min(x[i] for x in self.sites) for i in range(self.s))
        hi = tuple(max(x[i] for x in self.sites) for i in range(self.s))
        return lo, hi

    def _check(self, s: int) -> None:
        if s != self.s:
            raise DimensionMismatchError(f"dimension {s} does not match region dimension {self.s}")

    def to_list(self):
        return [list(x) for x in self.sites]


@dataclass(frozen=True)
class NeighborhoodScheme:
    region: Region

    def __post_init__(self) -> None:
        if not self.region.sites:
            raise DimensionMismatchError("neighborhood scheme must be non-empty")

    @classmethod
    def of(cls, offsets: Iterable, s: int | None = None) -> "NeighborhoodScheme":
        return cls(Region.of(offsets, s=s))

    @property
    def s(self) -> int:
        return self.region.s

    @property
    def offsets(self) -> Tuple[Site, ...]:
        return self.region.sites

    def __len__(self) -> int:
        return len(self.region)


@dataclass(frozen=True)
class TorusSpec:
    periods: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.periods or any(int(p) < 1 for p in self.periods):
            raise DimensionMismatchError(f"torus periods must be positive, got {self.periods}")

    @classmethod
    def of(cls, *periods: int) -> "TorusSpec":
        return cls(tuple(int(p) for p in periods))

    @property
    def s(self) -> int:
        return len(self.periods)

    @property
    def volume(self) -> int:
        out = 1
        for p in self.periods:
            out *= p
        return out

    def sites(self) -> Region:
        """All canonical sites of the torus in lexicographic order."""
        return Region.of(itertools.product(*(range(p) for p in self.periods)), s=self.s)

    def contains_lattice_vector(self, x: Site) -> bool:
        return all(c % p == 0 for c, p in zip(x, self.periods))


def region_arith(a: Region, b: Region, op: str = "sum") -> Region:
    """Minkowski sum a + b, or a + (-b) for op='difference'."""
    if a.s != b.s:
        raise DimensionMismatchError(f"regions of dimension {a.s} and {b.s}")
    if op == "difference":
        b = b.negate()
    elif op != "sum":
        raise ValueError(f"op must be 'sum' or 'difference', got '{op}'")
    return Region.of(
        (tuple(p + q for p, q in zip(x, y)) for x in a.sites for y in b.sites), s=a.s
    )


def overlap_region(scheme: NeighborhoodScheme) -> Region:
    """N + N - N - N, the set whose intersection with the wrapping group must be trivial."""
    n = scheme.region
    return region_arith(region_arith(region_arith(n, n), n, "difference"), n, "difference")


def is_regular(scheme: NeighborhoodScheme, torus: TorusSpec) -> bool:
    if scheme.s != torus.s:
        raise DimensionMismatchError(f"scheme dimension {scheme.s} vs torus dimension {torus.s}")
    zero = (0,) * scheme.s
    return not any(
        x != zero and torus.contains_lattice_vector(x) for x in overlap_region(scheme).sites
    )


def require_regular(scheme: NeighborhoodScheme, torus: TorusSpec) -> None:
    if not is_regular(scheme, torus):
        raise IrregularTorusError(
            f"torus {torus.periods} is not regular for scheme {list(scheme.offsets)}"
        )


def smallest_regular_torus(scheme: NeighborhoodScheme, minimum: int = 1) -> TorusSpec:
    """Cubic torus with the smallest period >= minimum that is regular for the scheme."""
    lo, hi = overlap_region(scheme).bounds()
    bound = max(max(h - l for l, h in zip(lo, hi)) // 2 + 1, minimum, 1)
    while not is_regular(scheme, TorusSpec((bound,) * scheme.s)):
        bound += 1
    return TorusSpec((bound,) * scheme.s)


def wrap(x, torus: TorusSpec) -> Site:
    site = _as_site(x)
    if len(site) != torus.s:
        raise DimensionMismatchError(f"site {site} does not match torus dimension {torus.s}")
    return tuple(c % p for c, p in zip(site, torus.periods))


def wrap_region(region: Region, torus: TorusSpec) -> Region:
    """Wrap every site; the region must not overlap itself on the torus."""
    wrapped = [wrap(x, torus) for x in region.sites]
    if len(set(wrapped)) != len(wrapped):
        raise RegionOverflowError(
            f"region {region.to_list()} overlaps itself on torus {torus.periods}"
        )
    return Region.of(wrapped, s=region.s)


def unit_cube(s: int) -> Region:
    """The supercell {0,1}^s."""
    return Region.box(0, 1, s)


def quadrant_vectors(s: int) -> Tuple[Site, ...]:
    """The 2^s vectors q in {-1,+1}^s, lexicographically sorted."""
    return tuple(itertools.product((-1, 1), repeat=s))
