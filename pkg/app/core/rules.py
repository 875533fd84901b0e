"""
app/core/rules.py - Local transition rules and their global evolution

Implements:
1. LocalRule: images of the d^2 one-cell matrix units on a neighborhood
2. Translate commutation validation with a per-offset report
3. Heisenberg-picture evolution of local observables on regular tori
4. Dense global unitaries (cached per rule fingerprint and torus)
5. Constructors: cellwise, shift, composition, commuting-unitary products,
   abelian phase-gate specs, two-layer block (Margolus) unitary pairs

Convention: the shift rule with step +1 maps A at x to A at x+1, and a rule
acts as T(A) = G^dag A G with G its global unitary.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.core.algebra import (
    as_matrix,
    fix_global_phase,
    homomorphism_residual,
    require_unitary,
    residual_norm,
)
from app.core.errors import (
    DimensionCapError,
    DimensionMismatchError,
    HomomorphismError,
    MargolusDimensionError,
    NotAutomorphismError,
    PhaseCommutationError,
    PhaseTableError,
    RuleValidationError,
    TranslationInvarianceError,
)
from app.core.lattice import (
    NeighborhoodScheme,
    Region,
    Site,
    TorusSpec,
    quadrant_vectors,
    region_arith,
    require_regular,
    unit_cube,
    wrap,
    wrap_region,
)
from app.core.operators import (
    LocalOperator,
    apply_local,
    embed_matrix,
    matrix_unit,
    permute_tensor_factors,
    weyl_generators,
)
from app.core.settings import get_settings

logger = logging.getLogger(__name__)


def _stable_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class LocalRule:
    cell_dim: int
    scheme: NeighborhoodScheme
    images: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        d = int(self.cell_dim)
        stack = np.asarray(self.images, dtype=complex)
        dim = d ** len(self.scheme)
        if stack.shape != (d, d, dim, dim):
            raise DimensionMismatchError(
                f"images for d={d} on {len(self.scheme)} sites need shape "
                f"{(d, d, dim, dim)}, got {stack.shape}"
            )
        if not np.all(np.isfinite(stack)):
            raise DimensionMismatchError("rule images have non-finite entries")
        object.__setattr__(self, "images", stack)

    @property
    def region(self) -> Region:
        return self.scheme.region

    @property
    def s(self) -> int:
        return self.scheme.s

    def image(self, i: int, j: int) -> LocalOperator:
        return LocalOperator(self.region, self.images[i, j], self.cell_dim)

    def image_of(self, a) -> LocalOperator:
        """T0 extended linearly to an arbitrary one-cell operator."""
        a = as_matrix(a)
        if a.shape != (self.cell_dim, self.cell_dim):
            raise DimensionMismatchError(
                f"one-cell operator must be {self.cell_dim}x{self.cell_dim}"
            )
        return LocalOperator(self.region, np.einsum("ij,ijab->ab", a, self.images), self.cell_dim)

    def widened(self, region: Region) -> "LocalRule":
        if not self.region.issubset(region):
            raise DimensionMismatchError(
                f"region {region.to_list()} does not contain scheme {self.region.to_list()}"
            )
        if region == self.region:
            return self
        d = self.cell_dim
        stack = np.stack([
            np.stack([
                embed_matrix(self.images[i, j], self.region.sites, region, d) for j in range(d)
            ])
            for i in range(d)
        ])
        return LocalRule(d, NeighborhoodScheme(region), stack)

    def trimmed(self, tol: Optional[float] = None) -> "LocalRule":
        """Shrink the scheme to the union of the minimal image supports."""
        d = self.cell_dim
        support: Optional[Region] = None
        for i in range(d):
            for j in range(d):
                r = self.image(i, j).trimmed(tol).region
                support = r if support is None else support.union(r)
        if support is None or support == self.region:
            return self
        stack = np.stack([
            np.stack([self.image(i, j).reduce_to(support).matrix for j in range(d)])
            for i in range(d)
        ])
        logger.debug("Trimmed scheme %s -> %s", self.region.to_list(), support.to_list())
        return LocalRule(d, NeighborhoodScheme(support), stack)

    def fingerprint(self) -> str:
        meta = _stable_json({"d": self.cell_dim, "offsets": self.region.to_list()})
        rounded = np.round(self.images, 12) + 0.0
        digest = hashlib.sha256(meta.encode("utf-8"))
        digest.update(np.ascontiguousarray(rounded).tobytes())
        return digest.hexdigest()


def rule_distance(a: LocalRule, b: LocalRule) -> float:
    """Largest image distance between two rules, compared on the union of schemes."""
    if a.cell_dim != b.cell_dim:
        raise DimensionMismatchError("rules have different cell dimensions")
    d = a.cell_dim
    return max(a.image(i, j).distance(b.image(i, j)) for i in range(d) for j in range(d))


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    homomorphism_residual: float
    offsets: Dict[Site, float]
    offending: Tuple[Site, ...]
    scheme: Tuple[Site, ...]

    @property
    def worst(self) -> float:
        return max(self.offsets.values(), default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "valid": self.valid,
            "homomorphism_residual": self.homomorphism_residual,
            "scheme": [list(x) for x in self.scheme],
            "offsets": [
                {"offset": list(x), "commutator_norm": v} for x, v in sorted(self.offsets.items())
            ],
            "offending": [list(x) for x in self.offending],
        }


def validate_rule(rule: LocalRule) -> ValidationReport:
    """Translate commutation test for the cell algebra images.

    T0(A0) is generated by the images of the clock and shift matrices, so it
    is enough to test those against every overlapping translate.
    """
    tol = get_settings().tolerance
    hom = homomorphism_residual(rule.images)
    if hom > tol:
        raise HomomorphismError(hom)

    n = rule.region
    zero = (0,) * rule.s
    gens = [rule.image_of(g) for g in weyl_generators(rule.cell_dim)]
    offsets: Dict[Site, float] = {}
    for x in region_arith(n, n, "difference").sites:
        if x == zero or not n.intersection(n.translate(x)).sites:
            continue
        joint = n.union(n.translate(x))
        worst = 0.0
        for a in gens:
            left = a.embed(joint).matrix
            for b in gens:
                right = b.translate(x).embed(joint).matrix
                worst = max(worst, residual_norm(left @ right - right @ left))
        offsets[x] = worst
    offending = tuple(x for x, v in sorted(offsets.items()) if v > tol)
    report = ValidationReport(
        valid=not offending,
        homomorphism_residual=hom,
        offsets=offsets,
        offending=offending,
        scheme=n.sites,
    )
    logger.info(
        "Validated rule d=%d scheme=%s valid=%s worst=%.3e",
        rule.cell_dim, n.to_list(), report.valid, report.worst,
    )
    return report


def require_valid(rule: LocalRule) -> LocalRule:
    report = validate_rule(rule)
    if not report.valid:
        raise RuleValidationError(report.offending, report.worst)
    return rule


# ---------------------------------------------------------------------------
# Heisenberg evolution
# ---------------------------------------------------------------------------

def _check_dimension(dim: int) -> None:
    cap = get_settings().dimension_cap
    if dim > cap:
        raise DimensionCapError(dim, cap)


def _evolve(
    rule: LocalRule,
    obs: LocalOperator,
    target: Region,
    place: Callable[[Site], Site],
) -> np.ndarray:
    """Sum over matrix units of obs of products of translated cell images.

    Factors for different obs sites commute, so the product order is free.
    """
    d = rule.cell_dim
    if obs.cell_dim != d:
        raise DimensionMismatchError(f"observable cell dim {obs.cell_dim} != rule cell dim {d}")
    _check_dimension(d ** len(target))
    embedded = []
    for y in obs.region.sites:
        sites = [place(tuple(a + b for a, b in zip(y, n))) for n in rule.region.sites]
        embedded.append([
            [embed_matrix(rule.images[i, j], sites, target, d) for j in range(d)]
            for i in range(d)
        ])
    n_obs = obs.n_sites
    t = obs.matrix.reshape((d,) * (2 * n_obs))
    # interleave row/column indices per site: (i1, j1, i2, j2, ...)
    order = [a for k in range(n_obs) for a in (k, n_obs + k)]
    t = t.transpose(order)
    dim = d ** len(target)

    def accumulate(block: np.ndarray, k: int, prefix: np.ndarray) -> np.ndarray:
        if k == n_obs:
            return complex(block) * prefix
        out = np.zeros((dim, dim), dtype=complex)
        for i in range(d):
            for j in range(d):
                sub = block[i, j]
                if not np.any(sub):
                    continue
                out += accumulate(sub, k + 1, prefix @ embedded[k][i][j])
        return out

    return accumulate(t, 0, np.eye(dim, dtype=complex))


def global_apply(rule: LocalRule, obs: LocalOperator, torus: TorusSpec) -> LocalOperator:
    """Image of a local observable under the global rule on a regular torus."""
    require_regular(rule.scheme, torus)
    wrap_region(obs.region, torus)
    target = wrap_region(region_arith(obs.region, rule.region), torus)
    matrix = _evolve(rule, obs, target, lambda x: wrap(x, torus))
    return LocalOperator(target, matrix, rule.cell_dim)


def apply_on_lattice(rule: LocalRule, obs: LocalOperator) -> LocalOperator:
    """Image of a local observable under the global rule on the infinite lattice."""
    target = region_arith(obs.region, rule.region)
    return LocalOperator(target, _evolve(rule, obs, target, lambda x: x), rule.cell_dim)


_UNITARY_CACHE: "OrderedDict[Tuple[str, Tuple[int, ...]], np.ndarray]" = OrderedDict()
_CACHE_LOCK = threading.Lock()


def clear_unitary_cache() -> None:
    with _CACHE_LOCK:
        _UNITARY_CACHE.clear()


def global_unitary(rule: LocalRule, torus: TorusSpec) -> np.ndarray:
    """Dense unitary G of the global rule on a regular torus, T(A) = G^dag A G."""
    require_regular(rule.scheme, torus)
    settings = get_settings()
    d = rule.cell_dim
    sites = torus.sites().sites
    n_sites = len(sites)
    dim = d ** n_sites
    _check_dimension(dim)

    key = (rule.fingerprint(), torus.periods)
    with _CACHE_LOCK:
        if key in _UNITARY_CACHE:
            _UNITARY_CACHE.move_to_end(key)
            return _UNITARY_CACHE[key].copy()

    index = {x: k for k, x in enumerate(sites)}
    axes = [
        [index[wrap(tuple(a + b for a, b in zip(y, n)), torus)] for n in rule.region.sites]
        for y in sites
    ]
    shape = (d,) * n_sites
    rng = np.random.default_rng(settings.seed)
    psi = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)).reshape(shape)
    for ax in axes:
        psi = apply_local(psi, rule.images[0, 0], ax, d)
    norm = float(np.linalg.norm(psi))
    if norm < 1e-6:
        raise NotAutomorphismError("image of the all-zero projector annihilated the test vector")
    psi = psi / norm

    columns: List[np.ndarray] = []

    def grow(vec: np.ndarray, k: int) -> None:
        if k == n_sites:
            columns.append(vec.reshape(-1))
            return
        for i in range(d):
            grow(apply_local(vec, rule.images[i, 0], axes[k], d), k + 1)

    grow(psi, 0)
    v = np.stack(columns, axis=1)
    g = fix_global_phase(require_unitary(v, "global unitary").conj().T)
    logger.debug("Built global unitary dim=%d on torus %s", dim, torus.periods)

    if settings.cache_size > 0:
        with _CACHE_LOCK:
            _UNITARY_CACHE[key] = g
            while len(_UNITARY_CACHE) > settings.cache_size:
                _UNITARY_CACHE.popitem(last=False)
    return g.copy()


def embed_on_torus(obs: LocalOperator, torus: TorusSpec) -> np.ndarray:
    """Dense matrix of a local observable on the full torus."""
    wrapped = [wrap(x, torus) for x in obs.region.sites]
    return embed_matrix(obs.matrix, wrapped, torus.sites(), obs.cell_dim)


def images_on_torus(rule: LocalRule, torus: TorusSpec) -> np.ndarray:
    """Cell images read back from the dense global unitary, in scheme offset order."""
    d = rule.cell_dim
    g = global_unitary(rule, torus)
    full = torus.sites()
    origin = (0,) * torus.s
    target = wrap_region(rule.region, torus)
    wanted = [wrap(n, torus) for n in rule.region.sites]
    out = np.zeros_like(rule.images)
    for i in range(d):
        for j in range(d):
            a = embed_matrix(matrix_unit(d, i, j), [origin], full, d)
            reduced = LocalOperator(full, g.conj().T @ a @ g, d).reduce_to(target)
            perm = [reduced.region.index(x) for x in wanted]
            out[i, j] = permute_tensor_factors(reduced.matrix, [d] * len(perm), perm)
    return out


# ---------------------------------------------------------------------------
# Elementary constructors
# ---------------------------------------------------------------------------

def cellwise_rule(w, s: int = 1) -> LocalRule:
    """T0(A) = W^dag A W on the cell itself."""
    w = require_unitary(w, "cellwise unitary")
    d = w.shape[0]
    stack = np.stack([
        np.stack([w.conj().T @ matrix_unit(d, i, j) @ w for j in range(d)]) for i in range(d)
    ])
    return LocalRule(d, NeighborhoodScheme.of([(0,) * s], s=s), stack)


def identity_rule(d: int, s: int = 1) -> LocalRule:
    return cellwise_rule(np.eye(d), s=s)


def shift_rule(d: int, step=1, s: int = 1) -> LocalRule:
    """Moves every observable by `step` lattice units."""
    offset = (step,) if isinstance(step, int) else tuple(step)
    if len(offset) != s:
        raise DimensionMismatchError(f"shift {offset} does not match dimension {s}")
    stack = np.stack([np.stack([matrix_unit(d, i, j) for j in range(d)]) for i in range(d)])
    return LocalRule(d, NeighborhoodScheme.of([offset], s=s), stack)


def compose_rules(outer: LocalRule, inner: LocalRule) -> LocalRule:
    """The rule A -> outer(inner(A)); global unitaries multiply as G_inner G_outer."""
    if outer.cell_dim != inner.cell_dim or outer.s != inner.s:
        raise DimensionMismatchError("composed rules must share cell dimension and lattice")
    d = inner.cell_dim
    images = [[apply_on_lattice(outer, inner.image(i, j)) for j in range(d)] for i in range(d)]
    region = images[0][0].region
    stack = np.stack([np.stack([images[i][j].matrix for j in range(d)]) for i in range(d)])
    return LocalRule(d, NeighborhoodScheme(region), stack).trimmed()


# ---------------------------------------------------------------------------
# Commuting-unitary products
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CommutingUnitaryFamily:
    u0: LocalOperator
    phases: Dict[Site, complex]

    @classmethod
    def infer(cls, u0: LocalOperator) -> "CommutingUnitaryFamily":
        """Read the commutation phases off the overlapping translates."""
        require_unitary(u0.matrix, "u0")
        phases: Dict[Site, complex] = {}
        for x, joint, a, b in _overlapping_pairs(u0):
            overlap = np.vdot(b @ a, a @ b) / a.shape[0]
            phases[x] = complex(overlap / abs(overlap)) if abs(overlap) > 1e-12 else 1.0 + 0j
        return cls(u0, phases)

    def check(self) -> None:
        require_unitary(self.u0.matrix, "u0")
        tol = get_settings().tolerance
        for x, joint, a, b in _overlapping_pairs(self.u0):
            zeta = self.phases.get(x)
            if zeta is None or abs(abs(zeta) - 1.0) > tol:
                raise PhaseCommutationError(x, float("inf"))
            residual = residual_norm(a @ b - zeta * (b @ a))
            if residual > tol:
                raise PhaseCommutationError(x, residual)


def _overlapping_pairs(u0: LocalOperator):
    n = u0.region
    zero = (0,) * n.s
    for x in region_arith(n, n, "difference").sites:
        if x == zero:
            continue
        joint = n.union(n.translate(x))
        yield x, joint, u0.embed(joint).matrix, u0.translate(x).embed(joint).matrix


def from_commuting_unitary(fam: CommutingUnitaryFamily) -> LocalRule:
    """Rule T0(A) = U^dag A U with U the product of the translates touching the origin."""
    fam.check()
    base = fam.u0.region
    d = fam.u0.cell_dim
    scheme = region_arith(base, base, "difference")
    product = np.eye(d ** len(scheme), dtype=complex)
    for x in base.negate().sites:
        product = product @ fam.u0.translate(x).embed(scheme).matrix
    origin = (0,) * base.s
    stack = np.stack([
        np.stack([
            product.conj().T @ embed_matrix(matrix_unit(d, i, j), [origin], scheme, d) @ product
            for j in range(d)
        ])
        for i in range(d)
    ])
    return require_valid(LocalRule(d, NeighborhoodScheme(scheme), stack).trimmed())


def ising_family(t: float = np.pi / 4) -> CommutingUnitaryFamily:
    """exp(-i t H) with H = (1 - Z) (x) (1 - Z) on two neighboring qubits."""
    z = np.diag([1.0, -1.0]).astype(complex)
    h = np.kron(np.eye(2) - z, np.eye(2) - z)
    u0 = LocalOperator(Region.interval(0, 1), linalg.expm(-1j * t * h), 2)
    return CommutingUnitaryFamily.infer(u0)


# ---------------------------------------------------------------------------
# Abelian phase-gate specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbelianRuleSpec:
    phases: np.ndarray
    cellwise: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.phases, dtype=complex)
        v = as_matrix(self.cellwise)
        tol = get_settings().tolerance
        if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape != v.shape:
            raise PhaseTableError(f"phase table {u.shape} and cellwise {v.shape} must be d x d")
        if np.max(np.abs(np.abs(u) - 1.0)) > tol:
            raise PhaseTableError("phase table entries must have unit modulus")
        if np.max(np.abs(u[0, :] - 1.0)) > tol or np.max(np.abs(u[:, 0] - 1.0)) > tol:
            raise PhaseTableError("first row and column of the phase table must be 1")
        require_unitary(v, "cellwise unitary")
        object.__setattr__(self, "phases", u)
        object.__setattr__(self, "cellwise", v)

    @property
    def cell_dim(self) -> int:
        return self.phases.shape[0]


def from_abelian_spec(spec: AbelianRuleSpec) -> LocalRule:
    """T0(A) = X^dag (1 (x) V^dag A V (x) 1) X with X = (U (x) 1)(1 (x) U), U = diag u."""
    d = spec.cell_dim
    u = np.diag(spec.phases.reshape(-1))
    eye = np.eye(d)
    x = np.kron(u, eye) @ np.kron(eye, u)
    v = spec.cellwise
    stack = np.stack([
        np.stack([
            x.conj().T @ np.kron(np.kron(eye, v.conj().T @ matrix_unit(d, i, j) @ v), eye) @ x
            for j in range(d)
        ])
        for i in range(d)
    ])
    rule = LocalRule(d, NeighborhoodScheme.of([-1, 0, 1]), stack)
    return require_valid(rule.trimmed())


def phase_gate_rule(phi: float) -> LocalRule:
    """Controlled-phase chain on qubits, diag(1, 1, 1, e^{i phi}) on every bond."""
    phases = np.array([[1.0, 1.0], [1.0, np.exp(1j * phi)]], dtype=complex)
    return from_abelian_spec(AbelianRuleSpec(phases, np.eye(2)))


def three_site_phase(phases) -> np.ndarray:
    """u(mu, kappa, nu) = u(mu, kappa) u(kappa, nu)."""
    u = np.asarray(phases, dtype=complex)
    return u[:, :, None] * u[None, :, :]


def functional_equation_residual(u3) -> float:
    """Largest violation of the consistency equation for conditional phases."""
    u = np.asarray(u3, dtype=complex)
    d = u.shape[0]
    worst = 0.0
    for mu, a, b, a2, b2, nu in itertools.product(range(d), repeat=6):
        lhs = (u[mu, b, a2] / u[mu, a, a2]) * (u[b, b2, nu] / u[b, a2, nu])
        rhs = (u[mu, b, b2] / u[mu, a, b2]) * (u[a, b2, nu] / u[a, a2, nu])
        worst = max(worst, abs(lhs - rhs))
    return worst


# ---------------------------------------------------------------------------
# Two-layer block unitaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MargolusLayout:
    s: int
    quadrants: Tuple[Site, ...]
    cube: Region
    slot_regions: Tuple[Region, ...]
    window: Region
    neighborhood: Region

    @property
    def concat_sites(self) -> List[Site]:
        return [x for r in self.slot_regions for x in r.sites]


def margolus_layout(s: int) -> MargolusLayout:
    cube = unit_cube(s)
    quadrants = quadrant_vectors(s)
    slots = tuple(cube.translate(q) for q in quadrants)
    return MargolusLayout(
        s=s,
        quadrants=quadrants,
        cube=cube,
        slot_regions=slots,
        window=Region.box(-1, 2, s),
        neighborhood=Region.box(-1, 1, s),
    )


def _slot_embeddings(v: np.ndarray, dims: Sequence[int]) -> List[np.ndarray]:
    """Phi_q[k, l] = V (E_kl in slot q) V^dag, as matrices on the cube + 1."""
    out = []
    for a, n in enumerate(dims):
        before = int(np.prod(dims[:a])) if a else 1
        after = int(np.prod(dims[a + 1:])) if a + 1 < len(dims) else 1
        phi = np.zeros((n, n) + v.shape, dtype=complex)
        for k in range(n):
            for l in range(n):
                slot = np.kron(np.kron(np.eye(before), matrix_unit(n, k, l)), np.eye(after))
                phi[k, l] = v @ slot @ v.conj().T
        out.append(phi)
    return out


def margolus_transform(
    u, v, dims: Sequence[int], d: int, s: int
) -> Callable[[np.ndarray], np.ndarray]:
    """Return X -> T(X) for X on the unit cube, with T(X) on the window {-1..2}^s."""
    layout = margolus_layout(s)
    dims = [int(n) for n in dims]
    cells = 2 ** s
    block = d ** cells
    if len(dims) != len(layout.quadrants):
        raise MargolusDimensionError(
            f"expected {len(layout.quadrants)} quadrant dims, got {len(dims)}"
        )
    if int(np.prod(dims)) != block:
        raise MargolusDimensionError(
            f"quadrant dims {dims} multiply to {int(np.prod(dims))}, not {block}"
        )
    u = as_matrix(u)
    v = as_matrix(v)
    if u.shape != (block, block) or v.shape != (block, block):
        raise MargolusDimensionError(f"u and v must be {block}x{block}")
    require_unitary(u, "u")
    require_unitary(v, "v")
    _check_dimension(d ** len(layout.window))

    phis = _slot_embeddings(v, dims)
    q = len(dims)
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    ks = [next(letters) for _ in range(q)]
    ls = [next(letters) for _ in range(q)]
    rs = [next(letters) for _ in range(q)]
    cs = [next(letters) for _ in range(q)]
    subscripts = (
        "".join(ks + ls) + ","
        + ",".join(ks[a] + ls[a] + rs[a] + cs[a] for a in range(q))
        + "->" + "".join(rs + cs)
    )
    concat = layout.concat_sites
    perm = [concat.index(x) for x in layout.window.sites]
    total = block ** q

    def transform(x: np.ndarray) -> np.ndarray:
        xp = (u @ as_matrix(x) @ u.conj().T).reshape(tuple(dims) * 2)
        out = np.einsum(subscripts, xp, *phis).reshape(total, total)
        return permute_tensor_factors(out, [d] * len(concat), perm)

    return transform


def from_margolus(u, v, dims: Sequence[int], cell_dim: int, s: int = 1) -> LocalRule:
    """Rule defined by a two-layer block unitary pair, checked for translation invariance."""
    d = int(cell_dim)
    layout = margolus_layout(s)
    transform = margolus_transform(u, v, dims, d, s)
    origin = (0,) * s
    stack = np.zeros((d, d) + (d ** len(layout.neighborhood),) * 2, dtype=complex)
    deviation = 0.0
    for i in range(d):
        for j in range(d):
            e = matrix_unit(d, i, j)
            image = LocalOperator(
                layout.window, transform(embed_matrix(e, [origin], layout.cube, d)), d
            )
            local = image.reduce_to(layout.neighborhood)
            deviation = max(deviation, local.distance(image))
            stack[i, j] = local.matrix
            for c in layout.cube.sites:
                if c == origin:
                    continue
                moved = transform(embed_matrix(e, [c], layout.cube, d))
                expected = local.translate(c).embed(layout.window).matrix
                deviation = max(deviation, residual_norm(moved - expected))
    if deviation > get_settings().tolerance:
        raise TranslationInvarianceError(deviation)
    rule = LocalRule(d, NeighborhoodScheme(layout.neighborhood), stack).trimmed()
    return require_valid(rule)
