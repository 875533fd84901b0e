"""
app/core/rule_io.py - Definition files

Implements:
1. Complex matrix encoding ([re, im] pairs) in both directions
2. Loading rule, automaton, observable, walk and Clifford files
   through the pydantic stanzas in app.models
3. Building LocalRule objects from stanzas (recursively for compositions)
4. Writing any rule back as an explicit image stanza

Schema problems surface as SchemaError carrying the file and field location.
"""

from __future__ import annotations

import json
import logging
from functools import reduce
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np
from pydantic import TypeAdapter, ValidationError

from app.core.classical import (
    ClassicalCA,
    block_exchange_automaton,
    cellwise_permutation,
    elementary_rule,
    quantize_classical,
    shift_automaton,
)
from app.core.clifford import CliffordRuleSpec, clifford_rule, spaced
from app.core.errors import SchemaError
from app.core.lattice import NeighborhoodScheme, Region
from app.core.operators import LocalOperator, embed_matrix
from app.core.rules import (
    AbelianRuleSpec,
    CommutingUnitaryFamily,
    LocalRule,
    cellwise_rule,
    compose_rules,
    from_abelian_spec,
    from_commuting_unitary,
    from_margolus,
    phase_gate_rule,
    shift_rule,
)
from app.core.structure import regroup
from app.core.walks import lift_coined_walk
from app.models import (
    AbelianRule,
    AutomatonFile,
    CellwiseRule,
    CliffordRule,
    CommutingRule,
    ComposedRule,
    ImagesRule,
    MargolusRule,
    ObservableFile,
    PhaseGateRule,
    QuantizedRule,
    RegroupedRule,
    RuleStanza,
    ShiftRule,
    WalkFile,
    WalkRule,
)

logger = logging.getLogger(__name__)

_RULE_ADAPTER: TypeAdapter = TypeAdapter(RuleStanza)
PathLike = Union[str, Path]


def parse_complex_matrix(rows) -> np.ndarray:
    out = []
    for row in rows:
        out.append([
            complex(x[0], x[1]) if isinstance(x, (tuple, list)) else complex(x) for x in row
        ])
    m = np.asarray(out, dtype=complex)
    if m.ndim != 2:
        raise SchemaError("matrix rows have unequal lengths")
    return m


def _clean(x: float) -> float:
    # normalize negative zero for byte-stable output
    return float(x) + 0.0


def encode_complex(value) -> Any:
    """Nested lists with complex entries as [re, im]; real arrays stay real."""
    arr = np.asarray(value)
    if np.iscomplexobj(arr):
        if arr.ndim == 0:
            return [_clean(arr.real), _clean(arr.imag)]
        return [encode_complex(x) for x in arr]
    if arr.ndim == 0:
        return _clean(arr) if arr.dtype.kind == "f" else arr.item()
    return [encode_complex(x) for x in arr]


def _read_json(path: PathLike) -> Any:
    p = Path(path)
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise SchemaError("file not found", source=str(p)) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}", source=str(p)
        ) from exc


def _schema_error(exc: ValidationError, source: str) -> SchemaError:
    first = exc.errors()[0]
    location = ".".join(str(x) for x in first.get("loc", ()))
    return SchemaError(f"{location or '<root>'}: {first.get('msg')}", source=source)


def _validate(model, data: Any, source: str):
    try:
        if isinstance(model, TypeAdapter):
            return model.validate_python(data)
        return model.model_validate(data)
    except ValidationError as exc:
        raise _schema_error(exc, source) from exc


# ---------------------------------------------------------------------------
# Stanza builders
# ---------------------------------------------------------------------------

def build_automaton(stanza: AutomatonFile) -> ClassicalCA:
    if stanza.elementary is not None:
        return elementary_rule(stanza.elementary)
    if stanza.preset == "block_exchange":
        return block_exchange_automaton()
    if stanza.preset == "shift":
        return shift_automaton(stanza.alphabet_size or 2, 1)
    if stanza.preset == "cellwise":
        return cellwise_permutation(stanza.permutation)
    ca = ClassicalCA(stanza.alphabet_size, tuple(stanza.scheme), np.asarray(stanza.outputs))
    if stanza.inverse_scheme is not None:
        ca = ca.with_inverse(stanza.inverse_scheme, np.asarray(stanza.inverse_outputs))
    return ca


def build_clifford_spec(stanza: CliffordRule) -> CliffordRuleSpec:
    spec = CliffordRuleSpec(stanza.half_width, stanza.xi, stanza.eta, stanza.shift, stanza.signs)
    return spaced(spec, stanza.spacing) if stanza.spacing > 1 else spec


def build_rule(stanza) -> LocalRule:
    """LocalRule for any rule stanza."""
    if isinstance(stanza, ImagesRule):
        d = stanza.cell_dim
        images = np.stack([
            np.stack([parse_complex_matrix(stanza.images[i][j]) for j in range(d)])
            for i in range(d)
        ])
        return LocalRule(d, NeighborhoodScheme.of(stanza.scheme), images)
    if isinstance(stanza, CellwiseRule):
        return cellwise_rule(parse_complex_matrix(stanza.unitary), s=stanza.s)
    if isinstance(stanza, ShiftRule):
        step = stanza.step[0] if len(stanza.step) == 1 else tuple(stanza.step)
        return shift_rule(stanza.cell_dim, step, s=len(stanza.step))
    if isinstance(stanza, PhaseGateRule):
        return phase_gate_rule(stanza.phi)
    if isinstance(stanza, AbelianRule):
        phases = parse_complex_matrix(stanza.phases)
        if stanza.cellwise is None:
            w = np.eye(phases.shape[0])
        else:
            w = parse_complex_matrix(stanza.cellwise)
        return from_abelian_spec(AbelianRuleSpec(phases, w))
    if isinstance(stanza, CommutingRule):
        region = Region.of(stanza.sites)
        u0 = LocalOperator(region, parse_complex_matrix(stanza.unitary), stanza.cell_dim)
        return from_commuting_unitary(CommutingUnitaryFamily.infer(u0))
    if isinstance(stanza, MargolusRule):
        return from_margolus(
            parse_complex_matrix(stanza.u),
            parse_complex_matrix(stanza.v),
            stanza.quadrant_dims,
            stanza.cell_dim,
            stanza.s,
        )
    if isinstance(stanza, CliffordRule):
        return clifford_rule(build_clifford_spec(stanza))
    if isinstance(stanza, WalkRule):
        return lift_coined_walk(parse_complex_matrix(stanza.coin))
    if isinstance(stanza, QuantizedRule):
        return quantize_classical(build_automaton(stanza.automaton), stanza.automaton.max_radius)
    if isinstance(stanza, ComposedRule):
        rules = [build_rule(s) for s in stanza.steps]
        return reduce(compose_rules, rules)
    if isinstance(stanza, RegroupedRule):
        return regroup(build_rule(stanza.rule), stanza.k)
    raise SchemaError(f"unsupported rule kind {getattr(stanza, 'kind', '?')}")


# ---------------------------------------------------------------------------
# File loaders
# ---------------------------------------------------------------------------

def parse_rule(data: Any, source: str = "<rule>") -> LocalRule:
    return build_rule(_validate(_RULE_ADAPTER, data, source))


def load_rule(path: PathLike) -> LocalRule:
    rule = parse_rule(_read_json(path), str(path))
    logger.info("Loaded rule d=%d scheme=%s from %s", rule.cell_dim, rule.region.to_list(), path)
    return rule


def load_automaton(path: PathLike) -> AutomatonFile:
    return _validate(AutomatonFile, _read_json(path), str(path))


def load_observable(path: PathLike, cell_dim: int) -> LocalOperator:
    stanza = _validate(ObservableFile, _read_json(path), str(path))
    region = Region.of(stanza.sites)
    if len(region) != len(stanza.sites):
        raise SchemaError("observable sites repeat", source=str(path))
    matrix = parse_complex_matrix(stanza.matrix)
    # factors are listed in file order; LocalOperator wants lexicographic order
    try:
        lex = embed_matrix(matrix, [tuple(x) for x in stanza.sites], region, cell_dim)
    except ValueError as exc:
        raise SchemaError(str(exc), source=str(path)) from exc
    return LocalOperator(region, lex, cell_dim)


def load_walk(path: PathLike) -> WalkFile:
    return _validate(WalkFile, _read_json(path), str(path))


def load_clifford(path: PathLike) -> CliffordRuleSpec:
    return build_clifford_spec(_validate(CliffordRule, _read_json(path), str(path)))


def rule_to_stanza(rule: LocalRule) -> Dict[str, Any]:
    d = rule.cell_dim
    images: List[List[Any]] = [
        [encode_complex(rule.images[i, j]) for j in range(d)] for i in range(d)
    ]
    return {
        "kind": "images",
        "cell_dim": d,
        "scheme": rule.region.to_list(),
        "images": images,
    }


def dump_rule(rule: LocalRule, path: PathLike) -> None:
    Path(path).write_text(
        json.dumps(rule_to_stanza(rule), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
