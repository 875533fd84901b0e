"""
app/commands/handlers.py - One handler per subcommand

Implements:
1. Rule validation and Heisenberg evolution reports
2. Dense global unitaries, block decompositions, inverses and classification
3. Clifford search and symbolic Pauli evolution
4. Quasi-probability, coined-walk and classical quantization reports

Handlers take a validated CommandInvocation and return a CommandResult; the
front end renders it and maps engine exceptions to exit codes.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List

import numpy as np

from app.commands.reports import render_json, render_rows
from app.core.algebra import phase_distance
from app.core.classical import (
    MAX_CONFIGURATIONS,
    find_inverse,
    is_globally_invertible,
    quantize_classical,
)
from app.core.clifford import (
    PauliString,
    gauge_ok,
    light_cone_report,
    search_clifford,
    spaced,
    to_poly_matrix,
)
from app.core.errors import ClassicalInverseError, DimensionCapError
from app.core.lattice import Region, TorusSpec, smallest_regular_torus
from app.core.quasiprob import compare_two_site, quasi_report
from app.core.rule_io import (
    build_automaton,
    dump_rule,
    load_automaton,
    load_clifford,
    load_observable,
    load_rule,
    load_walk,
    parse_complex_matrix,
    rule_to_stanza,
)
from app.core.rules import LocalRule, apply_on_lattice, global_apply, global_unitary, validate_rule
from app.core.settings import get_settings
from app.core.structure import classify_nn_qubit, invert, margolus_decompose
from app.core.walks import CoinedWalkSpec, coined_walk_reference, lift_coined_walk, walk_history
from app.models import CommandInvocation

logger = logging.getLogger(__name__)

# Ring lengths reported for classical automata
RING_LENGTHS = range(3, 13)
# Ring length of the inverse check for nearest-neighbor rules
INVERSE_CHECK_LENGTH = 6


@dataclass(frozen=True)
class CommandResult:
    text: str
    status: int = 0


def scheme_text(region: Region) -> str:
    if region.s == 1:
        return "{" + ",".join(str(x[0]) for x in region.sites) + "}"
    return "{" + ",".join("(" + ",".join(map(str, x)) + ")" for x in region.sites) + "}"


def _torus_for(rule: LocalRule, inv: CommandInvocation, minimum: int = 1) -> TorusSpec:
    if inv.torus is not None:
        return TorusSpec.of(*inv.torus)
    return smallest_regular_torus(rule.scheme, minimum)


def _fits_cap(d: int, torus: TorusSpec) -> bool:
    return d ** torus.volume <= get_settings().dimension_cap


def _save_rule(rule: LocalRule, inv: CommandInvocation) -> None:
    if inv.rule_output is not None:
        dump_rule(rule, inv.rule_output)
        logger.info("Wrote rule to %s", inv.rule_output)


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------

def handle_validate(inv: CommandInvocation) -> CommandResult:
    rule = load_rule(inv.inputs[0])
    report = validate_rule(rule)
    verdict = "valid" if report.valid else "invalid"
    body = report.to_dict()
    body["summary"] = f"{verdict}; scheme {scheme_text(rule.region)}"
    return CommandResult(render_json(body), 0 if report.valid else 1)


def handle_evolve(inv: CommandInvocation) -> CommandResult:
    rule = load_rule(inv.inputs[0])
    obs = load_observable(inv.inputs[1], rule.cell_dim)
    torus = TorusSpec.of(*inv.torus) if inv.torus is not None else None
    for _ in range(inv.steps):
        obs = global_apply(rule, obs, torus) if torus is not None else apply_on_lattice(rule, obs)
    obs = obs.trimmed()
    body = {
        "steps": inv.steps,
        "torus": list(torus.periods) if torus is not None else None,
        "region": obs.region.to_list(),
        "matrix": obs.matrix,
    }
    return CommandResult(render_json(body))


def handle_unitary(inv: CommandInvocation) -> CommandResult:
    rule = load_rule(inv.inputs[0])
    torus = _torus_for(rule, inv)
    g = global_unitary(rule, torus)
    body = {"torus": list(torus.periods), "dimension": g.shape[0], "unitary": g}
    return CommandResult(render_json(body))


def handle_margolus(inv: CommandInvocation) -> CommandResult:
    rule = load_rule(inv.inputs[0])
    form = margolus_decompose(rule)
    body = form.to_dict()
    body["dimension_product"] = int(np.prod(form.quadrant_dims))
    body["supercell_dimension"] = rule.cell_dim ** (2 ** rule.s)
    return CommandResult(render_json(body))


def handle_invert(inv: CommandInvocation) -> CommandResult:
    rule = load_rule(inv.inputs[0])
    inverse = invert(margolus_decompose(rule))
    _save_rule(inverse, inv)
    body: Dict[str, Any] = {"rule": rule_to_stanza(inverse), "scheme": inverse.region.to_list()}
    torus = _torus_for(inverse, inv, INVERSE_CHECK_LENGTH)
    if _fits_cap(rule.cell_dim, torus):
        product = global_unitary(inverse, torus) @ global_unitary(rule, torus)
        body["torus"] = list(torus.periods)
        body["inverse_residual"] = phase_distance(product, np.eye(product.shape[0]))
    else:
        body["inverse_residual"] = None
        cap = get_settings().dimension_cap
        body["skipped"] = str(DimensionCapError(rule.cell_dim ** torus.volume, cap))
    return CommandResult(render_json(body))


def handle_classify(inv: CommandInvocation) -> CommandResult:
    rule = load_rule(inv.inputs[0])
    torus = TorusSpec.of(*inv.torus) if inv.torus is not None else None
    return CommandResult(render_json(classify_nn_qubit(rule, torus).to_dict()))


def handle_clifford_search(inv: CommandInvocation) -> CommandResult:
    solutions: List[Dict[str, Any]] = []
    for spec in search_clifford(inv.half_width):
        matrix = to_poly_matrix(spec, strict=False)
        entry = spec.to_dict()
        entry.update({
            "palindrome": spec.is_palindrome(),
            "polynomial_matrix": matrix.to_dict(),
            "determinant_gauge": gauge_ok(matrix, spec.shift),
        })
        solutions.append(entry)
    solutions.sort(key=lambda e: (e["xi"], e["eta"], e["shift"]))
    body = {"half_width": inv.half_width, "count": len(solutions), "solutions": solutions}
    return CommandResult(render_json(body))


def handle_clifford_evolve(inv: CommandInvocation) -> CommandResult:
    spec = load_clifford(inv.inputs[0])
    if inv.spacing > 1:
        spec = spaced(spec, inv.spacing)
    start = PauliString.single(inv.letter, inv.site)
    rows = light_cone_report(spec, start, inv.steps)
    header = ["t", "offset", "phase", "letters", "filling"]
    return CommandResult(render_rows(header, ([r[h] for h in header] for r in rows)))


def handle_quasiprob(inv: CommandInvocation) -> CommandResult:
    rule = load_rule(inv.inputs[0])
    body = quasi_report(rule)
    body["selected"] = compare_two_site(rule, *inv.etas).to_dict()
    return CommandResult(render_json(body))


def handle_walk(inv: CommandInvocation) -> CommandResult:
    stanza = load_walk(inv.inputs[0])
    amps = parse_complex_matrix([list(stanza.amplitudes)])[0]
    spec = CoinedWalkSpec(
        parse_complex_matrix(stanza.coin),
        stanza.steps,
        stanza.length,
        stanza.start,
        (complex(amps[0]), complex(amps[1])),
        stanza.allow_wrap,
    )
    rows = walk_history(lift_coined_walk(spec.coin), spec)
    reference = coined_walk_reference(spec)
    deviation = max(float(np.max(np.abs(a - b))) for a, b in zip(rows, reference))
    header = ["t"] + [f"p{x}" for x in range(spec.length)]
    text = render_rows(header, ([t, *row] for t, row in enumerate(rows)))
    if deviation > get_settings().tolerance:
        logger.warning("Walk deviates from the direct simulator by %.3e", deviation)
        return CommandResult(text, status=1)
    logger.info("Walk deviation from the direct simulator: %.3e", deviation)
    return CommandResult(text)


def handle_quantize(inv: CommandInvocation) -> CommandResult:
    stanza = load_automaton(inv.inputs[0])
    ca = build_automaton(stanza)
    rings = [
        {"length": n, "invertible": is_globally_invertible(ca, n)}
        for n in RING_LENGTHS
        if ca.alphabet_size ** n <= MAX_CONFIGURATIONS
    ]
    body: Dict[str, Any] = {
        "alphabet_size": ca.alphabet_size,
        "scheme": list(ca.scheme_fwd),
        "rings": rings,
    }
    try:
        if not ca.has_inverse:
            ca = find_inverse(ca, stanza.max_radius)
        rule = quantize_classical(ca, stanza.max_radius)
    except ClassicalInverseError as exc:
        body["error"] = f"missing inverse: {exc}"
        return CommandResult(render_json(body), 1)
    _save_rule(rule, inv)
    body.update({
        "inverse_scheme": list(ca.scheme_inv),
        "inverse_outputs": ca.inverse_outputs,
        "rule": rule_to_stanza(rule),
    })
    return CommandResult(render_json(body))


HANDLERS: Dict[str, Callable[[CommandInvocation], CommandResult]] = {
    "validate": handle_validate,
    "evolve": handle_evolve,
    "unitary": handle_unitary,
    "margolus": handle_margolus,
    "invert": handle_invert,
    "classify": handle_classify,
    "clifford-search": handle_clifford_search,
    "clifford-evolve": handle_clifford_evolve,
    "quasiprob": handle_quasiprob,
    "walk": handle_walk,
    "quantize": handle_quantize,
}


def dispatch(inv: CommandInvocation) -> CommandResult:
    handler = HANDLERS[inv.subcommand]
    logger.debug("Dispatching %s with %s", inv.subcommand, [str(p) for p in inv.inputs])
    return handler(inv)
