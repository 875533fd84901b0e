from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# A complex entry is a plain number or an [re, im] pair
ComplexEntry = Union[float, Tuple[float, float]]
ComplexMatrixJSON = List[List[ComplexEntry]]


class _Stanza(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ImagesRule(_Stanza):
    kind: Literal["images"] = "images"
    cell_dim: int = Field(..., ge=2)
    scheme: List[List[int]] = Field(..., min_length=1)
    images: List[List[ComplexMatrixJSON]]

    @model_validator(mode="after")
    def validate_image_grid(self) -> "ImagesRule":
        d = self.cell_dim
        if len(self.images) != d or any(len(row) != d for row in self.images):
            raise ValueError(f"images must be a {d}x{d} grid of matrices")
        return self


class CellwiseRule(_Stanza):
    kind: Literal["cellwise"]
    unitary: ComplexMatrixJSON
    s: int = Field(default=1, ge=1, le=3)


class ShiftRule(_Stanza):
    kind: Literal["shift"]
    cell_dim: int = Field(..., ge=2)
    step: List[int] = Field(default_factory=lambda: [1], min_length=1, max_length=3)


class PhaseGateRule(_Stanza):
    kind: Literal["phase_gate"]
    phi: float


class AbelianRule(_Stanza):
    kind: Literal["abelian"]
    phases: ComplexMatrixJSON
    cellwise: Optional[ComplexMatrixJSON] = None


class CommutingRule(_Stanza):
    kind: Literal["commuting"]
    cell_dim: int = Field(..., ge=2)
    sites: List[List[int]] = Field(..., min_length=1)
    unitary: ComplexMatrixJSON


class MargolusRule(_Stanza):
    kind: Literal["margolus"]
    cell_dim: int = Field(..., ge=2)
    s: int = Field(default=1, ge=1, le=2)
    quadrant_dims: List[int] = Field(..., min_length=2)
    u: ComplexMatrixJSON
    v: ComplexMatrixJSON


class CliffordRule(_Stanza):
    kind: Literal["clifford"] = "clifford"
    half_width: int = Field(..., ge=0, le=8)
    xi: str = Field(..., pattern="^[0xyzXYZ]+$")
    eta: str = Field(..., pattern="^[0xyzXYZ]+$")
    shift: int = 0
    signs: Tuple[int, int] = (1, 1)
    spacing: int = Field(default=1, ge=1)

    @field_validator("signs")
    @classmethod
    def validate_signs(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if any(x not in (1, -1) for x in v):
            raise ValueError("signs must be +1 or -1")
        return v


class WalkRule(_Stanza):
    kind: Literal["walk"]
    coin: ComplexMatrixJSON


class AutomatonFile(_Stanza):
    """Classical table; `elementary` or `preset` replace the explicit tables."""

    kind: Literal["automaton"] = "automaton"
    alphabet_size: Optional[int] = Field(default=None, ge=2)
    scheme: Optional[List[int]] = None
    outputs: Optional[List[int]] = None
    inverse_scheme: Optional[List[int]] = None
    inverse_outputs: Optional[List[int]] = None
    elementary: Optional[int] = Field(default=None, ge=0, le=255)
    preset: Optional[Literal["block_exchange", "shift", "cellwise"]] = None
    permutation: Optional[List[int]] = None
    max_radius: int = Field(default=3, ge=0, le=6)

    @model_validator(mode="after")
    def validate_source(self) -> "AutomatonFile":
        explicit = self.outputs is not None
        sources = sum([explicit, self.elementary is not None, self.preset is not None])
        if sources != 1:
            raise ValueError("give exactly one of outputs, elementary or preset")
        if explicit and (self.alphabet_size is None or self.scheme is None):
            raise ValueError("explicit tables need alphabet_size and scheme")
        if (self.inverse_scheme is None) != (self.inverse_outputs is None):
            raise ValueError("inverse_scheme and inverse_outputs go together")
        if self.preset == "cellwise" and not self.permutation:
            raise ValueError("the cellwise preset needs a permutation")
        return self


class QuantizedRule(_Stanza):
    kind: Literal["quantized"]
    automaton: AutomatonFile


class ComposedRule(_Stanza):
    """Rules applied in time order: the first entry acts first on states."""

    kind: Literal["compose"]
    steps: List["RuleStanza"] = Field(..., min_length=1)


class RegroupedRule(_Stanza):
    kind: Literal["regroup"]
    rule: "RuleStanza"
    k: int = Field(..., ge=1, le=4)


RuleStanza = Annotated[
    Union[
        ImagesRule,
        CellwiseRule,
        ShiftRule,
        PhaseGateRule,
        AbelianRule,
        CommutingRule,
        MargolusRule,
        CliffordRule,
        WalkRule,
        QuantizedRule,
        ComposedRule,
        RegroupedRule,
    ],
    Field(discriminator="kind"),
]

ComposedRule.model_rebuild()
RegroupedRule.model_rebuild()


class ObservableFile(_Stanza):
    sites: List[List[int]] = Field(..., min_length=1)
    matrix: ComplexMatrixJSON


class WalkFile(_Stanza):
    coin: ComplexMatrixJSON
    steps: int = Field(..., ge=0)
    length: int = Field(..., ge=5)
    start: int = 0
    amplitudes: Tuple[ComplexEntry, ComplexEntry] = (1.0, 0.0)
    allow_wrap: bool = False


Subcommand = Literal[
    "validate",
    "evolve",
    "unitary",
    "margolus",
    "invert",
    "classify",
    "clifford-search",
    "clifford-evolve",
    "quasiprob",
    "walk",
    "quantize",
]


class CommandInvocation(BaseModel):
    """One CLI call, validated before dispatch."""

    model_config = ConfigDict(extra="forbid")

    subcommand: Subcommand
    inputs: List[Path] = Field(default_factory=list)
    output: Optional[Path] = None
    rule_output: Optional[Path] = None
    torus: Optional[List[int]] = Field(default=None, min_length=1, max_length=3)
    steps: int = Field(default=1, ge=0, le=10_000)
    half_width: int = Field(default=1, ge=0, le=2)
    letter: Literal["x", "y", "z"] = "x"
    site: int = 0
    spacing: int = Field(default=1, ge=1, le=8)
    etas: Tuple[int, int] = (0, 0)
    seed: Optional[int] = Field(default=None, ge=0)
    dimension_cap: Optional[int] = Field(default=None, ge=1)

    @field_validator("torus")
    @classmethod
    def validate_torus(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is not None and any(p < 1 for p in v):
            raise ValueError("torus periods must be positive")
        return v

    @field_validator("etas")
    @classmethod
    def validate_etas(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if any(not 0 <= e < 4 for e in v):
            raise ValueError("Wigner indices run over 0..3")
        return v

    @model_validator(mode="after")
    def validate_inputs(self) -> "CommandInvocation":
        needs_input = self.subcommand not in ("clifford-search",)
        if needs_input and not self.inputs:
            raise ValueError(f"'{self.subcommand}' needs an input file")
        if self.subcommand == "evolve" and len(self.inputs) != 2:
            raise ValueError("'evolve' takes a rule file and an observable file")
        return self
