"""Compiled grammar objects: productions, filters, constraints, parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .features import EMPTY_BUNDLE, FeatureBundle, FeatureInventory, Segment, matches

# Constraint kinds understood by the parser.  maximal-onset-preference is
# soft: it steers parse selection instead of filtering candidates.
HARD_CONSTRAINTS = (
    "forbid-empty-syllable",
    "onset-nonempty-after-filled-coda",
    "coda-sonority",
    "custom-adjacent-pair",
)
SOFT_CONSTRAINTS = ("maximal-onset-preference",)
CONSTRAINT_KINDS = HARD_CONSTRAINTS + SOFT_CONSTRAINTS

# Parameters with engine-level meaning; packs may declare further ones.
KNOWN_PARAMETERS = (
    "VoicedStops",
    "AspiratedStops",
    "SuperHeavySyllable",
    "SyllabicClass",
    "MoraicClass",
    "CodaAdjunction",
)


@dataclass(frozen=True)
class RhsItem:
    """One reference on the right-hand side of a production.

    Either a non-terminal label (with an optional feature demand) or the
    terminal pre-terminal ``X`` with a feature spec or an exact symbol.
    """

    label: str
    spec: FeatureBundle = field(default=EMPTY_BUNDLE)
    symbol: Optional[str] = None

    def __str__(self) -> str:
        if self.symbol is not None:
            return f'{self.label}:"{self.symbol}"'
        if self.spec:
            return f"{self.label}:{self.spec}"
        return self.label


@dataclass(frozen=True)
class Production:
    """lhs --> rhs with a head mark; arity is at most two.

    ``(A / B)`` makes the right child strong, ``(A \\ B)`` the left one.
    For unary productions the sole child is the head.
    """

    lhs: str
    lhs_spec: FeatureBundle
    rhs: tuple[RhsItem, ...]
    head_index: int = 0

    def __post_init__(self) -> None:
        if not 1 <= len(self.rhs) <= 2:
            raise ValueError("production arity must be 1 or 2")
        if not 0 <= self.head_index < len(self.rhs):
            raise ValueError("head index out of range")

    @property
    def is_terminal(self) -> bool:
        return len(self.rhs) == 1 and self.rhs[0].label == "X"

    def __str__(self) -> str:
        lhs = self.lhs + (f":{self.lhs_spec}" if self.lhs_spec else "")
        if len(self.rhs) == 1:
            return f"{lhs} --> {self.rhs[0]}"
        sep = " / " if self.head_index == 1 else " \\ "
        return f"{lhs} --> ({self.rhs[0]}{sep}{self.rhs[1]})"


@dataclass(frozen=True)
class Filter:
    """Feature spec no inventory segment may satisfy (``*[+voi,+spread]``)."""

    spec: FeatureBundle

    def __post_init__(self) -> None:
        if not self.spec:
            raise ValueError("filter spec must be non-empty")

    def __str__(self) -> str:
        return f"*{self.spec}"


@dataclass(frozen=True)
class Constraint:
    kind: str
    payload: tuple[FeatureBundle, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in CONSTRAINT_KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")

    @property
    def is_soft(self) -> bool:
        return self.kind in SOFT_CONSTRAINTS

    def __str__(self) -> str:
        if self.payload:
            return f"{self.kind} " + " ".join(str(p) for p in self.payload)
        return self.kind


@dataclass(frozen=True)
class Grammar:
    """Immutable compiled rule set; safe to share across parses."""

    inventory: FeatureInventory
    segments: tuple[Segment, ...]
    productions: tuple[Production, ...]
    filters: tuple[Filter, ...]
    constraints: tuple[Constraint, ...]
    params: tuple[tuple[str, str], ...]
    start_symbol: str

    def param(self, name: str, default: str = "") -> str:
        for key, value in self.params:
            if key == name:
                return value
        return default

    @property
    def param_dict(self) -> dict[str, str]:
        return dict(self.params)

    def segment(self, symbol: str) -> Segment:
        for seg in self.segments:
            if seg.symbol == symbol:
                return seg
        raise KeyError(f"no segment {symbol!r} in inventory")

    def has_segment(self, symbol: str) -> bool:
        return any(seg.symbol == symbol for seg in self.segments)

    @property
    def empty_segment(self) -> Optional[Segment]:
        for seg in self.segments:
            if seg.is_empty:
                return seg
        return None

    def productions_for(self, label: str) -> list[Production]:
        return [p for p in self.productions if p.lhs == label]

    def hard_constraints(self) -> list[Constraint]:
        return [c for c in self.constraints if not c.is_soft]

    def matching_segments(self, item: RhsItem) -> list[Segment]:
        if item.symbol is not None:
            return [s for s in self.segments if s.symbol == item.symbol]
        return [s for s in self.segments if matches(s, item.spec)]

    def describe(self) -> str:
        """Human-readable dump of the resolved grammar (post-macro)."""
        lines = [f"start {self.start_symbol}", ""]
        lines.append("features " + " ".join(self.inventory.names))
        lines.append("")
        for key, value in self.params:
            lines.append(f"param {key} = {value}")
        if self.params:
            lines.append("")
        for seg in self.segments:
            lines.append(f"segment {seg} {seg.features}")
        lines.append("")
        for prod in self.productions:
            lines.append(str(prod))
        if self.filters:
            lines.append("")
            for flt in self.filters:
                lines.append(str(flt))
        if self.constraints:
            lines.append("")
            for con in self.constraints:
                lines.append(f"constraint {con}")
        return "\n".join(lines) + "\n"
