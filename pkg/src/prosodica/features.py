"""Binary feature bundles, unification, segments and macro expansion.

Feature bundles are partial assignments of {+, -} over a declared feature
inventory.  Unification is the conjunctive merge of two bundles; it fails
(returns None) when any feature is demanded with both values.  A segment
matches a specification when every demanded value is already present in
the segment's own bundle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

PLUS = "+"
MINUS = "-"


class FeatureError(ValueError):
    """A feature bundle refers to a feature missing from its inventory."""


@dataclass(frozen=True)
class FeatureInventory:
    """Ordered set of feature names valid for one grammar."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        seen = set()
        for name in self.names:
            if not name:
                raise FeatureError("feature names must be non-empty")
            if name in seen:
                raise FeatureError(f"duplicate feature name {name!r}")
            seen.add(name)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def check(self, names: Iterable[str]) -> None:
        for name in names:
            if name not in self.names:
                raise FeatureError(f"unknown feature {name!r}")


@dataclass(frozen=True)
class FeatureBundle:
    """Immutable partial map feature name -> '+' or '-'."""

    assignments: tuple[tuple[str, str], ...] = ()

    @classmethod
    def make(cls, mapping: Mapping[str, str] | Iterable[tuple[str, str]] = ()) -> "FeatureBundle":
        items = dict(mapping)
        for name, value in items.items():
            if value not in (PLUS, MINUS):
                raise FeatureError(f"feature {name!r} must be '+' or '-', got {value!r}")
        return cls(tuple(sorted(items.items())))

    def as_dict(self) -> dict[str, str]:
        return dict(self.assignments)

    def get(self, name: str) -> Optional[str]:
        for key, value in self.assignments:
            if key == name:
                return value
        return None

    def __bool__(self) -> bool:
        return bool(self.assignments)

    def __len__(self) -> int:
        return len(self.assignments)

    def __str__(self) -> str:
        if not self.assignments:
            return "[]"
        return "[" + ",".join(f"{v}{k}" for k, v in self.assignments) + "]"

    def validate(self, inventory: FeatureInventory) -> "FeatureBundle":
        inventory.check(name for name, _ in self.assignments)
        return self


EMPTY_BUNDLE = FeatureBundle()


def unify(a: FeatureBundle, b: FeatureBundle) -> Optional[FeatureBundle]:
    """Conjunctive merge of two bundles; None on any +/- clash.

    Commutative, associative and idempotent; failure is a value,
    not an exception.
    """
    merged = a.as_dict()
    for name, value in b.assignments:
        have = merged.get(name)
        if have is None:
            merged[name] = value
        elif have != value:
            return None
    return FeatureBundle.make(merged)


def subsumes(spec: FeatureBundle, features: FeatureBundle) -> bool:
    """True iff every assignment demanded by spec is present in features."""
    have = features.as_dict()
    return all(have.get(name) == value for name, value in spec.assignments)


@dataclass(frozen=True)
class Segment:
    """A terminal symbol with its feature bundle.

    The empty-string symbol is the zero-width segment inserted by the
    parser; it may share its features with an overt schwa.
    """

    symbol: str
    features: FeatureBundle = field(default=EMPTY_BUNDLE)

    @property
    def is_empty(self) -> bool:
        return self.symbol == ""

    def __str__(self) -> str:
        return self.symbol or '""'


def matches(segment: Segment, spec: FeatureBundle) -> bool:
    """Segment satisfies every value demanded by spec."""
    return subsumes(spec, segment.features)


# Macro settings recognised for the built-in SYLLABIC / MORAIC macros.
# "vowels" admits only [-cons] material, "sonorants" only [+son],
# "any" places no restriction.
_MACRO_SETTINGS = {
    "vowels": FeatureBundle.make({"cons": MINUS}),
    "vowels-only": FeatureBundle.make({"cons": MINUS}),
    "sonorants": FeatureBundle.make({"son": PLUS}),
    "any": EMPTY_BUNDLE,
    "all": EMPTY_BUNDLE,
}


class MacroError(ValueError):
    """Unknown macro name or macro setting at compile time."""


@dataclass(frozen=True)
class Macro:
    name: str
    expansion: FeatureBundle


def expand_macro(name: str, setting: str) -> FeatureBundle:
    """Expand SYLLABIC/MORAIC per the sonority-class parameter value."""
    bundle = _MACRO_SETTINGS.get(setting)
    if bundle is None:
        raise MacroError(
            f"unknown sonority-class setting {setting!r} for macro {name}; "
            f"expected one of {sorted(set(_MACRO_SETTINGS))}"
        )
    return bundle


# Engine-wide sonority scale. The mid ranks rely on the optional
# "nas" and "glide" features; packs that need coda sonority checks or
# class-keyed duration lookup declare them.
SONORITY_VOWEL = 4
SONORITY_GLIDE = 3
SONORITY_LIQUID = 2
SONORITY_NASAL = 1
SONORITY_OBSTRUENT = 0


def sonority_rank(segment: Segment) -> int:
    feats = segment.features
    if feats.get("cons") != PLUS:
        return SONORITY_VOWEL
    if feats.get("son") != PLUS:
        return SONORITY_OBSTRUENT
    if feats.get("nas") == PLUS:
        return SONORITY_NASAL
    if feats.get("glide") == PLUS:
        return SONORITY_GLIDE
    return SONORITY_LIQUID


def sonority_class(segment: Segment) -> str:
    return {
        SONORITY_VOWEL: "vowel",
        SONORITY_GLIDE: "glide",
        SONORITY_LIQUID: "liquid",
        SONORITY_NASAL: "nasal",
        SONORITY_OBSTRUENT: "obstruent",
    }[sonority_rank(segment)]


def is_voiced(segment: Segment) -> bool:
    """Voicing for table lookup; segments unmarked for voi count as voiced."""
    return segment.features.get("voi") != MINUS


class TokenizeError(ValueError):
    """Input symbol not found in the segment inventory."""


def tokenize(text: str, segments: Iterable[Segment]) -> list[str]:
    """Greedy longest-match tokenization against declared symbols.

    Dots separate chunks tokenized independently (so "d.h" never fuses
    into an aspirate digraph) and are dropped from the result.
    """
    symbols = sorted({s.symbol for s in segments if s.symbol}, key=len, reverse=True)
    out: list[str] = []
    for chunk in text.split("."):
        i = 0
        while i < len(chunk):
            for sym in symbols:
                if chunk.startswith(sym, i):
                    out.append(sym)
                    i += len(sym)
                    break
            else:
                raise TokenizeError(
                    f"cannot tokenize {chunk!r} at position {i} "
                    f"(matched {out!r} so far)"
                )
    return out
