"""Headed prosodic trees and their serializations.

A ProsodicTree node is either a terminal (label "X" dominating exactly one
segment) or an internal node with one or two children, exactly one of which
is strong when the node branches.  Leaves carry spans over the input string;
epenthetic segments occupy zero-width spans.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .features import EMPTY_BUNDLE, FeatureBundle, Segment

STRONG = "strong"
WEAK = "weak"
ROOT = "root"

TERMINAL_LABEL = "X"

# Label families the engine recognises when checking constraints and
# computing metrics; packs follow this naming.
SYLLABLE_LABELS = frozenset({"Syl"})
ONSET_LABELS = frozenset({"Onset", "Ons"})
NUCLEUS_LABELS = frozenset({"Nucleus", "Mora"})
CODA_LABELS = frozenset({"Coda"})
MORA_LABEL = "Mora"
WORD_LABELS = frozenset({"Word"})


@dataclass(frozen=True)
class ProsodicTree:
    label: str
    strength: str = ROOT
    features: FeatureBundle = field(default=EMPTY_BUNDLE)
    children: tuple["ProsodicTree", ...] = ()
    segment: Optional[Segment] = None
    span: tuple[int, int] = (0, 0)

    @property
    def is_leaf(self) -> bool:
        return self.segment is not None

    @property
    def is_empty_leaf(self) -> bool:
        return self.is_leaf and self.span[0] == self.span[1]

    def leaves(self) -> Iterator["ProsodicTree"]:
        if self.is_leaf:
            yield self
        for child in self.children:
            yield from child.leaves()

    def walk(self) -> Iterator["ProsodicTree"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def strong_child(self) -> Optional["ProsodicTree"]:
        for child in self.children:
            if child.strength == STRONG:
                return child
        return None

    def weak_child(self) -> Optional["ProsodicTree"]:
        for child in self.children:
            if child.strength == WEAK:
                return child
        return None

    def find(self, labels: frozenset[str] | set[str]) -> list["ProsodicTree"]:
        return [n for n in self.walk() if n.label in labels]

    def yield_symbols(self, include_empty: bool = False) -> list[str]:
        return [
            leaf.segment.symbol
            for leaf in self.leaves()
            if include_empty or not leaf.is_empty_leaf
        ]

    def surface(self) -> str:
        """Concatenated overt symbols of the leaves."""
        return "".join(self.yield_symbols())

    def transcription(self) -> str:
        """Symbols including epenthetic material (zero-width leaves)."""
        return "".join(leaf.segment.symbol for leaf in self.leaves())


def syllables(tree: ProsodicTree) -> list[ProsodicTree]:
    """Syllable nodes in yield order."""
    return tree.find(SYLLABLE_LABELS)


def dotted(tree: ProsodicTree) -> str:
    """Dot-separated syllable transcription, e.g. ``t@x.z@nt``."""
    sylls = syllables(tree)
    if not sylls:
        return tree.transcription()
    return ".".join(s.transcription() for s in sylls)


def onset_is_deficient(syl: ProsodicTree) -> bool:
    """Syllable lacks an onset node or its onset is entirely empty."""
    onsets = syl.find(ONSET_LABELS)
    if not onsets:
        return True
    return all(leaf.is_empty_leaf for leaf in onsets[0].leaves())


# ---------------------------------------------------------------------------
# Bracketed form:  Syl(Onset(X:t) / Rime(Nucleus(X:@) \ Coda(X:x)))
# '/' marks the right child strong, '\' the left child strong.
# ---------------------------------------------------------------------------

def to_bracketed(tree: ProsodicTree) -> str:
    if tree.is_leaf:
        return f"{tree.label}:{tree.segment.symbol}"
    if len(tree.children) == 1:
        return f"{tree.label}({to_bracketed(tree.children[0])})"
    left, right = tree.children
    sep = " / " if right.strength == STRONG else " \\ "
    return f"{tree.label}({to_bracketed(left)}{sep}{to_bracketed(right)})"


class TreeSyntaxError(ValueError):
    pass


_TOKEN_RE = re.compile(r"\s*([()/\\]|[^\s()/\\]+)")


def _tokenize_bracketed(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            break
        tokens.append(m.group(1))
        pos = m.end()
    if text[pos:].strip():
        raise TreeSyntaxError(f"trailing junk in tree text: {text[pos:]!r}")
    return tokens


def from_bracketed(text: str, segment_lookup) -> ProsodicTree:
    """Parse the bracketed form back into a tree.

    ``segment_lookup(symbol)`` resolves leaf symbols to Segment objects
    (normally ``grammar.segment``).  Spans are recomputed from the yield:
    a leaf is zero-width iff its segment is the empty string or shares the
    empty segment's features (the schwa/empty pair).
    """
    tokens = _tokenize_bracketed(text)
    pos = 0

    def parse_node(strength: str) -> ProsodicTree:
        nonlocal pos
        if pos >= len(tokens):
            raise TreeSyntaxError("unexpected end of tree text")
        head = tokens[pos]
        pos += 1
        if ":" in head:
            label, _, symbol = head.partition(":")
            seg = segment_lookup(symbol)
            return ProsodicTree(label=label, strength=strength, features=seg.features,
                                segment=seg)
        if pos < len(tokens) and tokens[pos] == "(":
            pos += 1
            first = parse_node(STRONG)
            if pos < len(tokens) and tokens[pos] in ("/", "\\"):
                sep = tokens[pos]
                pos += 1
                if sep == "/":
                    left = ProsodicTree(**{**first.__dict__, "strength": WEAK})
                    right = parse_node(STRONG)
                else:
                    left = first
                    right = parse_node(WEAK)
                children = (left, right)
            else:
                children = (first,)
            if pos >= len(tokens) or tokens[pos] != ")":
                raise TreeSyntaxError("expected ')'")
            pos += 1
            head_child = children[0] if len(children) == 1 or children[0].strength == STRONG else children[1]
            return ProsodicTree(label=head, strength=strength,
                                features=head_child.features, children=children)
        raise TreeSyntaxError(f"expected '(' after label {head!r}")

    def relabel(node: ProsodicTree, strength: str) -> ProsodicTree:
        return ProsodicTree(**{**node.__dict__, "strength": strength})

    root = relabel(parse_node(ROOT), ROOT)
    if pos != len(tokens):
        raise TreeSyntaxError("trailing tokens in tree text")
    return _respan(root, segment_lookup)


def _respan(tree: ProsodicTree, segment_lookup) -> ProsodicTree:
    try:
        empty_feats = segment_lookup("").features
    except Exception:
        empty_feats = None

    def width(seg: Segment) -> int:
        if seg.symbol == "":
            return 0
        if empty_feats is not None and seg.features == empty_feats:
            return 0
        return 1

    def assign(node: ProsodicTree, start: int) -> tuple[ProsodicTree, int]:
        if node.is_leaf:
            end = start + width(node.segment)
            return ProsodicTree(**{**node.__dict__, "span": (start, end)}), end
        new_children = []
        pos = start
        for child in node.children:
            new_child, pos = assign(child, pos)
            new_children.append(new_child)
        return ProsodicTree(**{**node.__dict__, "children": tuple(new_children),
                               "span": (start, pos)}), pos

    spanned, _ = assign(tree, 0)
    return spanned


# ---------------------------------------------------------------------------
# Structured JSON form.
# ---------------------------------------------------------------------------

def to_json_dict(tree: ProsodicTree) -> dict:
    out = {
        "label": tree.label,
        "strength": tree.strength,
        "features": tree.features.as_dict(),
        "span": list(tree.span),
    }
    if tree.is_leaf:
        out["symbol"] = tree.segment.symbol
    else:
        out["children"] = [to_json_dict(c) for c in tree.children]
    return out


def to_json(tree: ProsodicTree) -> str:
    return json.dumps(to_json_dict(tree), sort_keys=True)


def from_json_dict(data: dict, segment_lookup) -> ProsodicTree:
    features = FeatureBundle.make(data.get("features", {}))
    span = tuple(data.get("span", (0, 0)))
    if "symbol" in data:
        seg = segment_lookup(data["symbol"])
        return ProsodicTree(label=data["label"], strength=data["strength"],
                            features=features, segment=seg, span=span)
    children = tuple(from_json_dict(c, segment_lookup) for c in data.get("children", []))
    return ProsodicTree(label=data["label"], strength=data["strength"],
                        features=features, children=children, span=span)


def from_json(text: str, segment_lookup) -> ProsodicTree:
    return from_json_dict(json.loads(text), segment_lookup)
