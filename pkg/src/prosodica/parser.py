"""Chart parser over segment strings with zero-width empty categories.

The input of n symbols becomes a lattice with positions (i, e) for
i in 0..n and e in {0, 1}: e flips to 1 when the single permitted empty
segment at juncture i has been consumed.  Parsing is bottom-up over the
lattice, so each juncture (and each word edge) can host at most one
epenthetic segment and the chart stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .features import Segment, matches, sonority_rank, subsumes, tokenize, unify
from .grammar import Constraint, Grammar, Production, RhsItem
from .tree import (
    CODA_LABELS,
    NUCLEUS_LABELS,
    ONSET_LABELS,
    ROOT,
    STRONG,
    WEAK,
    ProsodicTree,
    dotted,
    onset_is_deficient,
    syllables,
    to_bracketed,
)


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    span: tuple[int, int]

    def __str__(self) -> str:
        return f"{self.kind} at span {self.span}"


@dataclass
class ParseResult:
    """All licensed parses of one word, plus a diagnostic when empty."""

    trees: list[ProsodicTree]
    diagnostic: Optional[str] = None

    def __iter__(self) -> Iterator[ProsodicTree]:
        return iter(self.trees)

    def __len__(self) -> int:
        return len(self.trees)

    def __bool__(self) -> bool:
        return bool(self.trees)


def _restamp(tree: ProsodicTree, strength: str) -> ProsodicTree:
    if tree.strength == strength:
        return tree
    return ProsodicTree(**{**tree.__dict__, "strength": strength})


def _item_admits(item: RhsItem, tree: ProsodicTree) -> bool:
    if item.label == "X":
        if not tree.is_leaf:
            return False
        if item.symbol is not None:
            return tree.segment.symbol == item.symbol
        return matches(tree.segment, item.spec)
    return tree.label == item.label and subsumes(item.spec, tree.features)


def _apply(prod: Production, children: tuple[ProsodicTree, ...]) -> Optional[ProsodicTree]:
    head = children[prod.head_index]
    feats = unify(head.features, prod.lhs_spec)
    if feats is None:
        return None
    if len(children) == 2:
        stamped = tuple(
            _restamp(c, STRONG if i == prod.head_index else WEAK)
            for i, c in enumerate(children)
        )
    else:
        stamped = (_restamp(children[0], STRONG),)
    span = (stamped[0].span[0], stamped[-1].span[1])
    return ProsodicTree(label=prod.lhs, strength=STRONG, features=feats,
                        children=stamped, span=span)


class _Chart:
    """Cells keyed by (start, end) lattice indices; values label -> trees."""

    def __init__(self, size: int):
        self.size = size
        self.cells: dict[tuple[int, int], dict[str, list[ProsodicTree]]] = {}
        self.keys: dict[tuple[int, int], set[str]] = {}

    def add(self, p: int, q: int, tree: ProsodicTree) -> bool:
        cell = self.cells.setdefault((p, q), {})
        seen = self.keys.setdefault((p, q), set())
        key = to_bracketed(tree)
        if key in seen:
            return False
        seen.add(key)
        cell.setdefault(tree.label, []).append(tree)
        return True

    def trees(self, p: int, q: int) -> dict[str, list[ProsodicTree]]:
        return self.cells.get((p, q), {})


def _build_chart(symbols: list[str], grammar: Grammar) -> _Chart:
    n = len(symbols)
    size = 2 * n + 2
    chart = _Chart(size)
    empty = grammar.empty_segment

    for i, sym in enumerate(symbols):
        seg = grammar.segment(sym)
        leaf = ProsodicTree(label="X", strength=STRONG, features=seg.features,
                            segment=seg, span=(i, i + 1))
        for e in (0, 1):
            chart.add(2 * i + e, 2 * (i + 1), leaf)
    if empty is not None:
        for i in range(n + 1):
            leaf = ProsodicTree(label="X", strength=STRONG, features=empty.features,
                                segment=empty, span=(i, i))
            chart.add(2 * i, 2 * i + 1, leaf)

    unary = [p for p in grammar.productions if len(p.rhs) == 1]
    binary = [p for p in grammar.productions if len(p.rhs) == 2]
    label_count = len({p.lhs for p in grammar.productions}) + 1

    for width in range(1, size):
        for p in range(0, size - width):
            q = p + width
            # binary combinations
            for r in range(p + 1, q):
                left_cell = chart.trees(p, r)
                right_cell = chart.trees(r, q)
                if not left_cell or not right_cell:
                    continue
                for prod in binary:
                    lefts = _candidates(left_cell, prod.rhs[0])
                    if not lefts:
                        continue
                    rights = _candidates(right_cell, prod.rhs[1])
                    for lt in lefts:
                        for rt in rights:
                            if not (_item_admits(prod.rhs[0], lt)
                                    and _item_admits(prod.rhs[1], rt)):
                                continue
                            node = _apply(prod, (lt, rt))
                            if node is not None:
                                chart.add(p, q, node)
            # unary closure
            frontier = [t for trees in chart.trees(p, q).values() for t in trees]
            rounds = 0
            while frontier and rounds <= label_count:
                added: list[ProsodicTree] = []
                for prod in unary:
                    if prod.rhs[0].label == "X":
                        pool = frontier
                    else:
                        pool = [t for t in frontier if t.label == prod.rhs[0].label]
                    for t in pool:
                        if not _item_admits(prod.rhs[0], t):
                            continue
                        node = _apply(prod, (t,))
                        if node is not None and chart.add(p, q, node):
                            added.append(node)
                frontier = added
                rounds += 1
            if frontier:
                raise ParseError("unary production cycle detected")
    return chart


def _candidates(cell: dict[str, list[ProsodicTree]], item: RhsItem) -> list[ProsodicTree]:
    return cell.get(item.label, []) if item.label != "X" else cell.get("X", [])


def _render_epenthesis(tree: ProsodicTree, grammar: Grammar) -> ProsodicTree:
    """Show inserted zero-width nuclei with the schwa symbol when one exists.

    The schwa and the empty string share features, so in nuclear position
    the epenthetic segment surfaces as the overt schwa of the inventory.
    """
    empty = grammar.empty_segment
    if empty is None:
        return tree
    schwa = None
    for seg in grammar.segments:
        if seg.symbol and not seg.is_empty and seg.features == empty.features:
            schwa = seg
            break
    if schwa is None:
        return tree

    def rewrite(node: ProsodicTree, nuclear: bool) -> ProsodicTree:
        if node.is_leaf:
            if node.is_empty_leaf and node.segment.is_empty and nuclear:
                return ProsodicTree(**{**node.__dict__, "segment": schwa})
            return node
        children = tuple(
            rewrite(c, nuclear or node.label in NUCLEUS_LABELS) for c in node.children
        )
        if children == node.children:
            return node
        return ProsodicTree(**{**node.__dict__, "children": children})

    return rewrite(tree, tree.label in NUCLEUS_LABELS)


def parse_all(word: str | Iterable[str], grammar: Grammar) -> ParseResult:
    """Every start-symbol tree over the word, hard constraints applied.

    The yield of each tree is the input interleaved with zero or more
    epenthetic segments (at most one per juncture).  Unknown symbols raise;
    an unparseable word yields an empty result carrying a diagnostic for
    the longest analyzable prefix.
    """
    if isinstance(word, str):
        symbols = tokenize(word, grammar.segments)
    else:
        symbols = list(word)
        for sym in symbols:
            if not grammar.has_segment(sym):
                raise ParseError(f"unknown symbol {sym!r}")
    if not symbols:
        raise ParseError("empty input")

    chart = _build_chart(symbols, grammar)
    n = len(symbols)
    roots: list[ProsodicTree] = []
    for end in (2 * n, 2 * n + 1):
        for tree in chart.trees(0, end).get(grammar.start_symbol, []):
            ok, _ = check_constraints(tree, grammar)
            if ok:
                roots.append(_render_epenthesis(_restamp(tree, ROOT), grammar))

    seen: set[str] = set()
    unique: list[ProsodicTree] = []
    for tree in sorted(roots, key=to_bracketed):
        key = to_bracketed(tree)
        if key not in seen:
            seen.add(key)
            unique.append(tree)

    if unique:
        return ParseResult(unique)
    covered = 0
    for (p, q), cell in chart.cells.items():
        if p <= 1 and cell:
            covered = max(covered, q // 2)
    prefix = "".join(symbols[:covered])
    return ParseResult([], f"no parse; longest analyzable prefix "
                           f"{prefix!r} ({covered} of {n} symbols)")


# ---------------------------------------------------------------------------
# Constraint checking.
# ---------------------------------------------------------------------------

def _onset_all_empty(syl: ProsodicTree) -> bool:
    return onset_is_deficient(syl)


def _coda_filled(syl: ProsodicTree) -> bool:
    for coda in syl.find(CODA_LABELS):
        if any(not leaf.is_empty_leaf for leaf in coda.leaves()):
            return True
    return False


def check_constraints(tree: ProsodicTree, grammar: Grammar) -> tuple[bool, list[Violation]]:
    """Evaluate the grammar's hard constraints on one candidate tree."""
    violations: list[Violation] = []
    sylls = syllables(tree)
    for constraint in grammar.hard_constraints():
        violations.extend(_check_one(constraint, tree, sylls))
    return (not violations, violations)


def _check_one(con: Constraint, tree: ProsodicTree,
               sylls: list[ProsodicTree]) -> list[Violation]:
    out: list[Violation] = []
    if con.kind == "forbid-empty-syllable":
        for syl in sylls:
            if all(leaf.is_empty_leaf for leaf in syl.leaves()):
                out.append(Violation(con.kind, syl.span))
    elif con.kind == "onset-nonempty-after-filled-coda":
        for prev, cur in zip(sylls, sylls[1:]):
            if _coda_filled(prev) and _onset_all_empty(cur):
                out.append(Violation(con.kind, cur.span))
    elif con.kind == "coda-sonority":
        for node in tree.walk():
            if node.label in CODA_LABELS and len(node.children) == 2:
                leaves = [l for l in node.leaves() if not l.is_empty_leaf]
                for a, b in zip(leaves, leaves[1:]):
                    if sonority_rank(a.segment) < sonority_rank(b.segment):
                        out.append(Violation(con.kind, node.span))
                        break
    elif con.kind == "custom-adjacent-pair":
        left_spec = con.payload[0] if con.payload else None
        right_spec = con.payload[1] if len(con.payload) > 1 else None
        for prev, cur in zip(sylls, sylls[1:]):
            last = list(prev.leaves())[-1]
            first = list(cur.leaves())[0]
            if ((left_spec is None or matches(last.segment, left_spec))
                    and (right_spec is None or matches(first.segment, right_spec))):
                out.append(Violation(con.kind, cur.span))
    return out


# ---------------------------------------------------------------------------
# Parse selection.
# ---------------------------------------------------------------------------

def _epenthetic_leaves(tree: ProsodicTree) -> list[ProsodicTree]:
    return [leaf for leaf in tree.leaves() if leaf.is_empty_leaf]


def _adjunct_count(tree: ProsodicTree) -> int:
    count = 0
    for node in tree.walk():
        if len(node.children) == 2:
            a, b = node.children
            if b.is_leaf and a.label == node.label:
                count += 1
            elif a.is_leaf and b.label == node.label:
                count += 1
    return count


def selection_key(tree: ProsodicTree) -> tuple:
    """Deterministic preference order for competing parses.

    In order: maximal onsets (fewest onsetless or empty-onset syllables),
    minimal epenthesis, minimal non-moraic adjunction, leftmost placement
    of the epenthetic material, and a final total order on serialization.
    """
    sylls = syllables(tree)
    deficiency = sum(1 for s in sylls if onset_is_deficient(s))
    empties = _epenthetic_leaves(tree)
    positions = tuple(leaf.span[0] for leaf in empties)
    return (deficiency, len(empties), _adjunct_count(tree), positions,
            to_bracketed(tree))


def select_parse(candidates: Iterable[ProsodicTree], grammar: Grammar) -> ProsodicTree:
    """Pick the canonical parse from a non-empty candidate set."""
    cands = list(candidates)
    if not cands:
        raise ParseError("select_parse requires at least one candidate")
    return min(cands, key=selection_key)


def parse_word(word: str | Iterable[str], grammar: Grammar) -> ProsodicTree:
    """Parse and select in one step; raises ParseError when unparseable."""
    result = parse_all(word, grammar)
    if not result:
        raise ParseError(result.diagnostic or "no parse")
    return select_parse(result.trees, grammar)


__all__ = [
    "ParseError",
    "ParseResult",
    "Violation",
    "check_constraints",
    "dotted",
    "parse_all",
    "parse_word",
    "select_parse",
    "selection_key",
]
