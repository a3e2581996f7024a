"""Temporal constraint solver: durations, non-overlap, slot filling.

Within a constituent the total duration is assigned to the head (strong)
child; the weak sister is overlaid on it, ending a table-specified
non-overlap before the head ends.  A leaf with no table duration fills
the remainder of its allotted span.  Times are integer microseconds
internally and milliseconds at the interfaces, so conservation checks
stay exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from .features import Segment, is_voiced, sonority_class
from .tree import ProsodicTree, WORD_LABELS, MORA_LABEL

US_PER_MS = 1000


class TimingError(ValueError):
    pass


def _ms(us: int) -> float | int:
    return us // US_PER_MS if us % US_PER_MS == 0 else us / US_PER_MS


def _segment_keys(seg: Segment) -> list[str]:
    cls = sonority_class(seg)
    keys = [seg.symbol if seg.symbol else '""']
    if cls == "obstruent":
        keys.append(("voiced-" if is_voiced(seg) else "voiceless-") + cls)
    keys.append(cls)
    keys.append("any")
    return keys


def _head_leaf(node: ProsodicTree) -> ProsodicTree:
    while not node.is_leaf:
        node = node.strong_child() or node.children[0]
    return node


def _first_leaf(node: ProsodicTree) -> ProsodicTree:
    while not node.is_leaf:
        node = node.children[0]
    return node


def _voicing(node: ProsodicTree) -> str:
    return "voiced" if is_voiced(_first_leaf(node).segment) else "voiceless"


@dataclass(frozen=True)
class DurationTable:
    """(structural context, segment key) -> duration.

    Lookup falls back from symbol-specific to class-level entries, then to
    the ``any`` wildcard, within each context tried in order.
    """

    entries: tuple[tuple[str, str, int], ...]

    def __post_init__(self) -> None:
        for ctx, key, us in self.entries:
            if us <= 0:
                raise TimingError(f"non-positive duration for {ctx} {key}")

    @classmethod
    def parse(cls, text: str, filename: str = "<table>") -> "DurationTable":
        entries = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise TimingError(f"{filename}:{number}: expected "
                                  f"'context key duration-ms', got {raw!r}")
            try:
                ms = int(parts[2])
            except ValueError:
                raise TimingError(f"{filename}:{number}: bad duration {parts[2]!r}")
            entries.append((parts[0], parts[1], ms * US_PER_MS))
        return cls(tuple(entries))

    @classmethod
    def load(cls, path: str | Path) -> "DurationTable":
        path = Path(path)
        return cls.parse(path.read_text(encoding="utf-8"), str(path))

    def lookup(self, contexts: list[str], keys: list[str]) -> Optional[int]:
        table = {(c, k): us for c, k, us in self.entries}
        for ctx in contexts:
            for key in keys:
                hit = table.get((ctx, key))
                if hit is not None:
                    return hit
        return None


@dataclass(frozen=True)
class NonOverlapTable:
    """(weak class, strong sister class) -> non-overlap; plus syllable
    junction overlaps keyed by the later onset."""

    entries: tuple[tuple[str, str, int], ...]

    @classmethod
    def parse(cls, text: str, filename: str = "<table>") -> "NonOverlapTable":
        entries = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise TimingError(f"{filename}:{number}: expected "
                                  f"'weak strong overlap-ms', got {raw!r}")
            try:
                ms = int(parts[2])
            except ValueError:
                raise TimingError(f"{filename}:{number}: bad value {parts[2]!r}")
            if ms < 0:
                raise TimingError(f"{filename}:{number}: negative overlap")
            entries.append((parts[0], parts[1], ms * US_PER_MS))
        return cls(tuple(entries))

    @classmethod
    def load(cls, path: str | Path) -> "NonOverlapTable":
        path = Path(path)
        return cls.parse(path.read_text(encoding="utf-8"), str(path))

    def non_overlap(self, weak: ProsodicTree, strong: ProsodicTree) -> int:
        wkeys = _segment_keys(_head_leaf(weak).segment)
        skeys = _segment_keys(_head_leaf(strong).segment)
        table = {(w, s): us for w, s, us in self.entries if w != "junction"}
        for wk in wkeys:
            for sk in skeys:
                hit = table.get((wk, sk))
                if hit is not None:
                    return hit
        return 0

    def junction_overlap(self, next_onset_head: Segment) -> int:
        table = {k: us for w, k, us in self.entries if w == "junction"}
        for key in _segment_keys(next_onset_head):
            hit = table.get(key)
            if hit is not None:
                return hit
        return 0


EMPTY_OVERLAPS = NonOverlapTable(())


@dataclass
class TimedNode:
    """A ProsodicTree node with utterance times attached (microseconds)."""

    node: ProsodicTree
    start: int
    end: int
    children: tuple["TimedNode", ...] = ()

    @property
    def label(self) -> str:
        return self.node.label

    @property
    def segment(self) -> Optional[Segment]:
        return self.node.segment

    @property
    def duration(self) -> int:
        return self.end - self.start

    @property
    def start_ms(self) -> float | int:
        return _ms(self.start)

    @property
    def end_ms(self) -> float | int:
        return _ms(self.end)

    @property
    def duration_ms(self) -> float | int:
        return _ms(self.duration)

    def walk(self) -> Iterator["TimedNode"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def leaves(self) -> Iterator["TimedNode"]:
        if self.node.is_leaf:
            yield self
        for child in self.children:
            yield from child.leaves()

    def find_yield(self, surface: str) -> Optional["TimedNode"]:
        """First node (pre-order) whose overt yield equals ``surface``."""
        for timed in self.walk():
            if timed.node.surface() == surface:
                return timed
        return None

    def shifted(self, delta: int) -> "TimedNode":
        return TimedNode(self.node, self.start + delta, self.end + delta,
                         tuple(c.shifted(delta) for c in self.children))


class _Solver:
    def __init__(self, root: ProsodicTree, durations: DurationTable,
                 overlaps: NonOverlapTable):
        self.durations = durations
        self.overlaps = overlaps
        self.parents: dict[int, tuple[ProsodicTree, int]] = {}
        for node in root.walk():
            for i, child in enumerate(node.children):
                self.parents[id(child)] = (node, i)

    # -- table contexts ----------------------------------------------------

    def _positional_contexts(self, node: ProsodicTree) -> list[str]:
        cur = node
        while True:
            info = self.parents.get(id(cur))
            if info is None:
                return []
            parent, _ = info
            if len(parent.children) == 2:
                break
            cur = parent
        label = parent.label.lower()
        if cur.strength == "weak":
            return [f"{label}-weak"]
        weak = parent.weak_child()
        contexts = []
        if weak is not None and parent.children[0] is weak:
            contexts.append(f"{label}-head:after-{_voicing(weak)}")
        contexts.append(f"{label}-head")
        return contexts

    def _contexts(self, node: ProsodicTree) -> list[str]:
        contexts: list[str] = []
        label = node.label.lower()
        if len(node.children) == 2:
            shape = "binary" if all(c.is_leaf for c in node.children) else "complex"
            contexts.append(f"{label}-total:{shape}:first-{_voicing(node)}")
            contexts.append(f"{label}-total")
        elif len(node.children) == 1:
            contexts.append(f"{label}:simple")
        contexts.extend(self._positional_contexts(node))
        return contexts

    def table_duration(self, node: ProsodicTree) -> Optional[int]:
        contexts = self._contexts(node)
        if not contexts:
            return None
        return self.durations.lookup(contexts, _segment_keys(_head_leaf(node).segment))

    # -- duration derivation ------------------------------------------------

    def derivable(self, node: ProsodicTree) -> Optional[int]:
        hit = self.table_duration(node)
        if hit is not None:
            return hit
        if node.is_leaf:
            return None
        if len(node.children) == 1:
            return self.derivable(node.children[0])
        weak, strong = node.weak_child(), node.strong_child()
        if node.children[0] is weak:
            inner = self.derivable(weak)
            if inner is None:
                return None
            return inner + self.overlaps.non_overlap(weak, strong)
        return self.derivable(strong)

    # -- span assignment ----------------------------------------------------

    def assign(self, node: ProsodicTree, start: int, end: int) -> TimedNode:
        if node.label in WORD_LABELS:
            return self._assign_word(node, start)
        if node.is_leaf:
            return TimedNode(node, start, end)
        if len(node.children) == 1:
            return TimedNode(node, start, end,
                             (self.assign(node.children[0], start, end),))
        weak, strong = node.weak_child(), node.strong_child()
        total = end - start
        non_overlap = self.overlaps.non_overlap(weak, strong)
        d_weak = self.derivable(weak)
        d_strong = self.derivable(strong)
        if d_strong is None:
            d_strong = total
        if d_strong > total:
            raise TimingError(
                f"over-constrained: head duration {_ms(d_strong)}ms exceeds "
                f"constituent {node.label} span {_ms(total)}ms")
        weak_first = node.children[0] is weak
        if d_weak is None:
            d_weak = total - non_overlap
        elif weak_first and d_weak + non_overlap != total:
            raise TimingError(
                f"over-constrained: {node.label} duration {_ms(total)}ms, but "
                f"weak child {_ms(d_weak)}ms + non-overlap {_ms(non_overlap)}ms "
                f"= {_ms(d_weak + non_overlap)}ms")
        if d_weak < 0:
            raise TimingError(
                f"over-constrained: negative remainder for weak child of "
                f"{node.label} (span {_ms(total)}ms, non-overlap "
                f"{_ms(non_overlap)}ms)")
        if weak_first:
            timed_weak = self.assign(weak, start, start + d_weak)
            timed_strong = self.assign(strong, end - d_strong, end)
            children = (timed_weak, timed_strong)
        else:
            timed_strong = self.assign(strong, end - d_strong, end)
            w_end = end - non_overlap
            if w_end - d_weak < start:
                raise TimingError(
                    f"over-constrained: weak child of {node.label} starts "
                    "before its constituent")
            timed_weak = self.assign(weak, w_end - d_weak, w_end)
            children = (timed_strong, timed_weak)
        return TimedNode(node, start, end, children)

    def _assign_word(self, node: ProsodicTree, start: int) -> TimedNode:
        sylls = self._spine(node)
        timed: list[TimedNode] = []
        cursor = start
        for i, syl in enumerate(sylls):
            total = self.derivable(syl)
            if total is None:
                raise TimingError(
                    f"no duration derivable for syllable {syl.surface()!r}")
            solved = self.assign(syl, 0, total)
            if i == 0:
                solved = solved.shifted(cursor)
            else:
                solved = cross_syllable_overlay(timed[-1], solved, self.overlaps)
            timed.append(solved)
            cursor = solved.end
        return _rewrap_word(node, timed, start)

    def _spine(self, node: ProsodicTree) -> list[ProsodicTree]:
        if len(node.children) == 1:
            child = node.children[0]
            return self._spine(child) if child.label in WORD_LABELS else [child]
        first, rest = node.children
        out = [first]
        if rest.label in WORD_LABELS:
            out.extend(self._spine(rest))
        else:
            out.append(rest)
        return out


def _rewrap_word(node: ProsodicTree, timed_sylls: list[TimedNode], start: int) -> TimedNode:
    """Rebuild the word spine around already-solved syllables."""

    def wrap(n: ProsodicTree, sylls: list[TimedNode]) -> tuple[TimedNode, list[TimedNode]]:
        if n.label not in WORD_LABELS:
            return sylls[0], sylls[1:]
        if len(n.children) == 1:
            inner, rest = wrap(n.children[0], sylls)
            return TimedNode(n, inner.start, inner.end, (inner,)), rest
        first, rest_sylls = wrap(n.children[0], sylls)
        second, rest_sylls = wrap(n.children[1], rest_sylls)
        return TimedNode(n, min(first.start, second.start),
                         max(first.end, second.end), (first, second)), rest_sylls

    wrapped, leftover = wrap(node, timed_sylls)
    if leftover:
        raise TimingError("word spine mismatch while rebuilding timed tree")
    if wrapped.start != start:
        wrapped = wrapped.shifted(start - wrapped.start)
    return wrapped


def solve(tree: ProsodicTree, durations: DurationTable,
          overlaps: NonOverlapTable = EMPTY_OVERLAPS, *, start_ms: int = 0) -> TimedNode:
    """Assign start/end times to every node of the tree.

    Raises TimingError when no duration is derivable along a spine or a
    slot-filling remainder turns negative.
    """
    solver = _Solver(tree, durations, overlaps)
    start = start_ms * US_PER_MS
    if tree.label in WORD_LABELS:
        return solver._assign_word(tree, start)
    total = solver.derivable(tree)
    if total is None:
        raise TimingError(
            f"no duration derivable for {tree.label} over {tree.surface()!r}")
    return solver.assign(tree, start, start + total)


def cross_syllable_overlay(prev: TimedNode, nxt: TimedNode,
                           overlaps: NonOverlapTable) -> TimedNode:
    """Shift the next syllable so its onset starts before the previous
    syllable's end by the table-specified junction overlap."""
    onset_head = _first_leaf(nxt.node).segment
    overlap = overlaps.junction_overlap(onset_head)
    limit = _final_mora_duration(prev)
    if overlap > limit:
        raise TimingError(
            f"junction overlap {_ms(overlap)}ms exceeds the previous "
            f"syllable's final mora ({_ms(limit)}ms)")
    return nxt.shifted(prev.end - overlap - nxt.start)


def _final_mora_duration(syl: TimedNode) -> int:
    moras = [t for t in syl.walk() if t.label == MORA_LABEL]
    if moras:
        return moras[-1].duration
    leaves = [t for t in syl.leaves() if t.duration > 0]
    return leaves[-1].duration if leaves else syl.duration


def onset_duration(table: DurationTable, shape: str, key: str) -> int:
    """Convenience lookup for onset duration classes.

    shape "simple" takes a segment class key (e.g. "liquid",
    "voiced-obstruent"); shape "binary" takes "first-voiced" or
    "first-voiceless" and returns the constituent total.
    """
    if shape == "simple":
        hit = table.lookup(["onset:simple"], [key, "any"])
    elif shape == "binary":
        hit = table.lookup([f"onset-total:binary:{key}", "onset-total"], ["any"])
    else:
        raise TimingError(f"unknown onset shape {shape!r}")
    if hit is None:
        raise TimingError(f"no duration entry for {shape} onset {key!r}")
    return int(_ms(hit))


# ---------------------------------------------------------------------------
# Output formats.
# ---------------------------------------------------------------------------

def timed_to_dicts(timed: TimedNode) -> list[dict]:
    out = []
    for node in timed.walk():
        entry = {
            "label": node.label,
            "segment": node.segment.symbol if node.segment else None,
            "start_ms": node.start_ms,
            "end_ms": node.end_ms,
        }
        out.append(entry)
    return out


def timed_to_json(timed: TimedNode) -> str:
    return json.dumps(timed_to_dicts(timed), sort_keys=True)


def leaf_csv(timed: TimedNode) -> str:
    lines = ["symbol,start_ms,end_ms"]
    for leaf in timed.leaves():
        lines.append(f"{leaf.segment.symbol},{leaf.start_ms},{leaf.end_ms}")
    return "\n".join(lines) + "\n"
