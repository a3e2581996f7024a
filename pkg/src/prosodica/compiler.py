"""Grammar DSL compiler.

The DSL is line-oriented.  Statements:

    feature cons son voi ...
    segment t [+cons,-son,-voi]
    segment "" [-cons,+son]
    macro NAME = [+son]
    param VoicedStops = no
    start Word
    Syl --> (Onset / Rime)
    Rime --> (Nucleus \\ Coda)
    Onset --> X:[+cons]
    Onset --> X:""
    *[+voi,+spread]
    constraint coda-sonority
    constraint custom-adjacent-pair [-cons] [-cons]
    track F2 on Mora:[-cons] at (20%, 100%) = (F2Value, F2Locus)

Conditional compilation uses ``#if Param == value`` ... ``#endif`` blocks
(nestable) and ``#include "file"`` directives resolved against a search
path in which language-specific directories shadow the universal one.
Any other line starting with ``#`` is a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .features import (
    EMPTY_BUNDLE,
    FeatureBundle,
    FeatureInventory,
    MacroError,
    Segment,
    expand_macro,
    matches,
    unify,
)
from .grammar import Constraint, Filter, Grammar, Production, RhsItem


class CompileError(ValueError):
    def __init__(self, message: str, filename: str = "<string>", line: int = 0):
        self.filename = filename
        self.line = line
        super().__init__(f"{filename}:{line}: {message}" if line else message)


@dataclass
class _Line:
    filename: str
    number: int
    text: str


@dataclass(frozen=True)
class CompiledSource:
    """A compiled grammar together with raw track-rule statements."""

    grammar: Grammar
    track_statements: tuple[tuple[str, str, int], ...]  # (text, file, line)


_DIRECTIVE_RE = re.compile(r"^#(if|endif|include)\b")
_PARAM_RE = re.compile(r"^param\s+(\w+)\s*=\s*(\S+)\s*$")
_IF_RE = re.compile(r"^#if\s+(\w+)\s*==\s*(\S+)\s*$")
_INCLUDE_RE = re.compile(r'^#include\s+"([^"]+)"\s*$')


def _strip_comment(text: str) -> str:
    if text.lstrip().startswith("#") and not _DIRECTIVE_RE.match(text.lstrip()):
        return ""
    idx = text.find(" #")
    if idx >= 0:
        return text[:idx]
    return text


def _preprocess(
    source: str,
    filename: str,
    env: dict[str, str],
    declared: dict[str, str],
    overrides: Mapping[str, str],
    search_path: Sequence[Path],
    stack: list[Path],
    out: list[_Line],
) -> None:
    cond_stack: list[bool] = []
    for number, raw in enumerate(source.splitlines(), start=1):
        text = _strip_comment(raw).strip()
        if not text:
            continue
        m = _IF_RE.match(text)
        if m:
            name, wanted = m.group(1), m.group(2)
            if all(cond_stack):
                if name not in env:
                    raise CompileError(f"unknown parameter {name!r} in conditional",
                                       filename, number)
                cond_stack.append(env[name] == wanted)
            else:
                cond_stack.append(False)
            continue
        if text.startswith("#endif"):
            if not cond_stack:
                raise CompileError("#endif without matching #if", filename, number)
            cond_stack.pop()
            continue
        if text.startswith("#include"):
            if not all(cond_stack):
                continue
            m = _INCLUDE_RE.match(text)
            if not m:
                raise CompileError("malformed #include directive", filename, number)
            target = _resolve_include(m.group(1), search_path)
            if target is None:
                raise CompileError(f"include file {m.group(1)!r} not found on search path",
                                   filename, number)
            if target in stack:
                raise CompileError(f"include cycle via {target}", filename, number)
            stack.append(target)
            _preprocess(target.read_text(encoding="utf-8"), str(target), env,
                        declared, overrides, search_path, stack, out)
            stack.pop()
            continue
        if text.startswith("#"):
            raise CompileError(f"unknown directive {text.split()[0]!r}", filename, number)
        if not all(cond_stack):
            continue
        m = _PARAM_RE.match(text)
        if m:
            name, value = m.group(1), m.group(2)
            if name in declared and declared[name] != value:
                raise CompileError(
                    f"contradictory duplicate definition of parameter {name!r} "
                    f"({declared[name]!r} vs {value!r})", filename, number)
            declared[name] = value
            env[name] = overrides.get(name, value)
            out.append(_Line(filename, number, f"param {name} = {env[name]}"))
            continue
        out.append(_Line(filename, number, text))
    if cond_stack:
        raise CompileError("unterminated #if block", filename, len(source.splitlines()))


def _resolve_include(name: str, search_path: Sequence[Path]) -> Optional[Path]:
    candidates = [name] if name.endswith(".pg") else [name, name + ".pg"]
    for base in search_path:
        for cand in candidates:
            path = Path(base) / cand
            if path.is_file():
                return path.resolve()
    return None


def resolve_conditionals(
    source: str,
    params: Mapping[str, str] | None = None,
    *,
    search_path: Sequence[str | Path] = (),
    filename: str = "<string>",
) -> str:
    """Resolve #if/#endif blocks and #include directives to plain DSL text."""
    overrides = dict(params or {})
    env = dict(overrides)
    out: list[_Line] = []
    _preprocess(source, filename, env, {}, overrides,
                [Path(p) for p in search_path], [], out)
    return "\n".join(line.text for line in out) + "\n"


# ---------------------------------------------------------------------------
# Statement parsing.
# ---------------------------------------------------------------------------

_LABEL_RE = r"[A-Za-z][A-Za-z0-9_~']*"
_PROD_RE = re.compile(rf"^({_LABEL_RE}(?::\[[^\]]*\])?)\s*-->\s*(.+)$")
_BINARY_RE = re.compile(r"^\(\s*(.+?)\s*(/|\\)\s*(.+?)\s*\)$")
_TRACK_RE = re.compile(r"^track\s+\S+\s+on\s+.+\s+at\s+\(.+\)\s*=\s*\(.+\)$")


@dataclass
class _RawBundle:
    tokens: tuple[str, ...]  # "+name", "-name" or bare macro name


def _parse_bundle_text(text: str, where: _Line) -> _RawBundle:
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise CompileError(f"expected [..] feature bundle, got {text!r}",
                           where.filename, where.number)
    inner = body[1:-1].strip()
    if not inner:
        return _RawBundle(())
    tokens = tuple(t.strip() for t in re.split(r"[,\s]+", inner) if t.strip())
    for tok in tokens:
        if tok[0] in "+-":
            if not tok[1:]:
                raise CompileError(f"bad feature token {tok!r}", where.filename, where.number)
        elif not re.fullmatch(r"\w+", tok):
            raise CompileError(f"bad feature token {tok!r}", where.filename, where.number)
    return _RawBundle(tokens)


def _parse_rhs_item(text: str, where: _Line) -> tuple[str, Optional[_RawBundle], Optional[str]]:
    text = text.strip()
    if ":" in text:
        label, _, rest = text.partition(":")
        rest = rest.strip()
        if rest.startswith('"'):
            if not rest.endswith('"') or len(rest) < 2:
                raise CompileError(f"unterminated symbol in {text!r}",
                                   where.filename, where.number)
            return label, None, rest[1:-1]
        return label, _parse_bundle_text(rest, where), None
    if not re.fullmatch(_LABEL_RE, text):
        raise CompileError(f"bad rhs item {text!r}", where.filename, where.number)
    return text, None, None


@dataclass
class _Statements:
    features: list[str] = field(default_factory=list)
    segments: list[tuple[str, _RawBundle, _Line]] = field(default_factory=list)
    macros: dict[str, _RawBundle] = field(default_factory=dict)
    params: list[tuple[str, str]] = field(default_factory=list)
    start: Optional[str] = None
    productions: list[tuple] = field(default_factory=list)
    filters: list[tuple[_RawBundle, _Line]] = field(default_factory=list)
    constraints: list[tuple[str, list[_RawBundle], _Line]] = field(default_factory=list)
    tracks: list[tuple[str, str, int]] = field(default_factory=list)


def _parse_statements(lines: list[_Line]) -> _Statements:
    st = _Statements()
    for line in lines:
        text = line.text
        if text.startswith("feature "):
            st.features.extend(text.split()[1:])
            continue
        if text.startswith("segment "):
            rest = text[len("segment "):].strip()
            if rest.startswith('"'):
                end = rest.find('"', 1)
                if end < 0:
                    raise CompileError("unterminated segment symbol", line.filename, line.number)
                symbol, bundle_text = rest[1:end], rest[end + 1:]
            else:
                parts = rest.split(None, 1)
                symbol = parts[0]
                bundle_text = parts[1] if len(parts) > 1 else "[]"
            st.segments.append((symbol, _parse_bundle_text(bundle_text or "[]", line), line))
            continue
        if text.startswith("macro "):
            m = re.match(r"^macro\s+(\w+)\s*=\s*(\[.*\])\s*$", text)
            if not m:
                raise CompileError("malformed macro statement", line.filename, line.number)
            st.macros[m.group(1)] = _parse_bundle_text(m.group(2), line)
            continue
        if text.startswith("param "):
            m = _PARAM_RE.match(text)
            if not m:
                raise CompileError("malformed param statement", line.filename, line.number)
            st.params.append((m.group(1), m.group(2)))
            continue
        if text.startswith("start "):
            st.start = text.split()[1]
            continue
        if text.startswith("*"):
            st.filters.append((_parse_bundle_text(text[1:], line), line))
            continue
        if text.startswith("constraint "):
            parts = text.split(None, 2)
            kind = parts[1]
            payload = []
            if len(parts) > 2:
                for chunk in re.findall(r"\[[^\]]*\]", parts[2]):
                    payload.append(_parse_bundle_text(chunk, line))
            st.constraints.append((kind, payload, line))
            continue
        if text.startswith("track "):
            if not _TRACK_RE.match(text):
                raise CompileError("malformed track statement", line.filename, line.number)
            st.tracks.append((text, line.filename, line.number))
            continue
        m = _PROD_RE.match(text)
        if m:
            st.productions.append((m.group(1), m.group(2), line))
            continue
        raise CompileError(f"cannot parse statement {text!r}", line.filename, line.number)
    return st


# ---------------------------------------------------------------------------
# Compilation proper.
# ---------------------------------------------------------------------------

_DEFAULT_MACRO_PARAMS = {"SYLLABIC": ("SyllabicClass", "vowels"),
                         "MORAIC": ("MoraicClass", "any")}


def _expand_bundle(raw: _RawBundle, inventory: FeatureInventory,
                   macros: Mapping[str, FeatureBundle], where: _Line) -> FeatureBundle:
    bundle = EMPTY_BUNDLE
    for tok in raw.tokens:
        if tok[0] in "+-":
            piece = FeatureBundle.make({tok[1:]: tok[0]})
        else:
            if tok not in macros:
                raise CompileError(f"undefined macro {tok!r}", where.filename, where.number)
            piece = macros[tok]
        try:
            piece.validate(inventory)
        except Exception as exc:
            raise CompileError(str(exc), where.filename, where.number)
        merged = unify(bundle, piece)
        if merged is None:
            raise CompileError(f"contradictory feature bundle {raw.tokens}",
                               where.filename, where.number)
        bundle = merged
    return bundle


def compile_source(
    source: str,
    overrides: Mapping[str, str] | None = None,
    *,
    search_path: Sequence[str | Path] = (),
    filename: str = "<string>",
) -> CompiledSource:
    overrides = dict(overrides or {})
    env: dict[str, str] = dict(overrides)
    declared: dict[str, str] = {}
    lines: list[_Line] = []
    _preprocess(source, filename, env, declared, overrides,
                [Path(p) for p in search_path], [], lines)

    unknown = set(overrides) - set(declared)
    if unknown:
        raise CompileError(
            f"override of undeclared parameter(s): {', '.join(sorted(unknown))}")

    st = _parse_statements(lines)

    inventory = FeatureInventory(tuple(dict.fromkeys(st.features)))
    params = {name: env[name] for name, _ in st.params}

    macros: dict[str, FeatureBundle] = {}
    for name, (param_name, default) in _DEFAULT_MACRO_PARAMS.items():
        setting = params.get(param_name, default)
        try:
            macros[name] = expand_macro(name, setting)
        except MacroError as exc:
            raise CompileError(str(exc))
    anchor = lines[0] if lines else _Line(filename, 0, "")
    for name, raw in st.macros.items():
        macros[name] = _expand_bundle(raw, inventory, macros, anchor)

    segments: list[Segment] = []
    seen_symbols: set[str] = set()
    for symbol, raw, line in st.segments:
        if symbol in seen_symbols:
            raise CompileError(f"duplicate segment symbol {symbol!r}",
                               line.filename, line.number)
        seen_symbols.add(symbol)
        segments.append(Segment(symbol, _expand_bundle(raw, inventory, macros, line)))

    filters: list[Filter] = []
    for raw, line in st.filters:
        spec = _expand_bundle(raw, inventory, macros, line)
        if not spec:
            raise CompileError("filter spec must be non-empty", line.filename, line.number)
        filters.append(Filter(spec))

    # Filters prune the segment inventory.
    kept = [s for s in segments if not any(matches(s, f.spec) for f in filters)]

    productions: list[Production] = []
    for lhs_text, rhs_text, line in st.productions:
        lhs_label, lhs_raw, lhs_sym = _parse_rhs_item(lhs_text, line)
        if lhs_sym is not None:
            raise CompileError("lhs cannot carry a symbol", line.filename, line.number)
        lhs_spec = _expand_bundle(lhs_raw, inventory, macros, line) if lhs_raw else EMPTY_BUNDLE
        rhs_text = rhs_text.strip().rstrip(".")
        m = _BINARY_RE.match(rhs_text)
        if m:
            items = []
            for chunk in (m.group(1), m.group(3)):
                label, raw, sym = _parse_rhs_item(chunk, line)
                spec = _expand_bundle(raw, inventory, macros, line) if raw else EMPTY_BUNDLE
                items.append(RhsItem(label, spec, sym))
            head_index = 1 if m.group(2) == "/" else 0
            productions.append(Production(lhs_label, lhs_spec, tuple(items), head_index))
        else:
            label, raw, sym = _parse_rhs_item(rhs_text, line)
            spec = _expand_bundle(raw, inventory, macros, line) if raw else EMPTY_BUNDLE
            productions.append(Production(lhs_label, lhs_spec, (RhsItem(label, spec, sym),), 0))

    constraints: list[Constraint] = []
    for kind, raws, line in st.constraints:
        payload = tuple(_expand_bundle(r, inventory, macros, line) for r in raws)
        try:
            constraints.append(Constraint(kind, payload))
        except ValueError as exc:
            raise CompileError(str(exc), line.filename, line.number)

    start = st.start or (productions[0].lhs if productions else "")
    if not any(p.lhs == start for p in productions):
        raise CompileError(f"start symbol {start!r} has no production")

    grammar = Grammar(
        inventory=inventory,
        segments=tuple(kept),
        productions=tuple(productions),
        filters=tuple(filters),
        constraints=tuple(constraints),
        params=tuple((name, env[name]) for name, _ in st.params),
        start_symbol=start,
    )
    _validate_grammar(grammar)
    return CompiledSource(grammar, tuple(st.tracks))


def _validate_grammar(grammar: Grammar) -> None:
    nonterminals = {p.lhs for p in grammar.productions}
    for prod in grammar.productions:
        for item in prod.rhs:
            if item.label == "X":
                if not grammar.matching_segments(item):
                    raise CompileError(
                        f"no segment can fill terminal {item} in {prod} "
                        "(a filter may have emptied a required segment class)")
            elif item.label not in nonterminals:
                raise CompileError(f"rhs label {item.label!r} in {prod} has no production")


def compile_grammar(
    source: str,
    overrides: Mapping[str, str] | None = None,
    *,
    search_path: Sequence[str | Path] = (),
    filename: str = "<string>",
) -> Grammar:
    """Compile DSL text (plus parameter overrides) into an immutable Grammar."""
    return compile_source(source, overrides, search_path=search_path,
                          filename=filename).grammar


# ---------------------------------------------------------------------------
# Parameterized weight rules (moraic syllable core).
# ---------------------------------------------------------------------------

def weight_rules(params: Mapping[str, str], label: str = "Syl") -> tuple[Production, ...]:
    """Emit the parameterized mora productions for one syllable core.

    Covers the light and heavy cores, the mora terminal, the three-mora
    expansion when SuperHeavySyllable is on, and non-moraic coda
    adjunction when CodaAdjunction is on.
    """
    syllabic = expand_macro("SYLLABIC", params.get("SyllabicClass", "vowels"))
    moraic = expand_macro("MORAIC", params.get("MoraicClass", "any"))
    heavy_plus = FeatureBundle.make({"heavy": "+"})
    heavy_minus = FeatureBundle.make({"heavy": "-"})

    rules = [
        Production(label, heavy_minus, (RhsItem("Mora", syllabic),), 0),
        Production(label, heavy_plus,
                   (RhsItem("Mora", syllabic), RhsItem("Mora")), 0),
        Production("Mora", moraic, (RhsItem("X"),), 0),
    ]
    if params.get("SuperHeavySyllable") == "yes":
        rules.insert(2, Production(label, heavy_plus,
                                   (RhsItem("Mora", syllabic), RhsItem("Moras")), 0))
        rules.insert(3, Production("Moras", EMPTY_BUNDLE,
                                   (RhsItem("Mora"), RhsItem("Mora")), 0))
    if params.get("CodaAdjunction") == "yes":
        rules.append(Production(label, EMPTY_BUNDLE,
                                (RhsItem(label), RhsItem("X")), 0))
    return tuple(rules)
