"""Range-tree change management.

After every edit we decide whether the spotted ranges can simply be moved
(ShiftOnly) or the document must be parsed and spotted again
(FullReanalysis).  An edit forces re-analysis when, after widening it by one
character on each side, it overlaps an *important* range, or when the
inserted or deleted text contains a character the parser treats specially,
or when it sits next to a backslash.

Important ranges are the header and footer spans of spotted structures and
environments, whole ``\\symdef``/``\\importmodule``/sectioning commands,
every command token plus the whitespace after a command or environment
header (where more arguments could attach), comments, math regions,
verbatim content and diagnostic spans.  Prose inside module and
definition bodies is not important.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator

from .analysis import Analysis
from .parser import VERBATIM_ENVS, DocumentTree, NodeKind, TokenKind, plain_text
from .source_model import (
    Document,
    DocumentUri,
    LineIndex,
    SourcePosition,
    SourceRange,
    StexError,
    TextEdit,
)
from .spotters import SpotterResult

TRIGGER_CHARS = frozenset("\\{}[]$%")


class StaleVersion(StexError):
    code = "stale-version"


class ActionKind(Enum):
    SHIFT_ONLY = "ShiftOnly"
    FULL_REANALYSIS = "FullReanalysis"


@dataclass(frozen=True)
class AnalysisAction:
    kind: ActionKind
    reason: str


@dataclass
class RangeNode:
    ref: Any
    range: SourceRange
    important: bool
    children: list["RangeNode"] = field(default_factory=list)


@dataclass
class RangeTree:
    """Nesting tree of ranges for one document; siblings are in source order."""

    document: DocumentUri
    version: int
    roots: list[RangeNode] = field(default_factory=list)
    # important ranges that need not nest (diagnostic spans), scanned linearly
    loose: list[RangeNode] = field(default_factory=list)

    @classmethod
    def build(cls, document: DocumentUri, entries: list[tuple[Any, SourceRange, bool]],
              version: int = 0, loose: list[tuple[Any, SourceRange]] = ()) -> "RangeTree":
        ordered = sorted(enumerate(entries), key=lambda e: (e[1][1].start, _neg(e[1][1].end), e[0]))
        tree = cls(document, version, loose=[RangeNode(ref, rng, True) for ref, rng in loose])
        stack: list[RangeNode] = []
        for _, (ref, rng, important) in ordered:
            node = RangeNode(ref, rng, important)
            while stack and not stack[-1].range.contains(rng):
                stack.pop()
            (stack[-1].children if stack else tree.roots).append(node)
            stack.append(node)
        return tree

    def walk(self) -> Iterator[tuple[RangeNode, RangeNode | None]]:
        stack: list[tuple[RangeNode, RangeNode | None]] = [(n, None) for n in reversed(self.roots)]
        while stack:
            node, parent = stack.pop()
            yield node, parent
            stack.extend((c, node) for c in reversed(node.children))

    def __len__(self) -> int:
        return sum(1 for _ in self.walk())

    def intersecting(self, lo: SourcePosition, hi: SourcePosition) -> list[RangeNode]:
        """Important nodes whose closed range overlaps the closed interval [lo, hi]."""
        hits = [n for n in self.loose if not (n.range.start > hi or n.range.end < lo)]
        stack = list(self.roots)
        while stack:
            node = stack.pop()
            rng = node.range
            if rng.start > hi or rng.end < lo:
                continue
            if node.important:
                hits.append(node)
            stack.extend(node.children)
        return hits

    def is_well_nested(self) -> bool:
        for node, _ in self.walk():
            kids = node.children
            for child in kids:
                if not node.range.contains(child.range):
                    return False
            for a, b in zip(kids, kids[1:]):
                if b.range.start < a.range.end:
                    return False
        for a, b in zip(self.roots, self.roots[1:]):
            if b.range.start < a.range.end:
                return False
        return True


class _Neg:
    __slots__ = ("pos",)

    def __init__(self, pos: SourcePosition):
        self.pos = pos

    def __lt__(self, other: "_Neg") -> bool:
        return other.pos < self.pos

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _Neg) and other.pos == self.pos


def _neg(pos: SourcePosition) -> _Neg:
    return _Neg(pos)


def _trailing_trivia(tree: DocumentTree, offset: int, token_at: dict[int, int]) -> tuple[int, int] | None:
    """Span of whitespace/comment tokens starting exactly at ``offset``."""
    idx = token_at.get(offset)
    if idx is None:
        return None
    tokens = tree.tokens
    j = idx
    while j < len(tokens) and tokens[j].kind in (TokenKind.WHITESPACE, TokenKind.COMMENT):
        j += 1
    if j == idx:
        return None
    return offset, tokens[j - 1].end


def build_range_tree(tree: DocumentTree, result: SpotterResult, version: int = 0) -> RangeTree:
    lines = tree.lines
    entries: list[tuple[Any, SourceRange, bool]] = []
    add = entries.append
    for m in result.modules:
        add((m, m.body_range, False))
        add(("module-begin", m.begin_range, True))
        add(("module-end", m.end_range, True))
    for d in result.definitions:
        add((d, d.range, False))
        add(("definition-text", d.text_range, False))
        add(("definition-begin", d.header_range, True))
        add(("definition-end", d.footer_range, True))
    for s in result.symdefs:
        add((s, s.range, True))
    for i in result.imports:
        add((i, i.range, True))
    for s in result.sections:
        add((s, s.range, True))

    token_at = {tok.start: k for k, tok in enumerate(tree.tokens)}
    for node in tree.nodes():
        kind = node.kind
        if kind is NodeKind.COMMAND:
            add(("command", lines.range(node.start, node.name_end), True))
            span = _trailing_trivia(tree, node.end, token_at)
            if span:
                add(("trivia", lines.range(*span), True))
        elif kind is NodeKind.ENVIRONMENT:
            if node.name in VERBATIM_ENVS:
                add(("verbatim", node.range, True))
            add(("env-begin", node.begin_range, True))
            add(("env-end", node.end_range, True))
            span = _trailing_trivia(tree, node.header_end, token_at)
            if span:
                add(("trivia", lines.range(*span), True))
        elif kind is NodeKind.MATH:
            add(("math", node.range, True))
        elif kind is NodeKind.COMMENT:
            add(("comment", node.range, True))
    for k, tok in enumerate(tree.tokens):
        if tok.kind is TokenKind.COMMAND and tok.lexeme.startswith("\\verb") and k + 1 < len(tree.tokens):
            add(("verb", lines.range(tok.start, tree.tokens[k + 1].end), True))
    loose = [("diagnostic", d.range) for d in result.diagnostics]
    return RangeTree.build(result.document, entries, version, loose)


def _guarded(lines: LineIndex, edit: TextEdit) -> tuple[SourcePosition, SourcePosition]:
    a, b = lines.offsets(edit.range)
    n = len(lines.text)
    return lines.position(max(0, a - 1)), lines.position(min(n, b + 1))


def classify_edit(tree: RangeTree, edit: TextEdit, text: str,
                  version: int | None = None) -> AnalysisAction:
    """Decide how to process ``edit``; ``text`` is the document before the edit."""
    if version is not None and version != tree.version:
        raise StaleVersion(f"range tree at version {tree.version}, edit for {version}")
    lines = LineIndex(text)
    a, b = lines.offsets(edit.range)
    if TRIGGER_CHARS.intersection(edit.replacement):
        return AnalysisAction(ActionKind.FULL_REANALYSIS, "replacement contains markup characters")
    if TRIGGER_CHARS.intersection(text[a:b]):
        return AnalysisAction(ActionKind.FULL_REANALYSIS, "deleted text contains markup characters")
    if (a > 0 and text[a - 1] == "\\") or (b < len(text) and text[b] == "\\"):
        return AnalysisAction(ActionKind.FULL_REANALYSIS, "edit adjoins a backslash")
    lo, hi = _guarded(lines, edit)
    hits = tree.intersecting(lo, hi)
    if hits:
        ref = hits[0].ref
        label = ref if isinstance(ref, str) else type(ref).__name__
        return AnalysisAction(ActionKind.FULL_REANALYSIS, f"edit touches an important range ({label})")
    return AnalysisAction(ActionKind.SHIFT_ONLY, "edit confined to plain text")


class _Shifter:
    """Maps positions of the pre-edit text to the post-edit text."""

    def __init__(self, edit: TextEdit):
        self.start = edit.range.start
        self.end = edit.range.end
        rep = edit.replacement
        self.newlines = rep.count("\n")
        self.tail = len(rep) - rep.rfind("\n") - 1 if self.newlines else len(rep)

    def position(self, p: SourcePosition) -> SourcePosition:
        if p < self.end:
            if p <= self.start:
                return p
            raise ValueError(f"position {p} lies inside the edited span")
        if p.line == self.end.line:
            base = self.start.column if not self.newlines else 0
            return SourcePosition(self.start.line + self.newlines, base + self.tail + p.column - self.end.column)
        return SourcePosition(p.line + self.start.line + self.newlines - self.end.line, p.column)

    def range(self, r: SourceRange) -> SourceRange:
        if r.end < self.end:
            if r.end <= self.start:
                return r
            if r.start <= self.start:
                raise ValueError(f"range {r} ends inside the edited span")
        return SourceRange(self.position(r.start), self.position(r.end))

    def record(self, rec: Any) -> Any:
        if isinstance(rec, SourceRange):
            return self.range(rec)
        if dataclasses.is_dataclass(rec) and not isinstance(rec, type):
            changes = {}
            for f in dataclasses.fields(rec):
                value = getattr(rec, f.name)
                if isinstance(value, SourceRange):
                    changes[f.name] = self.range(value)
                elif isinstance(value, tuple) and value and dataclasses.is_dataclass(value[0]):
                    changes[f.name] = tuple(self.record(v) for v in value)
            return dataclasses.replace(rec, **changes) if changes else rec
        return rec


def shift_ranges(tree: RangeTree, edit: TextEdit) -> RangeTree:
    shifter = _Shifter(edit)

    def move(node: RangeNode) -> RangeNode:
        return RangeNode(node.ref, shifter.range(node.range), node.important,
                         [move(c) for c in node.children])

    return RangeTree(tree.document, tree.version + 1, [move(n) for n in tree.roots],
                     [move(n) for n in tree.loose])


def shift_result(result: SpotterResult, edit: TextEdit, new_text: str) -> SpotterResult:
    """Translate every range of ``result`` and refresh definition texts touched by ``edit``."""
    shifter = _Shifter(edit)
    moved: SpotterResult = shifter.record(result)
    after = SourcePosition(edit.range.start.line, edit.range.start.column)
    touched = [d for d in moved.definitions if d.text_range.start <= after <= d.text_range.end]
    if not touched:
        return moved
    lines = LineIndex(new_text)
    definitions = []
    for d in moved.definitions:
        if d in touched:
            d = dataclasses.replace(d, text=plain_text(lines.slice(d.text_range)))
        definitions.append(d)
    return dataclasses.replace(moved, definitions=tuple(definitions))


def reanalyze(analysis: Analysis, doc: DocumentUri, version: int = 0) -> tuple[SpotterResult, RangeTree]:
    """Parse and spot ``doc`` again and push the index delta."""
    tree, result = analysis.reanalyze(doc)
    return result, build_range_tree(tree, result, version)


@dataclass
class IncrementalSession:
    """Keeps an ``Analysis`` current while edits flow through its workspace."""

    analysis: Analysis
    trees: dict[DocumentUri, RangeTree] = field(default_factory=dict)
    counts: dict[ActionKind, int] = field(default_factory=lambda: {k: 0 for k in ActionKind})

    def __post_init__(self) -> None:
        ws = self.analysis.workspace
        for uri, doc in sorted(ws.documents.items()):
            tree, result = self.analysis.spot(uri)
            self.trees[uri] = build_range_tree(tree, result, doc.version)
        ws.listeners.append(self.on_change)

    def close(self) -> None:
        if self.on_change in self.analysis.workspace.listeners:
            self.analysis.workspace.listeners.remove(self.on_change)

    def on_change(self, doc: Document, edit: TextEdit, old_text: str) -> None:
        uri = doc.uri
        rtree = self.trees[uri]
        action = classify_edit(rtree, edit, old_text, doc.version - 1)
        if self.analysis.registry.custom:
            action = AnalysisAction(ActionKind.FULL_REANALYSIS, "custom spotters registered")
        self.counts[action.kind] += 1
        if action.kind is ActionKind.SHIFT_ONLY:
            old = self.analysis.results[uri]
            self.trees[uri] = shift_ranges(rtree, edit)
            self.analysis.apply_delta(uri, old, shift_result(old, edit, doc.text))
        else:
            _, self.trees[uri] = reanalyze(self.analysis, uri, doc.version)
