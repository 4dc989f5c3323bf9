"""Shared service types: errors, edit plans and small text helpers."""

from __future__ import annotations

import posixpath
from dataclasses import dataclass, field

from ..source_model import (
    DocumentUri,
    LineIndex,
    ModuleUri,
    SourcePosition,
    SourceRange,
    StexError,
    TextEdit,
    Workspace,
    apply_text_edit,
)


class AlreadyReachable(StexError):
    code = "already-reachable"


class UnknownSymbol(StexError):
    code = "unknown-symbol"


class InvalidName(StexError):
    code = "invalid-name"


class NameCollision(StexError):
    code = "name-collision"

    def __init__(self, message: str, modules: list[ModuleUri] = ()):
        super().__init__(message)
        self.modules = list(modules)


class IdCollision(StexError):
    code = "id-collision"


class RangeNotAStructure(StexError):
    code = "range-not-a-structure"


class EmptyQuery(StexError):
    code = "empty-query"


@dataclass
class RenamePlan:
    """Edits per document, each list sorted descending so it can be applied in order.

    ``created`` lists documents the plan creates; their edits apply to an empty text.
    """

    edits: dict[DocumentUri, list[TextEdit]] = field(default_factory=dict)
    touched_count: int = 0
    created: tuple[DocumentUri, ...] = ()

    def add(self, edit: TextEdit) -> None:
        self.edits.setdefault(edit.target, []).append(edit)

    def finalize(self) -> "RenamePlan":
        for doc, edits in list(self.edits.items()):
            edits.sort(key=lambda e: (e.range.start, e.range.end), reverse=True)
            for later, earlier in zip(edits, edits[1:]):
                if earlier.range.end > later.range.start:
                    raise ValueError(f"overlapping edits in {doc}: {earlier.range} and {later.range}")
            if not edits:
                del self.edits[doc]
        return self

    @property
    def is_empty(self) -> bool:
        return not self.edits

    def edit_count(self) -> int:
        return sum(len(v) for v in self.edits.values())

    def to_json(self) -> dict:
        return {
            "touchedCount": self.touched_count,
            "created": [str(d) for d in self.created],
            "edits": {
                str(doc): [{"range": str(e.range), "replacement": e.replacement} for e in edits]
                for doc, edits in sorted(self.edits.items())
            },
        }


def apply_plan(workspace: Workspace, plan: RenamePlan) -> list[DocumentUri]:
    """Apply ``plan`` to the workspace texts; returns the touched documents."""
    touched = []
    for doc in sorted(plan.edits):
        if doc not in workspace.documents:
            workspace.add_document(doc, "")
        for edit in plan.edits[doc]:
            apply_text_edit(workspace, edit)
        touched.append(doc)
    return touched


def preview_text(text: str, edits: list[TextEdit]) -> str:
    """Result of applying descending-sorted ``edits`` to ``text``."""
    for edit in edits:
        lines = LineIndex(text)
        a, b = lines.offsets(edit.range)
        text = text[:a] + edit.replacement + text[b:]
    return text


def doc_relpath(from_doc: DocumentUri, to_doc: DocumentUri) -> str:
    """Path of ``to_doc`` relative to ``from_doc``'s directory, without ``.tex``."""
    target = to_doc.value[:-4] if to_doc.value.endswith(".tex") else to_doc.value
    return posixpath.relpath(target, from_doc.directory or ".")


def import_command(from_doc: DocumentUri, target: ModuleUri) -> str:
    if target.document == from_doc:
        return f"\\importmodule{{{target.module_id}}}"
    return f"\\importmodule[{doc_relpath(from_doc, target.document)}]{{{target.module_id}}}"


def line_indent(text: str, line: int) -> str:
    lines = LineIndex(text)
    start = lines.starts[line - 1]
    end = start
    while end < len(text) and text[end] in " \t":
        end += 1
    return text[start:end]


def removal_range(text: str, rng: SourceRange) -> SourceRange:
    """``rng`` widened to whole lines when nothing else shares those lines."""
    lines = LineIndex(text)
    a, b = lines.offsets(rng)
    line_start = text.rfind("\n", 0, a) + 1
    line_end = text.find("\n", b)
    line_end = len(text) if line_end < 0 else line_end
    if text[line_start:a].strip() or text[b:line_end].strip():
        return rng
    if line_end < len(text):
        return lines.range(line_start, line_end + 1)
    if line_start > 0:
        return lines.range(line_start - 1, line_end)
    return lines.range(line_start, line_end)


def end_of(text: str) -> SourcePosition:
    return LineIndex(text).position(len(text))
