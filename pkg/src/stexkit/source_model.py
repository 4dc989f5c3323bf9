"""Identifiers, positions, documents and the workspace that holds them."""

from __future__ import annotations

import bisect
import fnmatch
import logging
import posixpath
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

log = logging.getLogger(__name__)

DEFAULT_GLOBS = ("**/*.tex",)


class StexError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class RootNotFound(StexError):
    code = "root-not-found"


class RangeOutOfBounds(StexError):
    code = "range-out-of-bounds"


class UnknownDocument(StexError):
    code = "unknown-document"


def normalize_path(path: str) -> str:
    """Normalize a workspace-relative path to forward slashes with no ``.``/``..`` segments.

    Leading ``..`` segments that would escape the root are kept, so the
    result still identifies the intended file.
    """
    path = path.replace("\\", "/")
    parts: list[str] = []
    for part in path.split("/"):
        if part in ("", "."):
            continue
        if part == ".." and parts and parts[-1] != "..":
            parts.pop()
        else:
            parts.append(part)
    return "/".join(parts)


@dataclass(frozen=True, order=True)
class DocumentUri:
    value: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", normalize_path(self.value))

    @property
    def directory(self) -> str:
        return posixpath.dirname(self.value)

    @property
    def stem(self) -> str:
        name = posixpath.basename(self.value)
        return name[:-4] if name.endswith(".tex") else name

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class SourcePosition:
    line: int  # 1-based
    column: int  # 0-based, Unicode scalar values

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 0:
            raise ValueError(f"invalid position {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True, order=True)
class SourceRange:
    start: SourcePosition
    end: SourcePosition

    def __post_init__(self) -> None:
        a, b = self.start, self.end
        if b.line < a.line or (b.line == a.line and b.column < a.column):
            raise ValueError(f"range end {self.end} precedes start {self.start}")

    @classmethod
    def of(cls, l1: int, c1: int, l2: int, c2: int) -> "SourceRange":
        return cls(SourcePosition(l1, c1), SourcePosition(l2, c2))

    def contains(self, other: "SourceRange") -> bool:
        return self.start <= other.start and other.end <= self.end

    def contains_position(self, pos: SourcePosition) -> bool:
        return self.start <= pos < self.end

    def disjoint(self, other: "SourceRange") -> bool:
        return self.end <= other.start or other.end <= self.start

    @property
    def is_empty(self) -> bool:
        return self.start == self.end

    def __str__(self) -> str:
        return f"{self.start}-{self.end}"


@dataclass(frozen=True, order=True)
class ModuleUri:
    document: DocumentUri
    module_id: str

    @classmethod
    def parse(cls, text: str) -> "ModuleUri":
        doc, sep, module_id = text.rpartition("#")
        if not sep or not doc or not module_id:
            raise ValueError(f"not a module URI: {text!r}")
        return cls(DocumentUri(doc), module_id)

    def __str__(self) -> str:
        return f"{self.document.value}#{self.module_id}"


@dataclass(frozen=True)
class TextEdit:
    target: DocumentUri
    range: SourceRange
    replacement: str


@dataclass(frozen=True)
class Diagnostic:
    """A parse, resolution or service finding.

    ``fixes`` holds alternative fix groups; each group is a tuple of edits
    meant to be applied together.
    """

    severity: str  # "info" | "warning" | "error"
    code: str
    range: SourceRange
    message: str
    document: DocumentUri | None = None
    fixes: tuple[tuple[TextEdit, ...], ...] = ()


class LineIndex:
    """Maps between string offsets and (line, column) positions."""

    __slots__ = ("text", "starts")

    def __init__(self, text: str):
        self.text = text
        starts = [0]
        find = text.find
        i = find("\n")
        while i != -1:
            starts.append(i + 1)
            i = find("\n", i + 1)
        self.starts = starts

    @property
    def line_count(self) -> int:
        return len(self.starts)

    def line_length(self, line: int) -> int:
        start = self.starts[line - 1]
        end = self.starts[line] - 1 if line < len(self.starts) else len(self.text)
        return end - start

    def position(self, offset: int) -> SourcePosition:
        line = bisect.bisect_right(self.starts, offset)
        return SourcePosition(line, offset - self.starts[line - 1])

    def range(self, start: int, end: int) -> SourceRange:
        return SourceRange(self.position(start), self.position(end))

    def offset(self, pos: SourcePosition) -> int:
        if pos.line > len(self.starts) or pos.column > self.line_length(pos.line):
            raise RangeOutOfBounds(f"position {pos} outside document")
        return self.starts[pos.line - 1] + pos.column

    def offsets(self, rng: SourceRange) -> tuple[int, int]:
        return self.offset(rng.start), self.offset(rng.end)

    def slice(self, rng: SourceRange) -> str:
        a, b = self.offsets(rng)
        return self.text[a:b]


@dataclass
class Document:
    uri: DocumentUri
    text: str
    version: int = 0
    _lines: LineIndex | None = field(default=None, repr=False)

    @property
    def lines(self) -> LineIndex:
        if self._lines is None or self._lines.text is not self.text:
            self._lines = LineIndex(self.text)
        return self._lines


ChangeListener = Callable[[Document, TextEdit, str], None]


@dataclass
class Workspace:
    root: Path
    documents: dict[DocumentUri, Document] = field(default_factory=dict)
    source_globs: tuple[str, ...] = DEFAULT_GLOBS
    warnings: list[str] = field(default_factory=list)
    listeners: list[ChangeListener] = field(default_factory=list, repr=False)

    @classmethod
    def from_texts(cls, texts: dict[str, str], root: Path | str = ".") -> "Workspace":
        ws = cls(Path(root))
        for path, text in texts.items():
            ws.add_document(path, text)
        return ws

    def add_document(self, path: str | DocumentUri, text: str) -> Document:
        uri = path if isinstance(path, DocumentUri) else DocumentUri(path)
        doc = Document(uri, text)
        self.documents[uri] = doc
        return doc

    def document(self, uri: str | DocumentUri) -> Document:
        key = uri if isinstance(uri, DocumentUri) else DocumentUri(uri)
        try:
            return self.documents[key]
        except KeyError:
            raise UnknownDocument(f"no document {key}") from None

    def texts(self) -> dict[DocumentUri, str]:
        return {uri: doc.text for uri, doc in sorted(self.documents.items())}


def _matches(rel: str, globs: Iterable[str]) -> bool:
    for pattern in globs:
        if fnmatch.fnmatchcase(rel, pattern):
            return True
        # `**/` also matches zero directories
        if pattern.startswith("**/") and fnmatch.fnmatchcase(rel, pattern[3:]):
            return True
    return False


def scan_workspace(root: Path | str, globs: Iterable[str] = DEFAULT_GLOBS) -> Workspace:
    root = Path(root)
    if not root.is_dir():
        raise RootNotFound(f"workspace root {root} does not exist")
    globs = tuple(globs) or DEFAULT_GLOBS
    ws = Workspace(root, source_globs=globs)
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = path.relative_to(root).as_posix()
        if not _matches(rel, globs):
            continue
        try:
            raw = path.read_bytes()
        except OSError as exc:
            ws.warnings.append(f"{rel}: unreadable ({exc.strerror})")
            log.warning("skipping unreadable file %s: %s", rel, exc)
            continue
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            text = raw.decode("utf-8", errors="replace")
            ws.warnings.append(f"{rel}: invalid UTF-8 replaced with U+FFFD")
            log.warning("invalid UTF-8 in %s", rel)
        ws.add_document(rel, text)
    return ws


def splice(text: str, lines: LineIndex, edit: TextEdit) -> str:
    a, b = lines.offsets(edit.range)
    return text[:a] + edit.replacement + text[b:]


def apply_text_edit(workspace: Workspace, edit: TextEdit) -> str:
    """Splice ``edit`` into its target document and notify listeners."""
    doc = workspace.document(edit.target)
    old_text = doc.text
    doc.text = splice(old_text, doc.lines, edit)
    doc.version += 1
    for listener in list(workspace.listeners):
        listener(doc, edit, old_text)
    return doc.text


def position_after(start: SourcePosition, inserted: str) -> SourcePosition:
    """Position reached after writing ``inserted`` starting at ``start``."""
    newlines = inserted.count("\n")
    if not newlines:
        return SourcePosition(start.line, start.column + len(inserted))
    return SourcePosition(start.line + newlines, len(inserted) - inserted.rfind("\n") - 1)
