"""Context-aware completion and project-wide macro retrieval."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from ..analysis import Analysis
from ..source_model import DocumentUri, ModuleUri, SourcePosition
from ..spotters import SymdefDecl


@dataclass(frozen=True)
class CompletionItem:
    name: str
    arity: int
    defining_module: ModuleUri | None
    explanation: str | None
    requires_import: bool
    insert_text: str

    @property
    def builtin(self) -> bool:
        return self.defining_module is None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "arity": self.arity,
            "definingModule": str(self.defining_module) if self.defining_module else None,
            "explanation": self.explanation,
            "requiresImport": self.requires_import,
            "insertText": self.insert_text,
        }


def insert_text(name: str, arity: int) -> str:
    return "\\" + name + "{}" * arity


def parse_macro_list(text: str) -> tuple[tuple[str, int], ...]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, _, arity = line.partition(" ")
        out.append((name, int(arity or 0)))
    return tuple(out)


@lru_cache(maxsize=None)
def _bundled_macros() -> tuple[tuple[str, int], ...]:
    text = resources.files("stexkit").joinpath("data/latex_macros.txt").read_text(encoding="utf-8")
    return parse_macro_list(text)


def load_builtin_macros(path: str | Path | None = None) -> tuple[tuple[str, int], ...]:
    if path is None:
        return _bundled_macros()
    return parse_macro_list(Path(path).read_text(encoding="utf-8"))


def explanation_for(analysis: Analysis, decl: SymdefDecl) -> str | None:
    for block in analysis.module_definitions(decl.defining_module):
        if decl.name in block.for_symbols:
            return f"{block.title}: {block.text}" if block.title else block.text
    return None


def _item(analysis: Analysis, decl: SymdefDecl, requires_import: bool) -> CompletionItem:
    return CompletionItem(decl.name, decl.arity, decl.defining_module,
                          explanation_for(analysis, decl), requires_import,
                          insert_text(decl.name, decl.arity))


def imported_at(analysis: Analysis, module: ModuleUri, pos: SourcePosition) -> set[ModuleUri]:
    """Modules reachable through the imports of ``module`` that start before ``pos``."""
    seen: set[ModuleUri] = set()
    for imp in analysis.module_imports(module):
        if imp.resolved is not None and imp.range.start < pos:
            seen |= analysis.theory.reachable_set(imp.resolved)
    return seen


def scope_at(analysis: Analysis, doc: DocumentUri, pos: SourcePosition) -> list[SymdefDecl]:
    """Symdefs usable at ``pos`` without adding an import.

    The enclosing module's own symdefs count once they start before ``pos``.
    """
    decl = analysis.module_at(doc, pos)
    if decl is None:
        return []
    module = decl.uri
    imported = imported_at(analysis, module, pos)
    out = []
    for definer in sorted(imported | {module}):
        for s in analysis.module_symdefs(definer):
            if definer == module and module not in imported and not s.range.start < pos:
                continue
            out.append(s)
    return out


def complete_at(analysis: Analysis, doc: DocumentUri, pos: SourcePosition, prefix: str = "",
                builtins: tuple[tuple[str, int], ...] | None = None) -> list[CompletionItem]:
    """Built-in macros plus every symdef in scope at ``pos`` whose name starts with ``prefix``."""
    analysis.result(doc)
    prefix = prefix.lstrip("\\")
    builtins = load_builtin_macros() if builtins is None else builtins
    items = [CompletionItem(n, a, None, None, False, insert_text(n, a))
             for n, a in builtins if n.startswith(prefix)]
    in_scope = {(s.name, s.defining_module): s for s in scope_at(analysis, doc, pos)}
    for name, definer in analysis.symdefs.prefix_query(prefix):
        decl = in_scope.get((name, definer))
        if decl is not None:
            items.append(_item(analysis, decl, False))
    items.sort(key=lambda i: (i.name, str(i.defining_module or "")))
    return items


def retrieve_all(analysis: Analysis, doc: DocumentUri | None, pos: SourcePosition | None,
                 prefix: str = "") -> list[CompletionItem]:
    """Every workspace symdef matching ``prefix``; reachable ones first.

    Without a position nothing counts as reachable.
    """
    prefix = prefix.lstrip("\\")
    ctx = analysis.module_at(doc, pos) if doc is not None else None
    reach = analysis.theory.reachable_set(ctx.uri) if ctx else frozenset()
    near, far = [], []
    seen = set()
    for decl in analysis.symdefs.decls_with_prefix(prefix):
        key = (decl.name, decl.defining_module)
        if key in seen:
            continue
        seen.add(key)
        if decl.defining_module in reach:
            near.append(_item(analysis, decl, False))
        else:
            far.append(_item(analysis, decl, True))
    return near + far
