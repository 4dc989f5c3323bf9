"""Semantic spotters: extract modules, imports, symbol definitions and uses.

A spotter is a plain function ``(DocumentTree, DocumentUri) -> list`` that
queries the command tree.  The built-in ones are always present in a
``SpotterRegistry``; extra ones can be registered under a fresh name and
their output lands in ``SpotterResult.custom``.
"""

from __future__ import annotations

import logging
import posixpath
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .parser import DocumentTree, MalformedSymdef, Node, NodeKind, arity_of_symdef, paused_gc, plain_text
from .source_model import (
    Diagnostic,
    DocumentUri,
    ModuleUri,
    SourcePosition,
    SourceRange,
    StexError,
)

log = logging.getLogger(__name__)

NAME_RE = re.compile(r"[A-Za-z]+\*?\Z")
DEFINITION_ENVS = ("definition", "assumption", "theorem")
SECTION_LEVELS = ("section", "subsection", "subsubsection")
STRUCTURAL_COMMANDS = frozenset(
    {"begin", "end", "symdef", "importmodule"}
    | set(SECTION_LEVELS)
    | {s + "*" for s in SECTION_LEVELS}
)


class DuplicateSpotterName(StexError):
    code = "duplicate-spotter"


class UnresolvedImport(StexError):
    code = "unresolved-import"


class AmbiguousImport(StexError):
    code = "ambiguous-import"


@dataclass(frozen=True)
class ModuleDecl:
    uri: ModuleUri
    id: str
    begin_range: SourceRange
    end_range: SourceRange
    body_range: SourceRange
    id_range: SourceRange | None = None
    parent: ModuleUri | None = None
    synthetic: bool = False


@dataclass(frozen=True)
class ImportDecl:
    importer: ModuleUri
    target_path: str | None
    target_name: str
    range: SourceRange
    name_range: SourceRange
    resolved: ModuleUri | None = None


@dataclass(frozen=True)
class SymdefDecl:
    defining_module: ModuleUri
    name: str
    arity: int
    presentation: str
    range: SourceRange
    name_range: SourceRange


@dataclass(frozen=True)
class SymbolUse:
    in_module: ModuleUri | None
    name: str
    range: SourceRange
    resolved_definer: ModuleUri | None = None


@dataclass(frozen=True)
class DefinitionBlock:
    in_module: ModuleUri
    id: str | None
    title: str | None
    for_symbols: tuple[str, ...]
    kind: str
    range: SourceRange
    header_range: SourceRange
    footer_range: SourceRange
    text_range: SourceRange
    text: str
    for_inferred: bool = False


@dataclass(frozen=True)
class SectionMark:
    document: DocumentUri
    level: str
    title: str
    range: SourceRange


@dataclass(frozen=True)
class SpotterResult:
    document: DocumentUri
    modules: tuple[ModuleDecl, ...] = ()
    imports: tuple[ImportDecl, ...] = ()
    symdefs: tuple[SymdefDecl, ...] = ()
    uses: tuple[SymbolUse, ...] = ()
    definitions: tuple[DefinitionBlock, ...] = ()
    sections: tuple[SectionMark, ...] = ()
    custom: tuple[tuple[str, tuple], ...] = ()
    diagnostics: tuple[Diagnostic, ...] = ()

    def custom_results(self, name: str) -> tuple:
        for key, items in self.custom:
            if key == name:
                return items
        return ()

    def structures(self) -> list:
        """Every spotted record except symbol uses and the synthetic module."""
        real = [m for m in self.modules if not m.synthetic]
        return [*real, *self.imports, *self.symdefs, *self.definitions, *self.sections]


# option parsing with offsets --------------------------------------------

def option_value_span(group: Node, key: str) -> tuple[int, int] | None:
    """Offsets of the value of ``key=value`` inside an option group, braces and blanks trimmed."""
    text = group.tree.text
    start, stop = group.inner_span
    depth = 0
    item_start = start
    for i in range(start, stop + 1):
        ch = text[i] if i < stop else ","
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth = max(0, depth - 1)
        elif ch == "," and depth == 0:
            item = text[item_start:i]
            eq = item.find("=")
            if eq >= 0 and item[:eq].strip() == key:
                vs, ve = item_start + eq + 1, i
                while vs < ve and text[vs].isspace():
                    vs += 1
                while ve > vs and text[ve - 1].isspace():
                    ve -= 1
                if ve - vs >= 2 and text[vs] == "{" and text[ve - 1] == "}":
                    vs, ve = vs + 1, ve - 1
                return vs, ve
            item_start = i + 1
    return None


def _stripped_span(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


# module context -----------------------------------------------------------

class _Context:
    """Module structure of one document, shared by the built-in spotters."""

    def __init__(self, tree: DocumentTree, doc: DocumentUri):
        self.tree = tree
        self.doc = doc
        self.lines = tree.lines
        self.module_of: dict[int, ModuleUri | None] = {}
        self.modules: list[ModuleDecl] = []
        self.diagnostics: list[Diagnostic] = []
        self.synthetic: ModuleDecl | None = None
        self._walk()

    def _walk(self) -> None:
        lines = self.lines
        anon = 0
        orphan = False
        stack: list[tuple[Node, ModuleUri | None]] = [(self.tree.root, None)]
        while stack:
            node, current = stack.pop()
            kind = node.kind
            if kind is NodeKind.ENVIRONMENT:
                self.module_of[id(node)] = current
                if node.name == "module":
                    module_id = node.option("id")
                    id_span = None
                    if module_id:
                        for arg in node.option_args:
                            id_span = option_value_span(arg, "id")
                            if id_span:
                                break
                    else:
                        anon += 1
                        module_id = f"anonymous{anon}"
                    uri = ModuleUri(self.doc, module_id)
                    self.modules.append(ModuleDecl(
                        uri=uri,
                        id=module_id,
                        begin_range=node.begin_range,
                        end_range=node.end_range,
                        body_range=node.range,
                        id_range=lines.range(*id_span) if id_span else None,
                        parent=current,
                    ))
                    current = uri
                elif current is None and node.name in DEFINITION_ENVS:
                    orphan = True
            elif kind is NodeKind.COMMAND:
                self.module_of[id(node)] = current
                if current is None and node.name in ("symdef", "importmodule"):
                    orphan = True
            if node.children:
                stack.extend((c, current) for c in reversed(node.children))
            if node.args:
                stack.extend((a, current) for a in reversed(node.args))
        if orphan:
            end = lines.position(len(self.tree.text))
            origin = SourcePosition(1, 0)
            # keep the file-level module apart from a real module named like the file
            taken = {m.id for m in self.modules}
            synthetic_id = self.doc.stem
            while synthetic_id in taken:
                synthetic_id += "-file"
            uri = ModuleUri(self.doc, synthetic_id)
            self.synthetic = ModuleDecl(
                uri=uri,
                id=synthetic_id,
                begin_range=SourceRange(origin, origin),
                end_range=SourceRange(end, end),
                body_range=SourceRange(origin, end),
                synthetic=True,
            )

    def module_for(self, node: Node) -> ModuleUri | None:
        current = self.module_of.get(id(node))
        if current is None and self.synthetic is not None:
            return self.synthetic.uri
        return current

    def orphan_warning(self, node: Node, what: str) -> None:
        self.diagnostics.append(Diagnostic(
            "warning", "orphan-structure", node.range,
            f"{what} outside any module; attached to file-level module {self.synthetic.id}",
            self.doc,
        ))


def _context(tree: DocumentTree, doc: DocumentUri) -> _Context:
    key = ("context", doc)
    ctx = tree.cache.get(key)
    if ctx is None:
        ctx = tree.cache[key] = _Context(tree, doc)
    return ctx


# built-in spotters --------------------------------------------------------

def spot_modules(tree: DocumentTree, doc: DocumentUri) -> list[ModuleDecl]:
    ctx = _context(tree, doc)
    modules = list(ctx.modules)
    if ctx.synthetic is not None:
        modules.insert(0, ctx.synthetic)
    return modules


def spot_imports(tree: DocumentTree, doc: DocumentUri) -> list[ImportDecl]:
    ctx = _context(tree, doc)
    lines = tree.lines
    out = []
    for node in tree.commands("importmodule"):
        mand = node.mandatory_args
        if not mand:
            ctx.diagnostics.append(Diagnostic(
                "error", "malformed-import", node.range, "\\importmodule without module name", doc))
            continue
        name_span = _stripped_span(tree.text, *mand[0].inner_span)
        path = None
        for key, value in node.options:
            if key in ("", "load"):
                path = value
                break
        importer = ctx.module_for(node)
        if ctx.module_of.get(id(node)) is None:
            ctx.orphan_warning(node, "\\importmodule")
        out.append(ImportDecl(
            importer=importer,
            target_path=path or None,
            target_name=tree.text[name_span[0]:name_span[1]],
            range=node.range,
            name_range=lines.range(*name_span),
        ))
    return out


def spot_symdefs(tree: DocumentTree, doc: DocumentUri) -> list[SymdefDecl]:
    ctx = _context(tree, doc)
    lines = tree.lines
    out = []
    for node in tree.commands("symdef"):
        try:
            arity = arity_of_symdef(node)
        except MalformedSymdef as exc:
            ctx.diagnostics.append(Diagnostic("error", exc.code, node.range, str(exc), doc))
            continue
        mand = node.mandatory_args
        name_span = _stripped_span(tree.text, *mand[0].inner_span)
        name = tree.text[name_span[0]:name_span[1]]
        if not NAME_RE.match(name):
            ctx.diagnostics.append(Diagnostic(
                "error", "invalid-symbol-name", node.range, f"invalid symbol name {name!r}", doc))
            continue
        if ctx.module_of.get(id(node)) is None:
            ctx.orphan_warning(node, f"\\symdef{{{name}}}")
        out.append(SymdefDecl(
            defining_module=ctx.module_for(node),
            name=name,
            arity=arity,
            presentation=mand[1].inner if len(mand) > 1 else "",
            range=node.range,
            name_range=lines.range(*name_span),
        ))
    return out


def spot_uses(tree: DocumentTree, doc: DocumentUri) -> list[SymbolUse]:
    """Every non-structural command occurrence.

    Whether an occurrence really is a symbol use depends on the symdef names
    of the whole workspace, so the filtering happens at resolution time.
    """
    ctx = _context(tree, doc)
    lines = tree.lines
    out = []
    for node in tree.commands():
        name = node.name
        if name in STRUCTURAL_COMMANDS or not name or not name[0].isalpha():
            continue
        out.append(SymbolUse(ctx.module_for(node), name, lines.range(node.start, node.name_end)))
    return out


def spot_definitions(tree: DocumentTree, doc: DocumentUri) -> list[DefinitionBlock]:
    """Definition-like environments.

    Without a ``for=`` key the block is taken to define the first symbol it
    uses that its own module declares (``for_inferred`` is then set).
    """
    ctx = _context(tree, doc)
    lines = tree.lines
    out = []
    local_names: dict[ModuleUri | None, set[str]] | None = None
    for node in tree.environments():
        if node.name not in DEFINITION_ENVS:
            continue
        if ctx.module_of.get(id(node)) is None:
            ctx.orphan_warning(node, node.name)
        module = ctx.module_for(node)
        for_value = node.option("for") or ""
        for_symbols = tuple(s.strip() for s in for_value.split(",") if s.strip())
        inferred = False
        if not for_symbols:
            if local_names is None:
                local_names = {}
                for cmd in tree.commands("symdef"):
                    mand = cmd.mandatory_args
                    if mand:
                        local_names.setdefault(ctx.module_for(cmd), set()).add(mand[0].inner.strip())
            names = local_names.get(module, set())
            for child in node.walk():
                if (child.kind is NodeKind.COMMAND and node.header_end <= child.start < node.footer_start
                        and child.name in names):
                    for_symbols, inferred = (child.name,), True
                    break
        out.append(DefinitionBlock(
            in_module=module,
            id=node.option("id"),
            title=node.option("title"),
            for_symbols=for_symbols,
            for_inferred=inferred,
            kind=node.name,
            range=node.range,
            header_range=node.begin_range,
            footer_range=node.end_range,
            text_range=lines.range(node.header_end, node.footer_start),
            text=plain_text(tree.text[node.header_end:node.footer_start]),
        ))
    return out


def spot_sections(tree: DocumentTree, doc: DocumentUri) -> list[SectionMark]:
    out = []
    for node in tree.commands():
        level = node.name.rstrip("*")
        if level in SECTION_LEVELS and node.mandatory_args:
            out.append(SectionMark(doc, level, node.mandatory_args[0].inner.strip(), node.range))
    return out


Spotter = Callable[[DocumentTree, DocumentUri], Iterable]

BUILTIN_SPOTTERS: dict[str, Spotter] = {
    "modules": spot_modules,
    "imports": spot_imports,
    "symdefs": spot_symdefs,
    "uses": spot_uses,
    "definitions": spot_definitions,
    "sections": spot_sections,
}


@dataclass
class SpotterRegistry:
    custom: dict[str, Spotter] = field(default_factory=dict)

    def register(self, name: str, query: Spotter) -> "SpotterRegistry":
        if name in BUILTIN_SPOTTERS or name in self.custom:
            raise DuplicateSpotterName(f"spotter {name!r} already registered")
        self.custom[name] = query
        return self

    def spotters(self) -> list[tuple[str, Spotter]]:
        return [*BUILTIN_SPOTTERS.items(), *self.custom.items()]


def register_spotter(registry: SpotterRegistry, name: str, query: Spotter) -> SpotterRegistry:
    return registry.register(name, query)


def run_spotters(
    tree: DocumentTree, doc: DocumentUri, registry: SpotterRegistry | None = None
) -> SpotterResult:
    registry = registry or SpotterRegistry()
    tree.cache.pop(("context", doc), None)
    found: dict[str, tuple] = {}
    failures: list[Diagnostic] = []
    for name, spotter in registry.spotters():
        try:
            with paused_gc():
                found[name] = tuple(spotter(tree, doc))
        except Exception as exc:  # a broken spotter must not take the others down
            log.warning("spotter %s failed on %s: %s", name, doc, exc)
            found[name] = ()
            failures.append(Diagnostic(
                "error", "spotter-failure", tree.lines.range(0, 0), f"spotter {name!r} failed: {exc}", doc))
    ctx = _context(tree, doc)
    parse_diags = tuple(
        Diagnostic(d.severity, d.code, d.range, d.message, doc) for d in tree.diagnostics
    )
    return SpotterResult(
        document=doc,
        modules=found["modules"],
        imports=found["imports"],
        symdefs=found["symdefs"],
        uses=found["uses"],
        definitions=found["definitions"],
        sections=found["sections"],
        custom=tuple((name, found[name]) for name in registry.custom),
        diagnostics=parse_diags + tuple(ctx.diagnostics) + tuple(failures),
    )


# resolution ---------------------------------------------------------------

class ModuleTable:
    """Lookup of module declarations by document and by id."""

    def __init__(self, results: Mapping[DocumentUri, SpotterResult]):
        self.by_doc: dict[DocumentUri, dict[str, ModuleUri]] = {}
        self.by_id: dict[str, list[ModuleUri]] = {}
        for doc in sorted(results):
            local: dict[str, ModuleUri] = {}
            for m in results[doc].modules:
                if m.id not in local:
                    local[m.id] = m.uri
                    self.by_id.setdefault(m.id, []).append(m.uri)
            self.by_doc[doc] = local


def import_target_document(importer: DocumentUri, target_path: str) -> DocumentUri:
    path = posixpath.join(importer.directory, target_path)
    if not path.endswith(".tex"):
        path += ".tex"
    return DocumentUri(path)


def resolve_import(imp: ImportDecl, table: ModuleTable) -> ModuleUri:
    """Resolve one import or raise UnresolvedImport / AmbiguousImport."""
    importer_doc = imp.importer.document
    if imp.target_path is not None:
        target_doc = import_target_document(importer_doc, imp.target_path)
        found = table.by_doc.get(target_doc, {}).get(imp.target_name)
        if found is None:
            raise UnresolvedImport(f"no module {imp.target_name!r} in {target_doc}")
        return found
    local = table.by_doc.get(importer_doc, {}).get(imp.target_name)
    if local is not None:
        return local
    candidates = table.by_id.get(imp.target_name, [])
    if not candidates:
        raise UnresolvedImport(f"no module {imp.target_name!r} in the workspace")
    if len(candidates) > 1:
        listed = ", ".join(str(c) for c in candidates)
        raise AmbiguousImport(f"module id {imp.target_name!r} is defined in {listed}")
    return candidates[0]


def resolve_imports(
    results: Mapping[DocumentUri, SpotterResult],
    docs: Iterable[DocumentUri] | None = None,
    table: ModuleTable | None = None,
) -> tuple[dict[DocumentUri, tuple[ImportDecl, ...]], dict[DocumentUri, tuple[Diagnostic, ...]]]:
    """Resolve imports of ``docs`` (default: all); failures become diagnostics."""
    table = table or ModuleTable(results)
    resolved: dict[DocumentUri, tuple[ImportDecl, ...]] = {}
    diags: dict[DocumentUri, tuple[Diagnostic, ...]] = {}
    for doc in sorted(results if docs is None else docs):
        out, problems = [], []
        for imp in results[doc].imports:
            try:
                target = resolve_import(imp, table)
            except (UnresolvedImport, AmbiguousImport) as exc:
                problems.append(Diagnostic("error", exc.code, imp.range, str(exc), doc))
                target = None
            out.append(ImportDecl(imp.importer, imp.target_path, imp.target_name,
                                  imp.range, imp.name_range, target))
        resolved[doc] = tuple(out)
        diags[doc] = tuple(problems)
    return resolved, diags


def resolve_use(
    use: SymbolUse,
    definers: Iterable[ModuleUri],
    reachable: Callable[[ModuleUri, ModuleUri], bool],
) -> tuple[ModuleUri | None, list[ModuleUri]]:
    """Return the unique reachable definer (or None) and all reachable candidates."""
    if use.in_module is None:
        return None, []
    hits = [d for d in definers if reachable(use.in_module, d)]
    return (hits[0] if len(hits) == 1 else None), hits


def resolve_symbol_uses(
    uses: Iterable[SymbolUse],
    definers_of: Callable[[str], list[ModuleUri]],
    reachable: Callable[[ModuleUri, ModuleUri], bool],
    doc: DocumentUri | None = None,
) -> tuple[tuple[SymbolUse, ...], tuple[Diagnostic, ...]]:
    """Resolve command occurrences whose name some symdef defines.

    Occurrences of names no module defines are dropped: they are ordinary
    LaTeX commands, not symbol uses.
    """
    out, diags = [], []
    for use in uses:
        definers = definers_of(use.name)
        if not definers:
            continue
        definer, hits = resolve_use(use, definers, reachable)
        if definer is None:
            if len(hits) > 1:
                listed = ", ".join(str(h) for h in hits)
                diags.append(Diagnostic("warning", "ambiguous-use", use.range,
                                        f"\\{use.name} is defined by several reachable modules: {listed}", doc))
            else:
                diags.append(Diagnostic("warning", "unresolved-use", use.range,
                                        f"\\{use.name} is not defined in or imported into this module", doc))
        out.append(SymbolUse(use.in_module, use.name, use.range, definer))
    return tuple(out), tuple(diags)
