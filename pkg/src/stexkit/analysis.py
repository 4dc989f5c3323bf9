"""Workspace-wide analysis state: spotted documents, resolutions and indexes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .indexes import (
    RefIndex,
    SymdefIndex,
    TheoryIndex,
    UnknownModule,
    build_theory,
    build_symdef_index,
)
from .parser import DocumentTree, parse
from .source_model import (
    Diagnostic,
    DocumentUri,
    ModuleUri,
    SourcePosition,
    StexError,
    Workspace,
)
from .spotters import (
    DefinitionBlock,
    ImportDecl,
    ModuleDecl,
    ModuleTable,
    SpotterRegistry,
    SpotterResult,
    SymbolUse,
    SymdefDecl,
    resolve_imports,
    resolve_symbol_uses,
    run_spotters,
)

log = logging.getLogger(__name__)


class UnanalyzedDocument(StexError):
    code = "unanalyzed-document"


class InconsistentDelta(StexError):
    code = "inconsistent-delta"


@dataclass
class Analysis:
    """Everything known about a workspace after spotting and resolution.

    ``results`` holds the raw per-document spotter output; ``imports`` and
    ``uses`` hold the resolved views (uses restricted to names some symdef
    defines).
    """

    workspace: Workspace
    registry: SpotterRegistry = field(default_factory=SpotterRegistry)
    results: dict[DocumentUri, SpotterResult] = field(default_factory=dict)
    imports: dict[DocumentUri, tuple[ImportDecl, ...]] = field(default_factory=dict)
    uses: dict[DocumentUri, tuple[SymbolUse, ...]] = field(default_factory=dict)
    import_diagnostics: dict[DocumentUri, tuple[Diagnostic, ...]] = field(default_factory=dict)
    use_diagnostics: dict[DocumentUri, tuple[Diagnostic, ...]] = field(default_factory=dict)
    theory: TheoryIndex = field(default_factory=TheoryIndex)
    symdefs: SymdefIndex = field(default_factory=SymdefIndex)
    refs: RefIndex = field(default_factory=RefIndex)

    @classmethod
    def build(cls, workspace: Workspace, registry: SpotterRegistry | None = None) -> "Analysis":
        analysis = cls(workspace, registry or SpotterRegistry())
        analysis.rebuild()
        return analysis

    # construction -------------------------------------------------------
    def spot(self, doc: DocumentUri) -> tuple[DocumentTree, SpotterResult]:
        tree = parse(self.workspace.document(doc).text)
        return tree, run_spotters(tree, doc, self.registry)

    def rebuild(self) -> None:
        self.results = {doc: self.spot(doc)[1] for doc in sorted(self.workspace.documents)}
        self._resolve_all()

    def _resolve_all(self) -> None:
        self.imports, self.import_diagnostics = resolve_imports(self.results)
        self.theory = build_theory(self.results, self.imports)
        self.symdefs = build_symdef_index(self.results)
        self.uses, self.use_diagnostics = {}, {}
        self.refs = RefIndex()
        for doc in sorted(self.results):
            self._resolve_uses(doc)
            self.refs.set_document(doc, self.uses[doc])

    def _resolve_uses(self, doc: DocumentUri) -> None:
        uses, diags = resolve_symbol_uses(
            self.results[doc].uses, self.symdefs.definers, self.theory.reachable, doc)
        self.uses[doc] = uses
        self.use_diagnostics[doc] = diags

    # delta protocol -----------------------------------------------------
    def apply_delta(self, doc: DocumentUri, old: SpotterResult | None, new: SpotterResult | None) -> None:
        """Replace ``doc``'s records (``new=None`` removes the document)."""
        try:
            self._apply_delta(doc, old, new)
        except InconsistentDelta as exc:
            log.warning("%s; rebuilding indexes", exc)
            if new is None:
                self.results.pop(doc, None)
            else:
                self.results[doc] = new
            self._resolve_all()

    def _apply_delta(self, doc: DocumentUri, old: SpotterResult | None, new: SpotterResult | None) -> None:
        if self.results.get(doc) != old:
            raise InconsistentDelta(f"stale delta for {doc}")
        if old == new:
            return
        empty = SpotterResult(doc)
        old_r, new_r = old or empty, new or empty
        old_modules = {m.uri for m in old_r.modules}
        new_modules = {m.uri for m in new_r.modules}
        old_defs = {(s.name, s.defining_module) for s in old_r.symdefs}
        new_defs = {(s.name, s.defining_module) for s in new_r.symdefs}
        changed_names = {name for name, _ in old_defs ^ new_defs}

        if new is None:
            del self.results[doc]
        else:
            self.results[doc] = new
        for decl in old_r.symdefs:
            self.symdefs.remove(decl)
        for decl in new_r.symdefs:
            self.symdefs.add(decl)

        edges_before = self.theory.snapshot()[1]
        for m in old_modules - new_modules:
            self.theory.remove_node(m)
        for m in new_modules - old_modules:
            self.theory.add_node(m)
        if old_modules != new_modules:
            import_docs = set(self.results) | {doc}
        else:
            import_docs = {doc}
        table = ModuleTable(self.results)
        for d in sorted(import_docs):
            for imp in self.imports.pop(d, ()):
                if imp.resolved is not None:
                    self.theory.remove_edge(imp.importer, imp.resolved)
            self.import_diagnostics.pop(d, None)
        live = sorted(d for d in import_docs if d in self.results)
        resolved, diags = resolve_imports(self.results, live, table)
        self.imports.update(resolved)
        self.import_diagnostics.update(diags)
        for d in live:
            for imp in resolved[d]:
                if imp.resolved is not None:
                    self.theory.add_edge(imp.importer, imp.resolved)
        theory_changed = self.theory.snapshot()[1] != edges_before

        if theory_changed:
            use_docs = set(self.results)
        else:
            use_docs = {d for d, r in self.results.items()
                        if changed_names and any(u.name in changed_names for u in r.uses)}
            use_docs.add(doc)
        for d in sorted(use_docs):
            if d in self.results:
                self._resolve_uses(d)
                self.refs.set_document(d, self.uses[d])
            else:
                self.uses.pop(d, None)
                self.use_diagnostics.pop(d, None)
                self.refs.remove_document(d)

    def reanalyze(self, doc: DocumentUri) -> tuple[DocumentTree, SpotterResult]:
        tree, result = self.spot(doc)
        self.apply_delta(doc, self.results.get(doc), result)
        return tree, result

    # comparison ---------------------------------------------------------
    def snapshot(self) -> tuple:
        """Comparable image of all analysis state, used by equivalence tests."""
        docs = sorted(self.results)
        return (
            tuple((d, self.results[d]) for d in docs),
            tuple((d, self.imports.get(d, ())) for d in docs),
            tuple((d, self.uses.get(d, ())) for d in docs),
            tuple((d, self.diagnostics(d)) for d in docs),
            self.theory.snapshot(),
            self.symdefs.snapshot(),
            self.refs.snapshot(),
        )

    # queries ------------------------------------------------------------
    def result(self, doc: DocumentUri | str) -> SpotterResult:
        key = doc if isinstance(doc, DocumentUri) else DocumentUri(doc)
        try:
            return self.results[key]
        except KeyError:
            raise UnanalyzedDocument(f"document {key} has not been analyzed") from None

    def diagnostics(self, doc: DocumentUri) -> tuple[Diagnostic, ...]:
        return (self.results[doc].diagnostics
                + self.import_diagnostics.get(doc, ())
                + self.use_diagnostics.get(doc, ()))

    def all_diagnostics(self) -> list[Diagnostic]:
        return [d for doc in sorted(self.results) for d in self.diagnostics(doc)]

    def modules(self) -> dict[ModuleUri, ModuleDecl]:
        out: dict[ModuleUri, ModuleDecl] = {}
        for doc in sorted(self.results):
            for m in self.results[doc].modules:
                out.setdefault(m.uri, m)
        return out

    def module(self, uri: ModuleUri) -> ModuleDecl:
        res = self.results.get(uri.document)
        if res is not None:
            for m in res.modules:
                if m.uri == uri:
                    return m
        raise UnknownModule(f"unknown module {uri}")

    def find_module(self, text: str) -> ModuleUri:
        """Accept ``doc#id`` or a bare id that is unique in the workspace."""
        if "#" in text:
            uri = ModuleUri.parse(text)
            self.module(uri)
            return uri
        hits = [m for m in self.modules() if m.module_id == text]
        if len(hits) != 1:
            raise UnknownModule(f"module id {text!r} matches {len(hits)} modules")
        return hits[0]

    def module_imports(self, uri: ModuleUri) -> list[ImportDecl]:
        return [i for i in self.imports.get(uri.document, ()) if i.importer == uri]

    def module_symdefs(self, uri: ModuleUri) -> list[SymdefDecl]:
        res = self.results.get(uri.document)
        return [s for s in res.symdefs if s.defining_module == uri] if res else []

    def module_uses(self, uri: ModuleUri) -> list[SymbolUse]:
        return [u for u in self.uses.get(uri.document, ()) if u.in_module == uri]

    def module_definitions(self, uri: ModuleUri) -> list[DefinitionBlock]:
        res = self.results.get(uri.document)
        return [d for d in res.definitions if d.in_module == uri] if res else []

    def module_at(self, doc: DocumentUri, pos: SourcePosition) -> ModuleDecl | None:
        """Innermost real (non-synthetic) module whose body contains ``pos``."""
        best = None
        for m in self.result(doc).modules:
            if m.synthetic:
                continue
            if m.body_range.start <= pos <= m.body_range.end:
                if best is None or best.body_range.contains(m.body_range):
                    best = m
        return best

    def resolve_name(self, module: ModuleUri, name: str) -> ModuleUri | None:
        """Definer a use of ``\\name`` inside ``module`` would resolve to."""
        hits = [d for d in self.symdefs.definers(name) if self.theory.reachable(module, d)]
        return hits[0] if len(hits) == 1 else None

    def unresolved_uses(self, module: ModuleUri | None = None) -> list[SymbolUse]:
        return [u for uses in self.uses.values() for u in uses
                if u.resolved_definer is None and (module is None or u.in_module == module)]


def analyze(workspace: Workspace, registry: SpotterRegistry | None = None) -> Analysis:
    return Analysis.build(workspace, registry)


def apply_index_delta(analysis: Analysis, doc: DocumentUri, old: SpotterResult | None,
                      new: SpotterResult | None) -> Analysis:
    analysis.apply_delta(doc, old, new)
    return analysis
