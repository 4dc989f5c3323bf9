"""Import insertion and import minimization."""

from __future__ import annotations

from collections import defaultdict

from ..analysis import Analysis
from ..indexes import TheoryIndex
from ..source_model import Diagnostic, ModuleUri, SourcePosition, SourceRange, TextEdit
from ..spotters import ImportDecl, ModuleDecl, SymbolUse
from .common import AlreadyReachable, import_command, line_indent, removal_range


def insert_import_for(analysis: Analysis, context: ModuleUri, definer: ModuleUri) -> TextEdit:
    """Edit adding ``\\importmodule`` of ``definer`` to ``context``.

    The new line goes after the module's last import, or right after the
    ``\\begin{module}`` header when there is none.
    """
    decl = analysis.module(context)
    analysis.module(definer)
    if analysis.theory.reachable(context, definer):
        raise AlreadyReachable(f"{definer} is already reachable from {context}")
    return import_edit(analysis, decl, import_command(context.document, definer))


def import_edit(analysis: Analysis, decl: ModuleDecl, command: str) -> TextEdit:
    """Insert ``command`` on its own line in the import block of ``decl``."""
    doc = decl.uri.document
    text = analysis.workspace.document(doc).text
    imports = sorted(analysis.module_imports(decl.uri), key=lambda i: i.range)
    if imports:
        anchor = imports[-1].range.end
        indent = line_indent(text, imports[-1].range.start.line)
        return TextEdit(doc, SourceRange(anchor, anchor), "\n" + indent + command)
    if decl.synthetic:
        origin = SourcePosition(1, 0)
        return TextEdit(doc, SourceRange(origin, origin), command + "\n")
    anchor = decl.begin_range.end
    indent = line_indent(text, decl.begin_range.start.line) + "  "
    return TextEdit(doc, SourceRange(anchor, anchor), "\n" + indent + command)


def _resolve(analysis: Analysis, theory: TheoryIndex, use: SymbolUse) -> ModuleUri | None:
    reach = theory.reachable_set(use.in_module)
    hits = [d for d in analysis.symdefs.definers(use.name) if d in reach]
    return hits[0] if len(hits) == 1 else None


class _Checker:
    """Re-resolves every use that could be affected by changing ``m``'s imports."""

    def __init__(self, analysis: Analysis, m: ModuleUri):
        self.analysis = analysis
        self.m = m
        theory = analysis.theory
        reaching = {x for x in theory.nodes if m in theory.reachable_set(x)}
        self.uses = [u for uses in analysis.uses.values() for u in uses if u.in_module in reaching]

    def theory_with(self, remove: list[ModuleUri] = (), add: list[ModuleUri] = ()) -> TheoryIndex:
        theory = self.analysis.theory.copy()
        for t in remove:
            theory.remove_edge(self.m, t)
        for t in add:
            theory.add_edge(self.m, t)
        return theory

    def safe(self, theory: TheoryIndex, must_resolve: list[SymbolUse] = ()) -> bool:
        """No resolved use changes its definer and every ``must_resolve`` use resolves."""
        for use in self.uses:
            if use.resolved_definer is not None and _resolve(self.analysis, theory, use) != use.resolved_definer:
                return False
        return all(_resolve(self.analysis, theory, u) is not None for u in must_resolve)


def _removal(analysis: Analysis, imp: ImportDecl) -> TextEdit:
    text = analysis.workspace.document(imp.importer.document).text
    return TextEdit(imp.importer.document, removal_range(text, imp.range), "")


def minimize_imports(analysis: Analysis, m: ModuleUri) -> list[Diagnostic]:
    """Warnings for imports of ``m`` that can go or be replaced, each with a verified fix."""
    analysis.module(m)
    doc = m.document
    checker = _Checker(analysis, m)
    out: list[Diagnostic] = []
    seen: set[ModuleUri] = set()
    imports = sorted(analysis.module_imports(m), key=lambda i: i.range)
    copies = defaultdict(int)
    for imp in imports:
        copies[imp.resolved] += 1
    for imp in imports:
        target = imp.resolved
        if target is None:
            continue
        # the first copy of a duplicated import is judged as if all copies went
        n = 1 if target in seen else copies[target]
        without = checker.theory_with(remove=[target] * n)
        if target == m:
            code, why = "redundant-import", f"module {m.module_id} imports itself"
        elif target in seen:
            code, why = "redundant-import", f"{target.module_id} is imported more than once"
        elif target in without.reachable_set(m):
            code, why = "redundant-import", f"{target.module_id} is already reachable through other imports"
        else:
            code, why = "unused-import", f"no symbol use needs {target.module_id}"
        seen.add(target)
        if checker.safe(without):
            out.append(Diagnostic("warning", code, imp.range, why, doc, ((_removal(analysis, imp),),)))

    missing: dict[ModuleUri, list[SymbolUse]] = defaultdict(list)
    reach = analysis.theory.reachable_set(m)
    for use in analysis.module_uses(m):
        if use.resolved_definer is not None:
            continue
        definers = analysis.symdefs.definers(use.name)
        if any(d in reach for d in definers) or len(definers) != 1:
            continue
        missing[definers[0]].append(use)
    for needed in sorted(missing):
        uses = missing[needed]
        names = ", ".join(sorted({u.name for u in uses}))
        diag = None
        needed_reach = analysis.theory.reachable_set(needed)
        for imp in imports:
            old = imp.resolved
            if old is None or old == needed or old not in needed_reach:
                continue
            theory = checker.theory_with(remove=[old], add=[needed])
            if checker.safe(theory, uses):
                edit = TextEdit(doc, imp.range, import_command(doc, needed))
                diag = Diagnostic(
                    "warning", "replaceable-import", imp.range,
                    f"import {needed.module_id} (needed for {names}) instead of {old.module_id}, "
                    f"which it already imports", doc, ((edit,),))
                break
        if diag is None and checker.safe(checker.theory_with(add=[needed]), uses):
            diag = Diagnostic(
                "error", "missing-import", uses[0].range,
                f"{names} needs an import of {needed.module_id}", doc,
                ((insert_import_for(analysis, m, needed),),))
        if diag is not None:
            out.append(diag)
    return out


def lint_imports(analysis: Analysis, modules: list[ModuleUri] | None = None) -> list[Diagnostic]:
    if modules is None:
        modules = sorted(analysis.modules())
    return [d for m in modules for d in minimize_imports(analysis, m)]
