"""Rename and split refactorings, returned as edit plans."""

from __future__ import annotations

import re

from ..analysis import Analysis
from ..source_model import DocumentUri, LineIndex, ModuleUri, SourceRange, TextEdit
from ..spotters import NAME_RE, DefinitionBlock, SymdefDecl
from .common import (
    IdCollision,
    InvalidName,
    NameCollision,
    RangeNotAStructure,
    RenamePlan,
    UnknownSymbol,
    end_of,
    import_command,
    removal_range,
)
from .imports import import_edit

MODULE_ID_RE = re.compile(r"[^\s,=\[\]{}#%\\]+\Z")


def rename_symbol(analysis: Analysis, definer: ModuleUri, old: str, new: str) -> RenamePlan:
    """Rename the symbol ``old`` of ``definer`` and every command that resolves to it."""
    analysis.module(definer)
    decls = [s for s in analysis.module_symdefs(definer) if s.name == old]
    if not decls:
        raise UnknownSymbol(f"{definer} defines no symbol {old!r}")
    if not NAME_RE.match(new):
        raise InvalidName(f"{new!r} is not a valid command name")
    occurrences = analysis.refs.occurrences(definer, old)
    plan = RenamePlan(touched_count=len(decls) + len(occurrences))
    if new == old:
        return plan

    theory = analysis.theory
    seeing = sorted(x for x in theory.nodes if definer in theory.reachable_set(x))
    clashes = set()
    other_new = [d for d in analysis.symdefs.definers(new)]
    other_old = [d for d in analysis.symdefs.definers(old) if d != definer]
    raw_new = {u.in_module for r in analysis.results.values() for u in r.uses if u.name == new}
    for x in seeing:
        reach = theory.reachable_set(x)
        if any(d in reach for d in other_new) or x in raw_new:
            clashes.add(x)
        elif any(d in reach for d in other_old) and any(u.name == old for u in analysis.module_uses(x)):
            clashes.add(x)
    if clashes:
        raise NameCollision(
            f"renaming {old} to {new} would change the meaning of commands in "
            + ", ".join(str(c) for c in sorted(clashes)), sorted(clashes))

    for decl in decls:
        plan.add(TextEdit(definer.document, decl.name_range, new))
    for occ in occurrences:
        plan.add(TextEdit(occ.document, occ.range, "\\" + new))
    return plan.finalize()


def rename_module(analysis: Analysis, m: ModuleUri, new_id: str) -> RenamePlan:
    """Change a module id and every import that resolves to the module."""
    decl = analysis.module(m)
    if decl.synthetic:
        raise InvalidName(f"{m} is a file-level module without source id; it cannot be renamed")
    if not new_id or not MODULE_ID_RE.match(new_id):
        raise InvalidName(f"{new_id!r} is not a valid module id")
    importers = [i for imps in analysis.imports.values() for i in imps if i.resolved == m]
    plan = RenamePlan(touched_count=1 + len(importers))
    if new_id == m.module_id:
        return plan
    taken = sorted(u for u in analysis.modules() if u.module_id == new_id)
    if taken:
        raise IdCollision(f"module id {new_id!r} already used by " + ", ".join(map(str, taken)))
    if decl.id_range is None:
        raise InvalidName(f"{m} has no id option to rewrite")
    plan.add(TextEdit(m.document, decl.id_range, new_id))
    for imp in importers:
        plan.add(TextEdit(imp.importer.document, imp.name_range, new_id))
    return plan.finalize()


def _moved_structures(analysis: Analysis, m: ModuleUri,
                      ranges: list[SourceRange]) -> list[SymdefDecl | DefinitionBlock]:
    if not ranges:
        raise RangeNotAStructure("nothing selected to move")
    candidates = {s.range: s for s in analysis.module_symdefs(m)}
    candidates.update({d.range: d for d in analysis.module_definitions(m)})
    picked = {}
    for rng in ranges:
        if rng not in candidates:
            raise RangeNotAStructure(f"{rng} is not a symdef or definition of {m}")
        picked[rng] = candidates[rng]
    return [picked[r] for r in sorted(picked)]


def minimal_cover(analysis: Analysis, required: set[ModuleUri]) -> list[ModuleUri]:
    """Drop every module reachable from another kept one."""
    kept = sorted(required)
    for d in list(kept):
        if any(o != d and d in analysis.theory.reachable_set(o) for o in kept):
            kept.remove(d)
    return kept


def split_module(analysis: Analysis, m: ModuleUri, move_ranges: list[SourceRange],
                 new_id: str, new_doc: DocumentUri | str) -> RenamePlan:
    """Move symdefs/definitions of ``m`` into a new module ``new_id`` in ``new_doc``."""
    new_doc = new_doc if isinstance(new_doc, DocumentUri) else DocumentUri(new_doc)
    decl = analysis.module(m)
    moved = _moved_structures(analysis, m, list(move_ranges))
    if not new_id or not MODULE_ID_RE.match(new_id):
        raise InvalidName(f"{new_id!r} is not a valid module id")
    if any(u.module_id == new_id for u in analysis.modules()):
        raise IdCollision(f"module id {new_id!r} is already in use")
    for a, b in zip(moved, moved[1:]):
        if b.range.start < a.range.end:
            raise RangeNotAStructure(f"selected ranges {a.range} and {b.range} overlap")

    new_uri = ModuleUri(new_doc, new_id)
    moved_names = {s.name for s in moved if isinstance(s, SymdefDecl)}

    def inside(rng: SourceRange) -> bool:
        return any(s.range.contains(rng) for s in moved)

    doc_uses = analysis.uses.get(m.document, ())
    required = set()
    for use in doc_uses:
        if use.in_module != m or not inside(use.range) or use.resolved_definer is None:
            continue
        if use.resolved_definer == m and use.name in moved_names:
            continue
        required.add(use.resolved_definer)
    imports = minimal_cover(analysis, required)

    text = analysis.workspace.document(m.document).text
    lines = LineIndex(text)
    body = [f"\\begin{{module}}[id={new_id}]"]
    body += ["  " + import_command(new_doc, t) for t in imports]
    body += ["  " + lines.slice(s.range) for s in moved]
    body.append("\\end{module}")
    module_text = "\n".join(body) + "\n"

    plan = RenamePlan(touched_count=len(moved))
    for s in moved:
        plan.add(TextEdit(m.document, removal_range(text, s.range), ""))

    still_used = any(
        u.resolved_definer == m and u.name in moved_names
        and not (d == m.document and inside(u.range))
        for d, uses in analysis.uses.items() for u in uses)
    if still_used:
        plan.add(import_edit(analysis, decl, import_command(m.document, new_uri)))

    if new_doc in analysis.workspace.documents:
        existing = analysis.workspace.document(new_doc).text
        pos = end_of(existing)
        sep = "" if not existing or existing.endswith("\n") else "\n"
        plan.add(TextEdit(new_doc, SourceRange(pos, pos), sep + module_text))
    else:
        origin = end_of("")
        plan.add(TextEdit(new_doc, SourceRange(origin, origin), module_text))
        plan.created = (new_doc,)
    return plan.finalize()

