"""Read-only views: document outline, theory graph (DOT) and OMDoc skeleton."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from xml.sax.saxutils import escape, quoteattr

from ..analysis import Analysis
from ..source_model import DocumentUri, LineIndex, ModuleUri, SourceRange
from ..spotters import DefinitionBlock, ImportDecl, ModuleDecl, SectionMark, SymdefDecl
from .common import doc_relpath

SECTION_RANK = {"section": 0, "subsection": 1, "subsubsection": 2}


@dataclass
class OutlineNode:
    kind: str
    label: str
    range: SourceRange | None
    target: ModuleUri | None = None
    children: list["OutlineNode"] = field(default_factory=list)

    def count(self) -> int:
        return (self.kind != "root") + sum(c.count() for c in self.children)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "label": self.label,
               "range": str(self.range) if self.range else None}
        if self.target is not None:
            out["target"] = str(self.target)
        out["children"] = [c.to_json() for c in self.children]
        return out

    def render(self, depth: int = 0) -> list[str]:
        lines = []
        if self.kind != "root":
            extra = f" -> {self.target}" if self.target else ""
            lines.append(f"{'  ' * depth}{self.kind} {self.label} [{self.range}]{extra}")
            depth += 1
        for c in self.children:
            lines.extend(c.render(depth))
        return lines


def _node_for(item) -> OutlineNode:
    if isinstance(item, ModuleDecl):
        return OutlineNode("module", item.id, item.body_range)
    if isinstance(item, ImportDecl):
        return OutlineNode("import", item.target_name, item.range, item.resolved)
    if isinstance(item, SymdefDecl):
        return OutlineNode("symdef", item.name, item.range)
    if isinstance(item, DefinitionBlock):
        return OutlineNode(item.kind, item.id or item.title or "(anonymous)", item.range)
    assert isinstance(item, SectionMark)
    return OutlineNode(item.level, item.title, item.range)


def outline(analysis: Analysis, doc: DocumentUri) -> OutlineNode:
    """Nest sections, modules, imports, symdefs and definitions of ``doc`` by source position.

    A section spans up to the next section of the same or higher level inside
    the same module or definition (or to the end of that container).
    """
    result = analysis.result(doc)
    text = analysis.workspace.document(doc).text
    eof = LineIndex(text).position(len(text))
    containers = [m for m in result.modules if not m.synthetic] + list(result.definitions)

    def container_of(rng: SourceRange):
        best = None
        for c in containers:
            span = c.body_range if isinstance(c, ModuleDecl) else c.range
            if span.contains(rng) and span != rng and (best is None or best[1].contains(span)):
                best = (c, span)
        return best

    spans = []
    sections = sorted(result.sections, key=lambda s: s.range)
    for i, sec in enumerate(sections):
        home = container_of(sec.range)
        end = home[1].end if home else eof
        for later in sections[i + 1:]:
            if container_of(later.range) == home and SECTION_RANK[later.level] <= SECTION_RANK[sec.level]:
                end = later.range.start
                break
        spans.append((SourceRange(sec.range.start, max(end, sec.range.end)), sec))
    for item in result.structures():
        if isinstance(item, SectionMark):
            continue
        span = item.body_range if isinstance(item, ModuleDecl) else item.range
        spans.append((span, item))

    # containers first when ranges start together
    order = {SectionMark: 0, ModuleDecl: 1, DefinitionBlock: 2, ImportDecl: 3, SymdefDecl: 3}
    spans.sort(key=lambda e: (e[0].start, _rev(e[0]), order[type(e[1])]))
    root = OutlineNode("root", str(doc), None)
    stack: list[tuple[SourceRange, OutlineNode]] = []
    for span, item in spans:
        node = _node_for(item)
        while stack and not stack[-1][0].contains(span):
            stack.pop()
        (stack[-1][1].children if stack else root.children).append(node)
        stack.append((span, node))
    return root


def _rev(rng: SourceRange) -> tuple[int, int]:
    return (-rng.end.line, -rng.end.column)


def _dot_quote(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)


def export_theory_graph(analysis: Analysis) -> str:
    """Deterministic DOT digraph of modules and resolved imports.

    Nodes are named by module id when the id is unique in the workspace and
    by the full ``doc#id`` otherwise.  Unresolved imports become dashed edges
    to placeholder nodes.
    """
    modules = sorted(analysis.theory.nodes)
    id_count: dict[str, int] = {}
    for m in modules:
        id_count[m.module_id] = id_count.get(m.module_id, 0) + 1

    def name(m: ModuleUri) -> str:
        return m.module_id if id_count[m.module_id] == 1 else str(m)

    lines = ["digraph theories {"]
    for m in modules:
        lines.append(f"  {_dot_quote(name(m))} [label={_dot_quote(m.module_id)}, "
                     f"tooltip={_dot_quote(m.document.value)}];")
    for a, b in analysis.theory.edges():
        lines.append(f"  {_dot_quote(name(a))} -> {_dot_quote(name(b))};")
    missing = sorted({(imp.importer, imp.target_path or "", imp.target_name)
                      for imps in analysis.imports.values() for imp in imps if imp.resolved is None})
    placeholders = sorted({(p, t) for _, p, t in missing})
    for path, target in placeholders:
        label = f"{path}#{target}" if path else target
        lines.append(f"  {_dot_quote('?' + label)} [label={_dot_quote(target + '?')}, style=dashed];")
    for importer, path, target in missing:
        label = f"{path}#{target}" if path else target
        lines.append(f"  {_dot_quote(name(importer))} -> {_dot_quote('?' + label)} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _omdoc_ref(m: ModuleUri, imp: ImportDecl) -> str:
    if imp.target_path:
        return f"{imp.target_path}.omdoc#{imp.target_name}"
    if imp.resolved is not None and imp.resolved.document != m.document:
        return f"{doc_relpath(m.document, imp.resolved.document)}.omdoc#{imp.target_name}"
    return f"#{imp.target_name}"


def export_omdoc_skeleton(analysis: Analysis, m: ModuleUri) -> str:
    """OMDoc-shaped XML for one module: imports, symbols with notations, definitions."""
    analysis.module(m)
    text = analysis.workspace.document(m.document).text
    lines_ix = LineIndex(text)
    out = ['<?xml version="1.0" encoding="UTF-8"?>', f"<theory xml:id={quoteattr(m.module_id)}>"]
    for imp in sorted(analysis.module_imports(m), key=lambda i: i.range):
        out.append(f"  <imports from={quoteattr(_omdoc_ref(m, imp))}/>")
    for s in sorted(analysis.module_symdefs(m), key=lambda s: s.range):
        out.append(f"  <symbol xml:id={quoteattr(s.name)}/>")
        out.append("  <notation>")
        out.append("    <prototype>")
        out.append(f"      <OMS cd={quoteattr(m.module_id)} name={quoteattr(s.name)}/>")
        out.append("    </prototype>")
        out.append(f"    <rendering>{escape(s.presentation)}</rendering>")
        out.append("  </notation>")
    for d in sorted(analysis.module_definitions(m), key=lambda d: d.range):
        attrs = ""
        if d.id:
            attrs += f" xml:id={quoteattr(d.id)}"
        if d.for_symbols:
            attrs += f" for={quoteattr(' '.join(d.for_symbols))}"
        if d.kind != "definition":
            attrs += f" type={quoteattr(d.kind)}"
        out.append(f"  <definition{attrs}>")
        if d.title:
            out.append(f'    <meta property="dc:title">{escape(d.title)}</meta>')
        body = " ".join(lines_ix.slice(d.text_range).split())
        if body:
            out.append(f"    {escape(body)}")
        out.append("  </definition>")
    out.append("</theory>")
    return "\n".join(out) + "\n"
