"""Workspace indexes: the import graph, the symbol-name trie and the reference table."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .source_model import DocumentUri, ModuleUri, SourceRange, StexError
from .spotters import ImportDecl, SpotterResult, SymbolUse, SymdefDecl


class UnknownModule(StexError):
    code = "unknown-module"


class TheoryIndex:
    """Directed import graph; edges run importer -> imported.

    Parallel edges (a module importing the same target twice) are counted so
    that removing one import keeps the other's edge.  Cycles and self-loops
    are allowed.
    """

    def __init__(self) -> None:
        self.nodes: set[ModuleUri] = set()
        self._succ: dict[ModuleUri, Counter] = {}
        self._pred: dict[ModuleUri, Counter] = {}
        self._reach: dict[ModuleUri, frozenset[ModuleUri]] = {}

    def add_node(self, m: ModuleUri) -> None:
        if m not in self.nodes:
            self.nodes.add(m)
            self._succ[m] = Counter()
            self._pred[m] = Counter()
            self._reach.clear()

    def remove_node(self, m: ModuleUri) -> None:
        if m not in self.nodes:
            return
        for t in self._succ.pop(m):
            if t != m:
                del self._pred[t][m]
        for s in self._pred.pop(m):
            if s != m:
                del self._succ[s][m]
        self.nodes.discard(m)
        self._reach.clear()

    def add_edge(self, a: ModuleUri, b: ModuleUri) -> None:
        if a not in self.nodes or b not in self.nodes:
            raise UnknownModule(f"edge {a} -> {b} has an unknown endpoint")
        self._succ[a][b] += 1
        self._pred[b][a] += 1
        self._reach.clear()

    def remove_edge(self, a: ModuleUri, b: ModuleUri) -> None:
        """Drop one copy of the edge; a missing edge is ignored."""
        succ = self._succ.get(a)
        if not succ or not succ.get(b):
            return
        succ[b] -= 1
        self._pred[b][a] -= 1
        if not succ[b]:
            del succ[b]
            del self._pred[b][a]
        self._reach.clear()

    def copy(self) -> "TheoryIndex":
        other = TheoryIndex()
        other.nodes = set(self.nodes)
        other._succ = {k: Counter(v) for k, v in self._succ.items()}
        other._pred = {k: Counter(v) for k, v in self._pred.items()}
        return other

    def _check(self, m: ModuleUri) -> None:
        if m not in self.nodes:
            raise UnknownModule(f"unknown module {m}")

    def imports_of(self, m: ModuleUri) -> list[ModuleUri]:
        self._check(m)
        return sorted(self._succ[m])

    def importers_of(self, m: ModuleUri) -> list[ModuleUri]:
        self._check(m)
        return sorted(self._pred[m])

    def reachable_set(self, m: ModuleUri) -> frozenset[ModuleUri]:
        """All modules reachable from ``m``, including ``m`` itself."""
        cached = self._reach.get(m)
        if cached is not None:
            return cached
        self._check(m)
        seen = {m}
        stack = [m]
        succ = self._succ
        while stack:
            for t in succ[stack.pop()]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        result = self._reach[m] = frozenset(seen)
        return result

    def reachable(self, a: ModuleUri, b: ModuleUri) -> bool:
        self._check(b)
        return b in self.reachable_set(a)

    def edges(self) -> list[tuple[ModuleUri, ModuleUri]]:
        return sorted((a, b) for a, succ in self._succ.items() for b in succ)

    def edge_count(self) -> int:
        return sum(len(s) for s in self._succ.values())

    def snapshot(self) -> tuple:
        multi = sorted((a, b, n) for a, succ in self._succ.items() for b, n in succ.items())
        return tuple(sorted(self.nodes)), tuple(multi)


class _TrieNode:
    __slots__ = ("children", "entries")

    def __init__(self) -> None:
        self.children: dict[str, _TrieNode] = {}
        self.entries: set[SymdefDecl] = set()


class SymdefIndex:
    """Prefix tree from symbol names to the symdefs declaring them."""

    def __init__(self) -> None:
        self.root = _TrieNode()
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, decl: SymdefDecl) -> None:
        node = self.root
        for ch in decl.name:
            nxt = node.children.get(ch)
            if nxt is None:
                nxt = node.children[ch] = _TrieNode()
            node = nxt
        if decl not in node.entries:
            node.entries.add(decl)
            self._size += 1

    def remove(self, decl: SymdefDecl) -> None:
        path = [self.root]
        for ch in decl.name:
            nxt = path[-1].children.get(ch)
            if nxt is None:
                return
            path.append(nxt)
        if decl not in path[-1].entries:
            return
        path[-1].entries.discard(decl)
        self._size -= 1
        for depth in range(len(decl.name), 0, -1):
            node = path[depth]
            if node.entries or node.children:
                break
            del path[depth - 1].children[decl.name[depth - 1]]

    def _find(self, prefix: str) -> _TrieNode | None:
        node = self.root
        for ch in prefix:
            node = node.children.get(ch)
            if node is None:
                return None
        return node

    def _iter(self, node: _TrieNode) -> Iterator[SymdefDecl]:
        stack = [node]
        while stack:
            n = stack.pop()
            yield from n.entries
            stack.extend(n.children.values())

    def decls_with_prefix(self, prefix: str) -> list[SymdefDecl]:
        node = self._find(prefix)
        if node is None:
            return []
        return sorted(self._iter(node), key=lambda d: (d.name, d.defining_module, d.range))

    def prefix_query(self, prefix: str) -> list[tuple[str, ModuleUri]]:
        node = self._find(prefix)
        if node is None:
            return []
        return sorted({(d.name, d.defining_module) for d in self._iter(node)})

    def decls(self, name: str) -> list[SymdefDecl]:
        node = self._find(name)
        if node is None:
            return []
        return sorted(node.entries, key=lambda d: (d.defining_module, d.range))

    def definers(self, name: str) -> list[ModuleUri]:
        node = self._find(name)
        if node is None:
            return []
        return sorted({d.defining_module for d in node.entries})

    def __contains__(self, name: str) -> bool:
        node = self._find(name)
        return node is not None and bool(node.entries)

    def snapshot(self) -> tuple:
        return tuple(sorted(self._iter(self.root), key=lambda d: (d.name, d.defining_module, d.range)))


@dataclass(frozen=True, order=True)
class Occurrence:
    document: DocumentUri
    range: SourceRange
    occurrence_module: ModuleUri
    defining_module: ModuleUri
    name: str


class RefIndex:
    """(occurrence module, defining module, name) triples for every resolved use."""

    def __init__(self) -> None:
        self._by_key: dict[tuple[ModuleUri, str], set[Occurrence]] = {}
        self._by_doc: dict[DocumentUri, tuple[Occurrence, ...]] = {}

    def set_document(self, doc: DocumentUri, uses: Iterable[SymbolUse]) -> None:
        self.remove_document(doc)
        occs = tuple(
            Occurrence(doc, u.range, u.in_module, u.resolved_definer, u.name)
            for u in uses
            if u.resolved_definer is not None and u.in_module is not None
        )
        if occs:
            self._by_doc[doc] = occs
        for occ in occs:
            self._by_key.setdefault((occ.defining_module, occ.name), set()).add(occ)

    def remove_document(self, doc: DocumentUri) -> None:
        for occ in self._by_doc.pop(doc, ()):
            key = (occ.defining_module, occ.name)
            bucket = self._by_key[key]
            bucket.discard(occ)
            if not bucket:
                del self._by_key[key]

    def occurrences(self, defining_module: ModuleUri, name: str) -> list[Occurrence]:
        return sorted(self._by_key.get((defining_module, name), ()))

    def triples(self) -> list[tuple[ModuleUri, ModuleUri, str]]:
        return sorted({(o.occurrence_module, o.defining_module, o.name)
                       for occs in self._by_doc.values() for o in occs})

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_doc.values())

    def all(self) -> list[Occurrence]:
        return sorted(o for occs in self._by_doc.values() for o in occs)

    def snapshot(self) -> tuple:
        return tuple(self.all())


def build_theory(
    results: Mapping[DocumentUri, SpotterResult],
    imports: Mapping[DocumentUri, Iterable[ImportDecl]],
) -> TheoryIndex:
    theory = TheoryIndex()
    for result in results.values():
        for m in result.modules:
            theory.add_node(m.uri)
    for doc_imports in imports.values():
        for imp in doc_imports:
            if imp.resolved is not None:
                theory.add_edge(imp.importer, imp.resolved)
    return theory


def build_symdef_index(results: Mapping[DocumentUri, SpotterResult]) -> SymdefIndex:
    index = SymdefIndex()
    for result in results.values():
        for decl in result.symdefs:
            index.add(decl)
    return index


def build_indexes(
    results: Mapping[DocumentUri, SpotterResult],
    imports: Mapping[DocumentUri, Iterable[ImportDecl]],
    uses: Mapping[DocumentUri, Iterable[SymbolUse]],
) -> tuple[TheoryIndex, SymdefIndex, RefIndex]:
    """Populate all three indexes from spotted and resolved records.

    Unresolved imports and uses are left out; they only exist as diagnostics.
    """
    refs = RefIndex()
    for doc, doc_uses in uses.items():
        refs.set_document(doc, doc_uses)
    return build_theory(results, imports), build_symdef_index(results), refs


def dump_indexes(theory: TheoryIndex, symdefs: SymdefIndex, refs: RefIndex) -> str:
    """Line-oriented debugging dump; one record per line."""
    lines = [f"module {m}" for m in sorted(theory.nodes)]
    lines += [f"import {a} -> {b}" for a, b in theory.edges()]
    lines += [f"symdef {d.name} {d.defining_module} {d.range}" for d in symdefs.snapshot()]
    lines += [f"ref {o.name} {o.defining_module} in {o.occurrence_module} at {o.document}:{o.range}"
              for o in refs.all()]
    return "\n".join(lines) + ("\n" if lines else "")
