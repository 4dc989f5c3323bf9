import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import BASE, REALS, SETS, analyze_texts, rebuilt
from stexkit.indexes import SymdefIndex, TheoryIndex, UnknownModule, dump_indexes
from stexkit.source_model import DocumentUri, ModuleUri, SourceRange, TextEdit, apply_text_edit
from stexkit.spotters import SymdefDecl


def mod(i: int) -> ModuleUri:
    return ModuleUri(DocumentUri(f"m{i}.tex"), f"m{i}")


def dfs(edges, a):
    """Reference reachability: plain recursive search over an edge list."""
    seen = set()

    def go(x):
        if x in seen:
            return
        seen.add(x)
        for s, t in edges:
            if s == x:
                go(t)
    go(a)
    return seen


graphs = st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=30)))


@settings(max_examples=200)
@given(graphs)
def test_reachability_matches_dfs(graph):
    n, edges = graph
    theory = TheoryIndex()
    for i in range(n):
        theory.add_node(mod(i))
    for a, b in edges:
        theory.add_edge(mod(a), mod(b))
    for a in range(n):
        expected = {mod(x) for x in dfs(edges, a)}
        assert theory.reachable_set(mod(a)) == expected
        for b in range(n):
            assert theory.reachable(mod(a), mod(b)) == (mod(b) in expected)


@settings(max_examples=100)
@given(graphs, st.data())
def test_edge_removal_keeps_parallel_copies(graph, data):
    n, edges = graph
    theory = TheoryIndex()
    for i in range(n):
        theory.add_node(mod(i))
    for a, b in edges:
        theory.add_edge(mod(a), mod(b))
    theory.reachable_set(mod(0))  # warm the cache so removal must invalidate it
    remaining = list(edges)
    for _ in range(data.draw(st.integers(0, len(edges)))):
        e = remaining.pop(data.draw(st.integers(0, len(remaining) - 1)))
        theory.remove_edge(mod(e[0]), mod(e[1]))
    for a in range(n):
        assert theory.reachable_set(mod(a)) == {mod(x) for x in dfs(remaining, a)}


def test_self_loop_and_cycle():
    theory = TheoryIndex()
    a, b = mod(0), mod(1)
    theory.add_node(a)
    theory.add_node(b)
    theory.add_edge(a, a)
    assert theory.reachable_set(a) == {a}
    theory.add_edge(a, b)
    theory.add_edge(b, a)
    assert theory.reachable(b, a) and theory.reachable(a, b)
    theory.remove_node(a)
    assert theory.edges() == [] and theory.reachable_set(b) == {b}


def test_unknown_module_errors():
    theory = TheoryIndex()
    theory.add_node(mod(0))
    with pytest.raises(UnknownModule):
        theory.add_edge(mod(0), mod(1))
    with pytest.raises(UnknownModule):
        theory.reachable_set(mod(5))
    theory.remove_edge(mod(0), mod(1))  # a missing edge is ignored


def decl(name: str, i: int, line: int = 1) -> SymdefDecl:
    rng = SourceRange.of(line, 0, line, 1)
    return SymdefDecl(mod(i), name, 0, "", rng, rng)


names = st.lists(st.tuples(st.text("abAB", min_size=1, max_size=5), st.integers(0, 3)), max_size=40)


@settings(max_examples=200)
@given(names, st.text("abAB", max_size=3))
def test_prefix_query_matches_linear_scan(entries, prefix):
    index = SymdefIndex()
    for name, i in entries:
        index.add(decl(name, i))
    expected = sorted({(name, mod(i)) for name, i in entries if name.startswith(prefix)})
    assert index.prefix_query(prefix) == expected
    for name, _ in entries:
        assert index.definers(name) == sorted({mod(i) for n, i in entries if n == name})


@settings(max_examples=100)
@given(names, st.data())
def test_prefix_query_after_removals(entries, data):
    index = SymdefIndex()
    kept = [(name, i, line) for line, (name, i) in enumerate(entries, 1)]
    for name, i, line in kept:
        index.add(decl(name, i, line))
    for _ in range(data.draw(st.integers(0, len(entries)))):
        name, i, line = kept.pop(data.draw(st.integers(0, len(kept) - 1)))
        index.remove(decl(name, i, line))
    assert index.prefix_query("") == sorted({(n, mod(i)) for n, i, _ in kept})
    assert len(index) == len(kept)


def test_reals_course_indexes(reals_course):
    assert reals_course.theory.edges() == sorted([(REALS, SETS), (SETS, BASE)])
    assert reals_course.symdefs.prefix_query("pos") == [("positiveReals", REALS)]
    occ = reals_course.refs.occurrences(REALS, "Reals")
    assert len(occ) == 2 and all(o.occurrence_module == REALS for o in occ)
    assert (REALS, SETS, "inset") in reals_course.refs.triples()
    dump = dump_indexes(reals_course.theory, reals_course.symdefs, reals_course.refs)
    assert "import course/main.tex#reals -> background/sets.tex#sets" in dump


BLOCKS = [
    "\\begin{module}[id=p]\\symdef{x}{1}\\end{module}\n",
    "\\begin{module}[id=q]\\importmodule{p}$\\x$\\symdef{y}{2}\\end{module}\n",
    "\\begin{module}[id=r]\\importmodule{q}$\\y\\x$\\end{module}\n",
    "\\begin{module}[id=p]\\symdef{y}{3}\\end{module}\n",
    "$\\x$ plain text\n",
    "\\symdef{z}{4}\n",
    "\\begin{module}[id=s]\\importmodule{r}\\importmodule{p}$\\z\\y$\\end{module}\n",
]


@settings(max_examples=150, deadline=None)
@given(st.lists(st.lists(st.sampled_from(BLOCKS), max_size=3), min_size=1, max_size=4), st.data())
def test_delta_matches_rebuild(docs, data):
    """Replacing one document through the delta gives the same state as a rebuild."""
    texts = {f"d{i}.tex": "".join(blocks) for i, blocks in enumerate(docs)}
    analysis = analyze_texts(texts)
    for _ in range(3):
        name = data.draw(st.sampled_from(sorted(texts)))
        new_text = "".join(data.draw(st.lists(st.sampled_from(BLOCKS), max_size=3)))
        doc = analysis.workspace.document(name)
        end = doc.lines.position(len(doc.text))
        apply_text_edit(analysis.workspace, TextEdit(doc.uri, SourceRange(SourceRange.of(1, 0, 1, 0).start, end),
                                                     new_text))
        analysis.reanalyze(doc.uri)
        assert analysis.snapshot() == rebuilt(analysis).snapshot()


def test_delta_document_removal():
    analysis = analyze_texts({"a.tex": BLOCKS[0], "b.tex": BLOCKS[1]})
    b = DocumentUri("b.tex")
    a = DocumentUri("a.tex")
    analysis.apply_delta(a, analysis.results[a], None)
    assert analysis.symdefs.definers("x") == []
    # with no definer left, \x is an ordinary command again
    assert analysis.uses[b] == ()
    analysis.workspace.documents.pop(a)
    assert analysis.snapshot() == rebuilt(analysis).snapshot()


def test_stale_delta_falls_back_to_rebuild():
    analysis = analyze_texts({"a.tex": BLOCKS[0]})
    a = DocumentUri("a.tex")
    new = analysis.results[a]
    analysis.apply_delta(a, None, new)  # wrong "old" record
    assert analysis.snapshot() == rebuilt(analysis).snapshot()


def test_random_graph_scale():
    rng = random.Random(7)
    theory = TheoryIndex()
    n = 200
    for i in range(n):
        theory.add_node(mod(i))
    edges = [(rng.randrange(n), rng.randrange(n)) for _ in range(1000)]
    for a, b in edges:
        theory.add_edge(mod(a), mod(b))
    for a in rng.sample(range(n), 10):
        assert theory.reachable_set(mod(a)) == {mod(x) for x in _bfs(edges, a)}


def _bfs(edges, a):
    succ = {}
    for s, t in edges:
        succ.setdefault(s, []).append(t)
    seen, todo = {a}, [a]
    while todo:
        for t in succ.get(todo.pop(), ()):
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return seen
