import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import REALS_COURSE, MAIN, analyze_texts, rebuilt
from stexkit.fuzz import EditConfig, random_edit
from stexkit.incremental import (
    ActionKind,
    IncrementalSession,
    RangeTree,
    StaleVersion,
    build_range_tree,
    classify_edit,
    shift_ranges,
)
from stexkit.parser import parse
from stexkit.source_model import DocumentUri, LineIndex, SourceRange, TextEdit, apply_text_edit
from stexkit.spotters import SpotterRegistry, run_spotters

MAIN_TEXT = (REALS_COURSE / "course" / "main.tex").read_text()
URI = DocumentUri("d.tex")


def tree_for(text: str) -> RangeTree:
    tree = parse(text)
    return build_range_tree(tree, run_spotters(tree, URI))


def edit_at(text: str, needle: str, rep: str, delete: int = 0, after: bool = False) -> TextEdit:
    a = text.index(needle) + (len(needle) if after else 0)
    lines = LineIndex(text)
    return TextEdit(URI, lines.range(a, a + delete), rep)


def kind(text, edit):
    return classify_edit(tree_for(text), edit, text).kind


SHIFT, FULL = ActionKind.SHIFT_ONLY, ActionKind.FULL_REANALYSIS


def test_prose_edit_in_definition_is_shift_only():
    assert kind(MAIN_TEXT, edit_at(MAIN_TEXT, "that", "x")) is SHIFT
    assert kind(MAIN_TEXT, edit_at(MAIN_TEXT, "set of", "", delete=3)) is SHIFT


def test_markup_edits_force_full():
    assert kind(MAIN_TEXT, edit_at(MAIN_TEXT, "such that", "\\Reals ")) is FULL
    assert kind(MAIN_TEXT, edit_at(MAIN_TEXT, "such that", "{")) is FULL
    assert kind(MAIN_TEXT, edit_at(MAIN_TEXT, "such that", "%")) is FULL


def test_edits_on_structure_force_full():
    # renaming a symbol in its symdef
    assert kind(MAIN_TEXT, edit_at(MAIN_TEXT, "Reals}{", "X", after=False)) is FULL
    # inside the module header
    assert kind(MAIN_TEXT, edit_at(MAIN_TEXT, "reals]", "x")) is FULL
    # right next to a command name, where letters would extend it
    assert kind(MAIN_TEXT, edit_at(MAIN_TEXT, "\\ldots", "x", after=False)) is FULL
    assert kind(MAIN_TEXT, edit_at(MAIN_TEXT, "\\ldots", "x", after=True)) is FULL


def test_deletion_of_markup_forces_full():
    text = "\\begin{module}[id=m]\nsome } text\n\\end{module}"
    assert kind(text, edit_at(text, "}", "", delete=1)) is FULL


def test_edit_inside_math_or_comment_forces_full():
    text = "\\begin{module}[id=m]\nword $x + y$ more % note here\n\\end{module}"
    assert kind(text, edit_at(text, "x + y", "z")) is FULL
    assert kind(text, edit_at(text, "note", "z")) is FULL
    assert kind(text, edit_at(text, "rd", "z")) is SHIFT


def test_verbatim_content_forces_full():
    text = "\\begin{verbatim}\nend{verbatim}\n\\end{verbatim}\nprose"
    # a backslash before "end" inside would close the environment early
    assert kind(text, edit_at(text, "\nend{verbatim}", "\\", after=False)) is FULL
    assert kind(text, edit_at(text, "verbatim}\n\\end", "x")) is FULL
    assert kind(text, edit_at(text, "prose", "x", after=True)) is SHIFT


def test_whitespace_after_command_forces_full():
    # text typed here could become an argument of \foo
    text = "\\begin{module}[id=m]\n\\foo   tail\n\\end{module}"
    assert kind(text, edit_at(text, "\\foo ", "", delete=1, after=True)) is FULL


def test_stale_version():
    tree = tree_for(MAIN_TEXT)
    with pytest.raises(StaleVersion):
        classify_edit(tree, edit_at(MAIN_TEXT, "that", "x"), MAIN_TEXT, version=3)
    assert classify_edit(tree, edit_at(MAIN_TEXT, "that", "x"), MAIN_TEXT, version=0).kind is SHIFT


def test_range_tree_nesting_and_shift():
    tree = tree_for(MAIN_TEXT)
    assert tree.is_well_nested()
    edit = edit_at(MAIN_TEXT, "such that", "very long words\nand a new line ")
    moved = shift_ranges(tree, edit)
    assert moved.is_well_nested() and len(moved) == len(tree) and moved.version == tree.version + 1
    new_text = MAIN_TEXT[:MAIN_TEXT.index("such that")] + edit.replacement + MAIN_TEXT[MAIN_TEXT.index("such that"):]
    fresh = tree_for(new_text)
    assert sorted(n.range for n, _ in moved.walk()) == sorted(n.range for n, _ in fresh.walk())


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10_000))
def test_shift_preserves_nesting(seed):
    rng = random.Random(seed)
    text = MAIN_TEXT
    tree = tree_for(text)
    cfg = EditConfig(max_len=8, backslash_rate=0.0)
    for _ in range(5):
        edit = random_edit(rng, URI, text, cfg)
        if classify_edit(tree, edit, text).kind is not SHIFT:
            continue
        tree = shift_ranges(tree, edit)
        a, b = LineIndex(text).offsets(edit.range)
        text = text[:a] + edit.replacement + text[b:]
        assert tree.is_well_nested()


def session_on(texts):
    analysis = analyze_texts(texts)
    return analysis, IncrementalSession(analysis)


def test_session_shift_updates_definition_text():
    analysis, session = session_on({"course/main.tex": MAIN_TEXT})
    doc = analysis.workspace.document(MAIN)
    pos = LineIndex(doc.text).position(doc.text.index("that"))
    apply_text_edit(analysis.workspace, TextEdit(MAIN, SourceRange(pos, pos), "really "))
    assert session.counts[SHIFT] == 1
    assert "such really that" in analysis.result(MAIN).definitions[0].text
    assert analysis.snapshot() == rebuilt(analysis).snapshot()


def test_session_full_reanalysis_on_new_symdef():
    analysis, session = session_on({"course/main.tex": MAIN_TEXT})
    doc = analysis.workspace.document(MAIN)
    pos = LineIndex(doc.text).position(doc.text.index("  \\ldots"))
    apply_text_edit(analysis.workspace, TextEdit(MAIN, SourceRange(pos, pos), "  \\symdef{naturals}{N}\n"))
    assert session.counts[FULL] == 1
    assert "naturals" in analysis.symdefs
    assert analysis.snapshot() == rebuilt(analysis).snapshot()
    session.close()
    assert session.on_change not in analysis.workspace.listeners


def test_custom_spotters_always_reanalyze():
    reg = SpotterRegistry().register("words", lambda tree, doc: [len(tree.text.split())])
    from stexkit.analysis import Analysis
    from stexkit.source_model import Workspace
    analysis = Analysis.build(Workspace.from_texts({"course/main.tex": MAIN_TEXT}), reg)
    session = IncrementalSession(analysis)
    doc = analysis.workspace.document(MAIN)
    pos = LineIndex(doc.text).position(doc.text.index("such that"))
    apply_text_edit(analysis.workspace, TextEdit(MAIN, SourceRange(pos, pos), "more words "))
    assert session.counts == {SHIFT: 0, FULL: 1}
    before = len(MAIN_TEXT.split())
    assert analysis.result(MAIN).custom_results("words") == (before + 2,)


def test_small_oracle_run():
    """Every step of a few random sequences matches a from-scratch analysis."""
    rng = random.Random(11)
    for _ in range(30):
        analysis, session = session_on({"course/main.tex": MAIN_TEXT, "notes.tex": "prose {x} $\\Reals$\n"})
        for _ in range(10):
            uri = rng.choice(sorted(analysis.workspace.documents))
            edit = random_edit(rng, uri, analysis.workspace.document(uri).text, EditConfig(max_len=6))
            apply_text_edit(analysis.workspace, edit)
            assert analysis.snapshot() == rebuilt(analysis).snapshot()
        session.close()
