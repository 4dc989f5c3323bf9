import pytest
from hypothesis import given, strategies as st

from stexkit.source_model import (
    DocumentUri,
    LineIndex,
    ModuleUri,
    RangeOutOfBounds,
    RootNotFound,
    SourcePosition,
    SourceRange,
    TextEdit,
    UnknownDocument,
    Workspace,
    apply_text_edit,
    normalize_path,
    position_after,
    scan_workspace,
)

path_parts = st.lists(st.sampled_from(["a", "b", "..", ".", "", "c.tex", "dir"]), max_size=8)


@given(path_parts, st.sampled_from(["/", "\\"]))
def test_normalize_idempotent(parts, sep):
    p = sep.join(parts)
    once = normalize_path(p)
    assert normalize_path(once) == once
    assert "\\" not in once
    assert "/./" not in "/" + once + "/"


def test_uri_normalization_and_equality():
    assert DocumentUri("course/./x/../main.tex") == DocumentUri("course\\main.tex")
    assert DocumentUri("course/main.tex").directory == "course"
    assert DocumentUri("main.tex").stem == "main"


def test_module_uri_round_trip():
    uri = ModuleUri.parse("background/sets.tex#sets")
    assert uri == ModuleUri(DocumentUri("background/sets.tex"), "sets")
    assert ModuleUri.parse(str(uri)) == uri


def test_position_invariants():
    with pytest.raises(ValueError):
        SourcePosition(0, 0)
    with pytest.raises(ValueError):
        SourcePosition(1, -1)
    with pytest.raises(ValueError):
        SourceRange.of(2, 0, 1, 0)


def test_range_relations():
    outer = SourceRange.of(1, 0, 3, 0)
    inner = SourceRange.of(2, 0, 2, 5)
    assert outer.contains(inner) and not inner.contains(outer)
    assert SourceRange.of(1, 0, 1, 3).disjoint(SourceRange.of(1, 3, 1, 4))


def test_columns_count_code_points():
    lines = LineIndex("αβγ\n∀x")
    assert lines.position(3) == SourcePosition(1, 3)
    assert lines.offset(SourcePosition(2, 1)) == 5


def test_line_index_rejects_out_of_range():
    lines = LineIndex("ab\ncd")
    with pytest.raises(RangeOutOfBounds):
        lines.offset(SourcePosition(1, 5))
    with pytest.raises(RangeOutOfBounds):
        lines.offset(SourcePosition(3, 0))


texts = st.text(alphabet="ab\n\\{}é", max_size=40)


@given(texts, st.data())
def test_line_index_round_trip(text, data):
    lines = LineIndex(text)
    off = data.draw(st.integers(0, len(text)))
    assert lines.offset(lines.position(off)) == off


@given(texts, st.data(), st.text(alphabet="xy\n", max_size=5))
def test_apply_text_edit_matches_offset_splice(text, data, rep):
    """Line/column edits agree with plain string splicing on offsets."""
    a = data.draw(st.integers(0, len(text)))
    b = data.draw(st.integers(a, len(text)))
    ws = Workspace.from_texts({"d.tex": text})
    lines = LineIndex(text)
    rng = SourceRange(lines.position(a), lines.position(b))
    new = apply_text_edit(ws, TextEdit(DocumentUri("d.tex"), rng, rep))
    assert new == text[:a] + rep + text[b:]
    assert ws.document("d.tex").version == 1
    assert LineIndex(new).position(a + len(rep)) == position_after(rng.start, rep)


def test_apply_text_edit_examples():
    ws = Workspace.from_texts({"m.tex": "\\symdef{Reals}{R}"})
    uri = DocumentUri("m.tex")
    apply_text_edit(ws, TextEdit(uri, SourceRange.of(1, 8, 1, 13), "Rls"))
    assert "Rls" in ws.document(uri).text
    before = len(ws.document(uri).text)
    apply_text_edit(ws, TextEdit(uri, SourceRange.of(1, 0, 1, 0), "x"))
    assert len(ws.document(uri).text) == before + 1
    lines_before = ws.document(uri).lines.line_count
    end = ws.document(uri).lines.position(len(ws.document(uri).text))
    apply_text_edit(ws, TextEdit(uri, SourceRange(end, end), "\n"))
    assert ws.document(uri).lines.line_count == lines_before + 1


def test_apply_text_edit_out_of_bounds():
    ws = Workspace.from_texts({"m.tex": "abc"})
    with pytest.raises(RangeOutOfBounds):
        apply_text_edit(ws, TextEdit(DocumentUri("m.tex"), SourceRange.of(1, 0, 2, 0), ""))
    with pytest.raises(UnknownDocument):
        apply_text_edit(ws, TextEdit(DocumentUri("x.tex"), SourceRange.of(1, 0, 1, 0), ""))


def test_listeners_see_old_text():
    ws = Workspace.from_texts({"m.tex": "abc"})
    seen = []
    ws.listeners.append(lambda doc, edit, old: seen.append((old, doc.text, doc.version)))
    apply_text_edit(ws, TextEdit(DocumentUri("m.tex"), SourceRange.of(1, 1, 1, 2), "X"))
    assert seen == [("abc", "aXc", 1)]


def test_scan_workspace(tmp_path):
    (tmp_path / "background").mkdir()
    (tmp_path / "main.tex").write_text("x")
    (tmp_path / "background" / "sets.tex").write_text("y")
    (tmp_path / "notes.txt").write_text("z")
    ws = scan_workspace(tmp_path)
    assert sorted(d.value for d in ws.documents) == ["background/sets.tex", "main.tex"]
    assert scan_workspace(tmp_path, ["background/*.tex"]).documents.keys() == {DocumentUri("background/sets.tex")}


def test_scan_empty_and_missing(tmp_path):
    assert len(scan_workspace(tmp_path).documents) == 0
    with pytest.raises(RootNotFound):
        scan_workspace(tmp_path / "nope")


def test_scan_replaces_invalid_utf8(tmp_path):
    (tmp_path / "bad.tex").write_bytes(b"ok \xff\xfe end")
    ws = scan_workspace(tmp_path)
    assert "�" in ws.document("bad.tex").text
    assert any("bad.tex" in w for w in ws.warnings)
