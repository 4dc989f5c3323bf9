import io
import json
import shutil
import subprocess
import sys

import pytest

from conftest import ABC, REALS_COURSE
from stexkit.cli import MalformedConfig, load_config, main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def proj(tmp_path):
    dest = tmp_path / "reals_course"
    shutil.copytree(REALS_COURSE, dest)
    return dest


@pytest.fixture
def abc_proj(tmp_path):
    dest = tmp_path / "abc"
    shutil.copytree(ABC, dest)
    return dest


def test_index(proj):
    code, out, _ = run("index", "--project", str(proj), "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["modules"] == 3 and data["symdefs"] == 5


def test_complete_after_import(proj):
    code, out, _ = run("complete", "course/main.tex", "2", "40", "--project", str(proj), "--format", "json")
    assert code == 0
    names = [i["name"] for i in json.loads(out)]
    assert "inset" in names and "defeq" in names and "Reals" not in names


def test_complete_text_output(proj):
    code, out, _ = run("complete", "course/main.tex", "7", "10", "pos", "--project", str(proj))
    assert code == 0 and "positiveReals" in out


def test_retrieve_with_position(proj):
    code, out, _ = run("retrieve", "", "--at", "background/sets.tex:3:3", "--project", str(proj),
                       "--format", "json")
    assert code == 0
    items = json.loads(out)
    assert {i["name"]: i["requiresImport"] for i in items}["Reals"] is True


def test_lint_abc_exit_code(abc_proj):
    code, out, _ = run("lint-imports", "--project", str(abc_proj), "--format", "json")
    assert code == 1
    diags = json.loads(out)["diagnostics"]
    assert [d["code"] for d in diags] == ["redundant-import"]
    code, out, _ = run("lint-imports", "--apply-safe", "--project", str(abc_proj))
    assert code == 0 and out.startswith("fixed:")
    assert "\\importmodule[a]{A}" not in (abc_proj / "c.tex").read_text()
    assert run("lint-imports", "--project", str(abc_proj))[0] == 0


def test_graph_on_empty_project(tmp_path):
    code, out, _ = run("graph", "--project", str(tmp_path))
    assert code == 0 and out == "digraph theories {\n}\n"


def test_graph_to_file(proj, tmp_path):
    target = tmp_path / "g.dot"
    code, _, _ = run("graph", "-o", str(target), "--project", str(proj))
    assert code == 0 and '"reals" -> "sets";' in target.read_text()


def test_outline_and_search(proj):
    code, out, _ = run("outline", "course/main.tex", "--project", str(proj))
    assert code == 0 and out.splitlines()[0].startswith("module reals")
    code, out, _ = run("search", "positive", "--project", str(proj), "--format", "json")
    assert code == 0 and json.loads(out)[0]["name"] == "positiveReals"


def test_rename_preview_then_apply_is_a_fixpoint(proj):
    args = ("rename-symbol", "reals", "Reals", "RR", "--project", str(proj))
    code, out, _ = run(*args)
    assert code == 0 and "-  \\symdef{Reals}" in out and "+  \\symdef{RR}" in out
    assert "\\symdef{Reals}" in (proj / "course/main.tex").read_text()
    assert run(*args, "--apply")[0] == 0
    assert "\\symdef{RR}" in (proj / "course/main.tex").read_text()
    code, out, _ = run(*args, "--apply", "--format", "json")
    assert code == 0 and json.loads(out)["edits"] == {}


def test_rename_module_apply_twice(proj):
    args = ("rename-module", "sets", "sets2", "--apply", "--project", str(proj))
    assert run(*args)[0] == 0
    assert "{sets2}" in (proj / "course/main.tex").read_text()
    code, out, _ = run(*args, "--format", "json")
    assert code == 0 and json.loads(out)["edits"] == {}


def test_split_apply_twice(proj):
    args = ("split", "reals", "--ranges", "symdef:positiveReals,definition:posreals.def",
            "--new-id", "posreals", "--new-file", "course/posreals.tex", "--project", str(proj))
    code, out, _ = run(*args)
    assert code == 0 and "+++ b/course/posreals.tex" in out
    assert run(*args, "--apply")[0] == 0
    assert (proj / "course/posreals.tex").is_file()
    code, out, _ = run(*args, "--apply", "--format", "json")
    assert code == 0 and json.loads(out)["edits"] == {}
    code, _, _ = run("lint-imports", "--project", str(proj), "--format", "json")
    assert code in (0, 1)


def test_errors(proj, tmp_path):
    code, _, err = run("rename-symbol", "reals", "nothing", "x", "--project", str(proj))
    assert code == 3 and "nothing" in err
    code, out, _ = run("omdoc", "nosuch", "--project", str(proj), "--format", "json")
    assert code == 3 and json.loads(out)["error"]["code"] == "unknown-module"
    assert run("index", "--project", str(tmp_path / "missing"))[0] == 2
    assert run("outline", "nofile.tex", "--project", str(proj))[0] in (2, 3)
    assert run("bogus")[0] == 2


def test_config(tmp_path):
    (tmp_path / "stexkit.toml").write_text('output_format = "json"\nsource_globs = ["*.tex"]\nextra = 1\n')
    (tmp_path / "a.tex").write_text("\\begin{module}[id=a]\\symdef{x}{1}\\end{module}")
    cfg = load_config(tmp_path)
    assert cfg.output_format == "json" and cfg.source_globs == ["*.tex"]
    assert any("extra" in w for w in cfg.warnings)
    code, out, err = run("index", "--project", str(tmp_path))
    assert code == 0 and json.loads(out)["symdefs"] == 1 and "extra" in err
    (tmp_path / "stexkit.toml").write_text("output_format = [")
    with pytest.raises(MalformedConfig):
        load_config(tmp_path)
    assert run("index", "--project", str(tmp_path))[0] == 2
    (tmp_path / "stexkit.toml").write_text('output_format = "yaml"')
    assert run("index", "--project", str(tmp_path))[0] == 2


def test_json_round_trip(proj):
    for argv in (["index"], ["outline", "course/main.tex"], ["graph"], ["omdoc", "reals"],
                 ["lint-imports"], ["search", "set"]):
        code, out, _ = run(*argv, "--project", str(proj), "--format", "json")
        data = json.loads(out)
        assert json.loads(json.dumps(data)) == data, argv


def test_console_script_entry_point(proj):
    proc = subprocess.run([sys.executable, "-m", "stexkit.cli", "graph", "--project", str(proj)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("digraph")
