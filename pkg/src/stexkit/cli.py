"""Command-line front end: ``stexkit <command> ...``.

Exit codes: 0 success, 1 lint findings, 2 usage or configuration error,
3 analysis error.
"""

from __future__ import annotations

import argparse
import difflib
import json
import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .analysis import Analysis
from .source_model import (
    DEFAULT_GLOBS,
    Diagnostic,
    DocumentUri,
    ModuleUri,
    RootNotFound,
    SourcePosition,
    SourceRange,
    StexError,
    normalize_path,
    scan_workspace,
)
from .services import (
    RenamePlan,
    UnknownSymbol,
    apply_plan,
    complete_at,
    concept_search,
    export_omdoc_skeleton,
    export_theory_graph,
    lint_imports,
    load_builtin_macros,
    outline,
    preview_text,
    rename_module,
    rename_symbol,
    retrieve_all,
    split_module,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("stexkit")

CONFIG_NAME = "stexkit.toml"
CONFIG_KEYS = {"root", "source_globs", "builtin_macros", "output_format"}

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE, EXIT_ANALYSIS = 0, 1, 2, 3


class UsageError(Exception):
    pass


class MalformedConfig(UsageError):
    pass


@dataclass
class ProjectConfig:
    root: Path = Path(".")
    source_globs: list[str] = field(default_factory=lambda: list(DEFAULT_GLOBS))
    builtin_macros: Path | None = None
    output_format: str = "text"
    warnings: list[str] = field(default_factory=list)


def load_config(directory: str | Path) -> ProjectConfig:
    """Read ``stexkit.toml`` from ``directory``; defaults when it is absent."""
    directory = Path(directory)
    cfg = ProjectConfig(root=directory)
    path = directory / CONFIG_NAME
    if not path.is_file():
        return cfg
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise MalformedConfig(f"{path}: {exc}") from None
    for key in sorted(set(data) - CONFIG_KEYS):
        cfg.warnings.append(f"{path}: unknown key {key!r} ignored")
    if "root" in data:
        cfg.root = (directory / str(data["root"])).resolve()
    if "source_globs" in data:
        globs = data["source_globs"]
        if isinstance(globs, str):
            globs = [globs]
        if not isinstance(globs, list) or not all(isinstance(g, str) for g in globs):
            raise MalformedConfig(f"{path}: source_globs must be a list of strings")
        cfg.source_globs = globs
    if "builtin_macros" in data:
        cfg.builtin_macros = directory / str(data["builtin_macros"])
    if "output_format" in data:
        if data["output_format"] not in ("text", "json"):
            raise MalformedConfig(f"{path}: output_format must be 'text' or 'json'")
        cfg.output_format = data["output_format"]
    return cfg


# ---------------------------------------------------------------------------

@dataclass
class Context:
    args: argparse.Namespace
    config: ProjectConfig
    analysis: Analysis
    fmt: str
    out: Any

    @property
    def root(self) -> Path:
        return Path(self.analysis.workspace.root)

    def emit(self, payload: Any, text: str) -> None:
        if self.fmt == "json":
            self.out.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
        else:
            self.out.write(text if text.endswith("\n") or not text else text + "\n")

    def doc(self, path: str) -> DocumentUri:
        p = Path(path)
        if p.is_absolute():
            try:
                p = p.resolve().relative_to(self.root.resolve())
            except ValueError:
                raise UsageError(f"{path} is outside the project root") from None
        uri = DocumentUri(normalize_path(p.as_posix()))
        self.analysis.workspace.document(uri)
        return uri

    def module(self, text: str) -> ModuleUri:
        return self.analysis.find_module(text)

    def write_docs(self, docs: list[DocumentUri]) -> None:
        for doc in docs:
            target = self.root / doc.value
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(self.analysis.workspace.document(doc).text, encoding="utf-8")


def _plan_diff(analysis: Analysis, plan: RenamePlan) -> str:
    chunks = []
    for doc in sorted(plan.edits):
        exists = doc in analysis.workspace.documents
        old = analysis.workspace.document(doc).text if exists else ""
        new = preview_text(old, plan.edits[doc])
        chunks.extend(difflib.unified_diff(
            old.splitlines(keepends=True), new.splitlines(keepends=True),
            fromfile=f"a/{doc}" if exists else "/dev/null", tofile=f"b/{doc}"))
    text = "".join(chunks)
    return text if not text or text.endswith("\n") else text + "\n"


def _finish_plan(ctx: Context, plan: RenamePlan, note: str = "") -> int:
    applied = False
    if ctx.args.apply and not plan.is_empty:
        touched = apply_plan(ctx.analysis.workspace, plan)
        ctx.write_docs(touched)
        applied = True
    diff = "" if applied else _plan_diff(ctx.analysis, plan)
    payload = plan.to_json() | {"applied": applied}
    if note:
        payload["note"] = note
    if applied:
        summary = f"applied {plan.edit_count()} edits in {len(plan.edits)} files"
    elif plan.is_empty:
        summary = note or "nothing to change"
    else:
        summary = diff + f"# {plan.edit_count()} edits, {plan.touched_count} occurrences; use --apply to write"
    ctx.emit(payload, summary)
    return EXIT_OK


def _diag_json(d) -> dict:
    return {
        "severity": d.severity, "code": d.code, "document": str(d.document) if d.document else None,
        "range": str(d.range), "message": d.message,
        "fixes": [[{"document": str(e.target), "range": str(e.range), "replacement": e.replacement}
                   for e in group] for group in d.fixes],
    }


def _diag_text(d) -> str:
    return f"{d.document}:{d.range}: {d.severity}: {d.message} [{d.code}]"


# subcommands ---------------------------------------------------------------

def cmd_index(ctx: Context) -> int:
    an = ctx.analysis
    diags = an.all_diagnostics() + [
        _warning(w) for w in an.workspace.warnings]
    stats = {
        "documents": len(an.results),
        "modules": len(an.theory.nodes),
        "imports": an.theory.edge_count(),
        "symdefs": len(an.symdefs),
        "references": len(an.refs),
        "diagnostics": len(diags),
    }
    text = "\n".join(f"{k}: {v}" for k, v in stats.items())
    if diags:
        text += "\n" + "\n".join(_diag_text(d) for d in diags)
    ctx.emit(stats | {"diagnosticList": [_diag_json(d) for d in diags]}, text)
    return EXIT_OK


def _warning(message: str) -> Diagnostic:
    origin = SourcePosition(1, 0)
    return Diagnostic("warning", "workspace", SourceRange(origin, origin), message)


def cmd_outline(ctx: Context) -> int:
    tree = outline(ctx.analysis, ctx.doc(ctx.args.file))
    ctx.emit(tree.to_json(), "\n".join(tree.render()))
    return EXIT_OK


def _position(ctx: Context, doc: DocumentUri, line: int, col: int) -> SourcePosition:
    pos = SourcePosition(line, col)
    ctx.analysis.workspace.document(doc).lines.offset(pos)
    return pos


def _items_text(items) -> str:
    rows = []
    for i in items:
        where = str(i.defining_module) if i.defining_module else "builtin"
        flag = " (needs import)" if i.requires_import else ""
        expl = f"  -- {i.explanation}" if i.explanation else ""
        rows.append(f"{i.insert_text}\t{where}{flag}{expl}")
    return "\n".join(rows)


def cmd_complete(ctx: Context) -> int:
    doc = ctx.doc(ctx.args.file)
    pos = _position(ctx, doc, ctx.args.line, ctx.args.col)
    builtins = load_builtin_macros(ctx.config.builtin_macros)
    items = complete_at(ctx.analysis, doc, pos, ctx.args.prefix or "", builtins)
    ctx.emit([i.to_json() for i in items], _items_text(items))
    return EXIT_OK


def cmd_retrieve(ctx: Context) -> int:
    an = ctx.analysis
    if ctx.args.at:
        m = re.fullmatch(r"(.+):(\d+):(\d+)", ctx.args.at)
        if not m:
            raise UsageError("--at expects FILE:LINE:COL")
        doc = ctx.doc(m.group(1))
        pos = _position(ctx, doc, int(m.group(2)), int(m.group(3)))
        items = retrieve_all(an, doc, pos, ctx.args.prefix)
    else:
        items = retrieve_all(an, None, None, ctx.args.prefix)
    ctx.emit([i.to_json() for i in items], _items_text(items))
    return EXIT_OK


def cmd_search(ctx: Context) -> int:
    hits = concept_search(ctx.analysis, ctx.args.terms)
    rows = []
    for h in hits:
        blocks = ", ".join(b.id or b.title or str(b.range) for b, _ in h.evidence)
        rows.append(f"{h.score:g}\t\\{h.symbol.name}\t{h.symbol.defining_module}\t[{blocks}]")
    ctx.emit([h.to_json() for h in hits], "\n".join(rows))
    return EXIT_OK


def cmd_rename_symbol(ctx: Context) -> int:
    a = ctx.args
    definer = ctx.module(a.module)
    try:
        plan = rename_symbol(ctx.analysis, definer, a.old, a.new)
    except UnknownSymbol:
        if any(s.name == a.new for s in ctx.analysis.module_symdefs(definer)):
            return _finish_plan(ctx, RenamePlan(), f"{definer} already defines {a.new}")
        raise
    return _finish_plan(ctx, plan)


def cmd_rename_module(ctx: Context) -> int:
    a = ctx.args
    try:
        m = ctx.module(a.module)
    except StexError:
        if "#" in a.module:
            done = ModuleUri(ModuleUri.parse(a.module).document, a.new_id)
        else:
            # a bare id is done when the old id is gone and the new one is unique
            named = [u for u in ctx.analysis.modules() if u.module_id == a.new_id]
            gone = not any(u.module_id == a.module for u in ctx.analysis.modules())
            done = named[0] if gone and len(named) == 1 else None
        if done is not None and done in ctx.analysis.modules():
            return _finish_plan(ctx, RenamePlan(), f"module already named {done}")
        raise
    return _finish_plan(ctx, rename_module(ctx.analysis, m, a.new_id))


def cmd_lint_imports(ctx: Context) -> int:
    an = ctx.analysis
    modules = [ctx.module(ctx.args.module)] if ctx.args.module else None
    diags = lint_imports(an, modules)
    applied = []
    if ctx.args.apply_safe:
        for _ in range(1000):
            fixable = [d for d in diags if d.fixes]
            if not fixable:
                break
            fix = fixable[0]
            plan = RenamePlan()
            for edit in fix.fixes[0]:
                plan.add(edit)
            touched = apply_plan(an.workspace, plan.finalize())
            ctx.write_docs(touched)
            applied.append(fix)
            an.rebuild()
            if modules is not None:
                modules = [an.find_module(str(m)) for m in modules]
            diags = lint_imports(an, modules)
    payload = {"diagnostics": [_diag_json(d) for d in diags],
               "applied": [_diag_json(d) for d in applied]}
    lines = [f"fixed: {_diag_text(d)}" for d in applied] + [_diag_text(d) for d in diags]
    ctx.emit(payload, "\n".join(lines) if lines else "no import problems")
    return EXIT_FINDINGS if diags else EXIT_OK


_POS_RANGE = re.compile(r"(\d+):(\d+)-(\d+):(\d+)\Z")


def parse_range_spec(analysis: Analysis, m: ModuleUri, spec: str) -> list[SourceRange]:
    """``L:C-L:C``, ``symdef:NAME`` or ``definition:ID`` items, comma separated."""
    out = []
    for item in filter(None, (s.strip() for s in spec.split(","))):
        match = _POS_RANGE.match(item)
        if match:
            l1, c1, l2, c2 = map(int, match.groups())
            out.append(SourceRange.of(l1, c1, l2, c2))
            continue
        kind, _, name = item.partition(":")
        if kind == "symdef":
            hits = [s.range for s in analysis.module_symdefs(m) if s.name == name]
        elif kind == "definition":
            hits = [d.range for d in analysis.module_definitions(m) if d.id == name]
        else:
            raise UsageError(f"bad range item {item!r}")
        if not hits:
            raise UsageError(f"{m} has no {kind} {name!r}")
        out.extend(hits)
    return out


def cmd_split(ctx: Context) -> int:
    a = ctx.args
    an = ctx.analysis
    m = ctx.module(a.module)
    new_doc = DocumentUri(normalize_path(a.new_file))
    done = ModuleUri(new_doc, a.new_id)
    if done in an.modules() and all(":" in s and not _POS_RANGE.match(s.strip())
                                    for s in a.ranges.split(",")):
        try:
            parse_range_spec(an, done, a.ranges)
            return _finish_plan(ctx, RenamePlan(), f"content already lives in {done}")
        except UsageError:
            pass
    ranges = parse_range_spec(an, m, a.ranges)
    return _finish_plan(ctx, split_module(an, m, ranges, a.new_id, new_doc))


def _write_or_emit(ctx: Context, text: str, output: str | None, kind: str) -> int:
    if output:
        Path(output).write_text(text, encoding="utf-8")
        ctx.emit({"written": output}, f"wrote {output}")
    else:
        ctx.emit({kind: text}, text.rstrip("\n"))
    return EXIT_OK


def cmd_graph(ctx: Context) -> int:
    return _write_or_emit(ctx, export_theory_graph(ctx.analysis), ctx.args.output, "dot")


def cmd_omdoc(ctx: Context) -> int:
    m = ctx.module(ctx.args.module)
    return _write_or_emit(ctx, export_omdoc_skeleton(ctx.analysis, m), ctx.args.output, "xml")


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--project", default=argparse.SUPPRESS, help="project directory (default: .)")
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="stexkit", parents=[common],
                                     description="Analyze and refactor sTeX corpora.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    add("index", cmd_index, "build the indexes and print statistics")
    p = add("outline", cmd_outline, "structure of one file")
    p.add_argument("file")
    p = add("complete", cmd_complete, "completion items at a position")
    p.add_argument("file")
    p.add_argument("line", type=int)
    p.add_argument("col", type=int)
    p.add_argument("prefix", nargs="?", default="")
    p = add("retrieve", cmd_retrieve, "all symbols matching a prefix")
    p.add_argument("prefix")
    p.add_argument("--at", metavar="FILE:LINE:COL", help="rank by reachability from this position")
    p = add("search", cmd_search, "concept search over definitions")
    p.add_argument("terms", nargs="+")
    p = add("rename-symbol", cmd_rename_symbol, "rename a semantic macro")
    p.add_argument("module")
    p.add_argument("old")
    p.add_argument("new")
    p.add_argument("--apply", action="store_true")
    p = add("rename-module", cmd_rename_module, "rename a module id")
    p.add_argument("module")
    p.add_argument("new_id")
    p.add_argument("--apply", action="store_true")
    p = add("lint-imports", cmd_lint_imports, "unused, redundant and replaceable imports")
    p.add_argument("module", nargs="?")
    p.add_argument("--apply-safe", action="store_true", help="apply verified fixes one at a time")
    p = add("split", cmd_split, "move structures into a new module")
    p.add_argument("module")
    p.add_argument("--ranges", required=True, help="L:C-L:C, symdef:NAME or definition:ID, comma separated")
    p.add_argument("--new-id", required=True)
    p.add_argument("--new-file", required=True)
    p.add_argument("--apply", action="store_true")
    p = add("graph", cmd_graph, "theory graph in DOT format")
    p.add_argument("-o", "--output")
    p = add("omdoc", cmd_omdoc, "OMDoc skeleton of a module")
    p.add_argument("module")
    p.add_argument("-o", "--output")
    return parser


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    fmt = getattr(args, "format", None)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=err)

    def fail(code: int, kind: str, message: str) -> int:
        if (fmt or "text") == "json":
            out.write(json.dumps({"error": {"code": kind, "message": message}}) + "\n")
        else:
            err.write(f"stexkit: error: {message}\n")
        return code

    try:
        config = load_config(getattr(args, "project", "."))
    except MalformedConfig as exc:
        return fail(EXIT_USAGE, "malformed-config", str(exc))
    for w in config.warnings:
        err.write(f"stexkit: warning: {w}\n")
    fmt = fmt or config.output_format
    try:
        workspace = scan_workspace(config.root, config.source_globs)
        for w in workspace.warnings:
            err.write(f"stexkit: warning: {w}\n")
        ctx = Context(args, config, Analysis.build(workspace), fmt, out)
        return args.func(ctx)
    except (UsageError, RootNotFound) as exc:
        return fail(EXIT_USAGE, "usage", str(exc))
    except StexError as exc:
        return fail(EXIT_ANALYSIS, exc.code, str(exc))
    except OSError as exc:
        return fail(EXIT_ANALYSIS, "io-error", str(exc))


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
