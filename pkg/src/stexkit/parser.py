"""Single-file, non-expanding, error-recovering LaTeX parser.

The parser never follows ``\\input``/``\\include`` and never expands macros.
It turns a token stream into a tree of environments, commands, groups, math
regions, text and comments.  Malformed input is repaired locally and every
repair is reported as a diagnostic.

Grammar, informally:

* a command takes the maximal run of directly following ``[...]`` and
  ``{...}`` blocks as arguments (whitespace and comments may sit between
  them, a blank line may not); a few structural commands have a bounded
  signature, see ``SIGNATURES``;
* ``\\begin{name}[opts]`` ... ``\\end{name}`` becomes an Environment node;
* ``$...$`` / ``$$...$$`` become Math nodes whose content is parsed fully;
* everything else is Text.
"""

from __future__ import annotations

import gc
import re
from contextlib import contextmanager
from enum import Enum
from typing import Iterator

from .source_model import Diagnostic, LineIndex, SourceRange, StexError


class MalformedSymdef(StexError):
    code = "malformed-symdef"


class TokenKind(Enum):
    COMMAND = "Command"
    BEGIN_GROUP = "BeginGroup"
    END_GROUP = "EndGroup"
    OPT_OPEN = "OptOpen"
    OPT_CLOSE = "OptClose"
    MATH_SHIFT = "MathShift"
    COMMENT = "Comment"
    TEXT = "Text"
    WHITESPACE = "Whitespace"


class Token:
    __slots__ = ("kind", "lexeme", "start", "end", "_lines")

    def __init__(self, kind: TokenKind, lexeme: str, start: int, end: int, lines: LineIndex):
        self.kind = kind
        self.lexeme = lexeme
        self.start = start
        self.end = end
        self._lines = lines

    @property
    def range(self) -> SourceRange:
        return self._lines.range(self.start, self.end)

    def __repr__(self) -> str:
        return f"Token({self.kind.value}, {self.lexeme!r}, {self.start}:{self.end})"


_TOKEN_RE = re.compile(
    r"(?P<cmd>\\(?:[A-Za-z]+\*?|[^A-Za-z])?)"
    r"|(?P<comment>%[^\n]*)"
    r"|(?P<bg>\{)|(?P<eg>\})|(?P<oo>\[)|(?P<oc>\])"
    r"|(?P<math>\$\$?)"
    r"|(?P<ws>[ \t\r\n\f]+)"
    r"|(?P<text>[^\\%{}\[\]$ \t\r\n\f]+)"
)
_KINDS = {
    "cmd": TokenKind.COMMAND,
    "comment": TokenKind.COMMENT,
    "bg": TokenKind.BEGIN_GROUP,
    "eg": TokenKind.END_GROUP,
    "oo": TokenKind.OPT_OPEN,
    "oc": TokenKind.OPT_CLOSE,
    "math": TokenKind.MATH_SHIFT,
    "ws": TokenKind.WHITESPACE,
    "text": TokenKind.TEXT,
}
VERBATIM_ENVS = ("verbatim", "verbatim*", "Verbatim", "lstlisting", "comment")
_VERB_ENV_RE = re.compile(r"\{(" + "|".join(re.escape(e) for e in VERBATIM_ENVS) + r")\}")


def tokenize(text: str, lines: LineIndex | None = None) -> list[Token]:
    """Split ``text`` into a lossless token stream.

    ``\\verb`` spans and the bodies of verbatim-like environments become
    single Text tokens.
    """
    if lines is None:
        lines = LineIndex(text)
    tokens: list[Token] = []
    append = tokens.append
    kinds = _KINDS
    T = Token
    cmd = TokenKind.COMMAND
    n = len(text)
    pos = 0
    while pos < n:
        restart = -1
        for m in _TOKEN_RE.finditer(text, pos):
            start, end = m.span()
            kind = kinds[m.lastgroup]
            lexeme = m.group()
            append(T(kind, lexeme, start, end, lines))
            if kind is cmd and lexeme in _VERBATIM_TRIGGERS:
                restart = _tokenize_verbatim(text, lexeme, end, lines, append)
                if restart >= 0:
                    break
        if restart < 0:
            break
        pos = restart
    return tokens


_VERBATIM_TRIGGERS = frozenset({"\\verb", "\\verb*", "\\begin"})


def _tokenize_verbatim(text: str, lexeme: str, pos: int, lines: LineIndex, append) -> int:
    """Emit the verbatim part following ``lexeme``; return the resume offset or -1."""
    n = len(text)
    if lexeme != "\\begin":
        if pos >= n or text[pos] == "\n":
            return -1
        delim = text[pos]
        close = text.find(delim, pos + 1)
        eol = text.find("\n", pos + 1)
        if eol == -1:
            eol = n
        stop = close + 1 if close != -1 and close < eol else eol
        append(Token(TokenKind.TEXT, text[pos:stop], pos, stop, lines))
        return stop
    vm = _VERB_ENV_RE.match(text, pos)
    if vm is None:
        return -1
    name = vm.group(1)
    end = vm.end()
    append(Token(TokenKind.BEGIN_GROUP, "{", pos, pos + 1, lines))
    append(Token(TokenKind.TEXT, name, pos + 1, end - 1, lines))
    append(Token(TokenKind.END_GROUP, "}", end - 1, end, lines))
    stop = text.find("\\end{" + name + "}", end)
    if stop == -1:
        stop = n
    if stop > end:
        append(Token(TokenKind.TEXT, text[end:stop], end, stop, lines))
    return stop


class NodeKind(Enum):
    ROOT = "Root"
    ENVIRONMENT = "Environment"
    COMMAND = "Command"
    GROUP = "Group"
    MATH = "Math"
    TEXT = "Text"
    COMMENT = "Comment"


class Node:
    """A node of the command tree; positions are string offsets into the tree text.

    For Command nodes ``name_end`` is the end of the ``\\name`` token; for
    Environment nodes ``header_end`` ends ``\\begin{name}[...]`` and
    ``footer_start`` starts ``\\end{name}`` (equal to ``end`` when unclosed).
    Group nodes carry ``delim`` ``"{"`` or ``"["``.
    """

    __slots__ = (
        "kind", "name", "start", "end", "args", "children", "tree",
        "delim", "name_end", "header_end", "footer_start", "closed", "_options",
    )

    def __init__(self, kind: NodeKind, tree: "DocumentTree", start: int, name: str = ""):
        self.kind = kind
        self.tree = tree
        self.start = start
        self.end = start
        self.name = name
        self.args: list[Node] = []
        self.children: list[Node] = []
        self.delim = ""
        self.name_end = start
        self.header_end = start
        self.footer_start = start
        self.closed = True
        self._options: list[tuple[str, str]] | None = None

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<{self.kind.value}{label} {self.start}:{self.end}>"

    @property
    def range(self) -> SourceRange:
        return self.tree.lines.range(self.start, self.end)

    @property
    def source(self) -> str:
        return self.tree.text[self.start:self.end]

    @property
    def inner(self) -> str:
        """Text between the delimiters of a Group."""
        if self.kind is NodeKind.GROUP:
            close = self.end - 1 if self.closed else self.end
            return self.tree.text[self.start + 1:close]
        return self.source

    @property
    def inner_span(self) -> tuple[int, int]:
        close = self.end - 1 if self.closed else self.end
        return self.start + 1, close

    @property
    def mandatory_args(self) -> list["Node"]:
        return [a for a in self.args if a.delim == "{"]

    @property
    def option_args(self) -> list["Node"]:
        return [a for a in self.args if a.delim == "["]

    @property
    def options(self) -> list[tuple[str, str]]:
        """``key=value`` pairs of all ``[...]`` arguments; bare values get key ``""``."""
        if self._options is None:
            pairs: list[tuple[str, str]] = []
            for arg in self.option_args:
                pairs.extend(parse_options(arg.inner))
            self._options = pairs
        return self._options

    def option(self, key: str) -> str | None:
        for k, v in self.options:
            if k == key:
                return v
        return None

    @property
    def begin_range(self) -> SourceRange:
        return self.tree.lines.range(self.start, self.header_end)

    @property
    def end_range(self) -> SourceRange:
        return self.tree.lines.range(self.footer_start, self.end)

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal including argument subtrees."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if node.children:
                stack.extend(reversed(node.children))
            if node.args:
                stack.extend(reversed(node.args))


def _split_top_level(text: str, sep: str) -> list[str]:
    parts, depth, last = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth = max(0, depth - 1)
        elif ch == sep and depth == 0:
            parts.append(text[last:i])
            last = i + 1
    parts.append(text[last:])
    return parts


def _unbrace(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == "{" and value[-1] == "}":
        depth = 0
        for i, ch in enumerate(value):
            depth += ch == "{"
            depth -= ch == "}"
            if depth == 0 and i < len(value) - 1:
                return value
        return value[1:-1].strip()
    return value


def parse_options(text: str) -> list[tuple[str, str]]:
    pairs = []
    for part in _split_top_level(text, ","):
        if not part.strip():
            continue
        pieces = _split_top_level(part, "=")
        if len(pieces) > 1:
            key, value = pieces[0].strip(), "=".join(pieces[1:])
            pairs.append((key, _unbrace(value)))
        else:
            pairs.append(("", _unbrace(part)))
    return pairs


class DocumentTree:
    def __init__(self, text: str):
        self.text = text
        self.lines = LineIndex(text)
        self.tokens: list[Token] = []
        self.root = Node(NodeKind.ROOT, self, 0)
        self.diagnostics: list[Diagnostic] = []
        self._nodes: list[Node] | None = None
        self.cache: dict = {}

    def nodes(self) -> list[Node]:
        if self._nodes is None:
            self._nodes = list(self.root.walk())
        return self._nodes

    def commands(self, name: str | None = None) -> Iterator[Node]:
        for node in self.nodes():
            if node.kind is NodeKind.COMMAND and (name is None or node.name == name):
                yield node

    def environments(self, name: str | None = None) -> Iterator[Node]:
        for node in self.nodes():
            if node.kind is NodeKind.ENVIRONMENT and (name is None or node.name == name):
                yield node


# (max optional blocks, max mandatory blocks); absent means unbounded
SIGNATURES: dict[str, tuple[int, int]] = {
    "symdef": (1, 2),
    "importmodule": (1, 1),
    "begin": (0, 1),
    "end": (0, 1),
    "section": (1, 1),
    "subsection": (1, 1),
    "subsubsection": (1, 1),
    "section*": (0, 1),
    "subsection*": (0, 1),
    "subsubsection*": (0, 1),
    "verb": (0, 0),
    "verb*": (0, 0),
}
MAX_DEPTH = 150

_TEXT, _WS, _CMD, _COMMENT = TokenKind.TEXT, TokenKind.WHITESPACE, TokenKind.COMMAND, TokenKind.COMMENT
_BG, _EG, _OO, _OC, _MATH = (
    TokenKind.BEGIN_GROUP, TokenKind.END_GROUP, TokenKind.OPT_OPEN,
    TokenKind.OPT_CLOSE, TokenKind.MATH_SHIFT,
)


_CLOSERS = (_EG, _OC, _MATH, _WS)


def _match_options(tokens: list[Token]) -> dict[int, int]:
    """Pair ``[`` with ``]`` at the same brace depth; unmatched ``[`` are plain text."""
    matches: dict[int, int] = {}
    groups: list[list[int]] = [[]]
    for i, tok in enumerate(tokens):
        kind = tok.kind
        if kind is _OO:
            groups[-1].append(i)
        elif kind is _OC:
            if groups[-1]:
                matches[groups[-1].pop()] = i
        elif kind is _BG:
            groups.append([])
        elif kind is _EG and len(groups) > 1:
            groups.pop()
    return matches


class _Scope:
    __slots__ = ("kind", "key", "node")

    def __init__(self, kind: str, key, node: Node):
        self.kind = kind  # "root" | "group" | "option" | "math" | "env"
        self.key = key
        self.node = node


class _Parser:
    def __init__(self, tree: DocumentTree):
        self.tree = tree
        self.text = tree.text
        self.tokens = tree.tokens
        self.n = len(self.tokens)
        self.matches = _match_options(self.tokens)
        self.stack: list[_Scope] = []
        self.inline_math = 0
        self.i = 0

    def diag(self, severity: str, code: str, start: int, end: int, message: str) -> None:
        self.tree.diagnostics.append(
            Diagnostic(severity, code, self.tree.lines.range(start, end), message)
        )

    # scope lookup ------------------------------------------------------
    def _find(self, pred) -> int:
        for depth in range(len(self.stack) - 1, -1, -1):
            if pred(self.stack[depth]):
                return depth
        return -1

    def _closer_depth(self, idx: int) -> int:
        """Stack depth of the scope the token at ``idx`` would close, or -1."""
        tok = self.tokens[idx]
        kind = tok.kind
        if kind is _EG:
            return self._find(lambda s: s.kind == "group")
        if kind is _OC:
            return self._find(lambda s: s.kind == "option" and s.key == idx)
        if kind is _MATH:
            return self._find(lambda s: s.kind == "math")
        if kind is _WS:
            if "\n" in tok.lexeme:
                return self._find(lambda s: s.kind == "math" and s.key == "$")
            return -1
        if kind is _CMD and tok.lexeme == "\\end":
            name = self._peek_env_name(idx)
            if name is not None:
                return self._find(lambda s: s.kind == "env" and s.key == name)
        return -1

    def _skip_trivia(self, j: int) -> int:
        tokens, n = self.tokens, self.n
        while j < n:
            tok = tokens[j]
            if tok.kind is _COMMENT or (tok.kind is _WS and tok.lexeme.count("\n") < 2):
                j += 1
            else:
                break
        return j

    def _peek_env_name(self, idx: int) -> str | None:
        j = self._skip_trivia(idx + 1)
        tokens = self.tokens
        if j + 2 < self.n and tokens[j].kind is _BG:
            k = j + 1
            parts = []
            while k < self.n and tokens[k].kind in (_TEXT,):
                parts.append(tokens[k].lexeme)
                k += 1
            if parts and k < self.n and tokens[k].kind is _EG:
                return "".join(parts)
        return None

    # parsing -----------------------------------------------------------
    def parse(self) -> None:
        root = self.tree.root
        self.stack.append(_Scope("root", None, root))
        self.parse_seq(root.children)
        root.end = len(self.text)

    def parse_seq(self, out: list[Node]) -> bool:
        """Parse into ``out`` until the current scope's closer.

        Returns True if the closer was consumed, False when the sequence
        ended because an outer scope is being closed (or at end of input).
        """
        tokens, n, tree = self.tokens, self.n, self.tree
        my_depth = len(self.stack) - 1
        text_start = -1
        while self.i < n:
            i = self.i
            tok = tokens[i]
            kind = tok.kind
            if kind is _TEXT or (kind is _WS and (not self.inline_math or "\n" not in tok.lexeme)):
                if text_start < 0:
                    text_start = tok.start
                self.i += 1
                continue
            if kind in _CLOSERS or (kind is _CMD and tok.lexeme == "\\end"):
                depth = self._closer_depth(i)
                if depth == my_depth:
                    self._flush_text(out, text_start, tok.start)
                    self._close_current(i)
                    return True
                if depth >= 0:
                    self._flush_text(out, text_start, tok.start)
                    return False
                if kind is _MATH:
                    self._flush_text(out, text_start, tok.start)
                    text_start = -1
                    out.append(self._parse_math())
                elif kind is _CMD:
                    self._flush_text(out, text_start, tok.start)
                    text_start = -1
                    out.append(self._parse_command(stray_end=True))
                else:
                    if kind is _EG:
                        self.diag("error", "stray-close-group", tok.start, tok.end, "unmatched '}'")
                    if text_start < 0:
                        text_start = tok.start
                    self.i += 1
                continue
            if kind is _OO or (kind is _BG and len(self.stack) > MAX_DEPTH):
                if kind is _BG:
                    self.diag("error", "nesting-too-deep", tok.start, tok.end, "group nesting too deep")
                if text_start < 0:
                    text_start = tok.start
                self.i += 1
                continue
            self._flush_text(out, text_start, tok.start)
            text_start = -1
            if kind is _COMMENT:
                node = Node(NodeKind.COMMENT, tree, tok.start)
                node.end = tok.end
                out.append(node)
                self.i += 1
            elif kind is _CMD:
                if tok.lexeme == "\\begin":
                    out.append(self._parse_begin())
                else:
                    out.append(self._parse_command())
            else:  # BEGIN_GROUP
                out.append(self._parse_block(i, "{"))
        self._flush_text(out, text_start, len(self.text))
        return False

    def _flush_text(self, out: list[Node], start: int, end: int) -> None:
        if start >= 0 and end > start:
            node = Node(NodeKind.TEXT, self.tree, start)
            node.end = end
            out.append(node)

    def _close_current(self, i: int) -> None:
        """Consume the closer at ``i`` for the innermost scope."""
        scope = self.stack[-1]
        tok = self.tokens[i]
        node = scope.node
        if scope.kind == "env":
            end_cmd = self._parse_command()
            node.footer_start = tok.start
            node.end = end_cmd.end
        elif scope.kind == "math" and tok.kind is _WS:
            node.end = tok.start
            node.closed = False
            self.diag("warning", "unterminated-math", node.start, node.start + len(scope.key),
                      "math closed at end of line")
        else:
            node.end = tok.end
            self.i = i + 1

    def _unclosed(self, scope: _Scope, end: int) -> None:
        node = scope.node
        node.end = end
        node.closed = False
        if scope.kind == "env":
            node.footer_start = end
            self.diag("error", "unclosed-environment", node.start, node.header_end,
                      f"environment '{node.name}' is never closed")
        elif scope.kind == "group":
            self.diag("error", "unclosed-group", node.start, node.start + 1, "unclosed '{'")
        elif scope.kind == "math":
            self.diag("warning", "unterminated-math", node.start, node.start + len(scope.key),
                      "unterminated math")
        elif scope.kind == "option":
            self.diag("error", "unclosed-option", node.start, node.start + 1, "unclosed '['")

    def _run_scope(self, scope: _Scope, out: list[Node]) -> None:
        self.stack.append(scope)
        closed = self.parse_seq(out)
        self.stack.pop()
        if not closed:
            end = self.tokens[self.i].start if self.i < self.n else len(self.text)
            self._unclosed(scope, end)

    def _parse_block(self, i: int, delim: str) -> Node:
        tok = self.tokens[i]
        node = Node(NodeKind.GROUP, self.tree, tok.start)
        node.delim = delim
        self.i = i + 1
        scope = _Scope("group", None, node) if delim == "{" else _Scope("option", self.matches[i], node)
        self._run_scope(scope, node.children)
        return node

    def _parse_math(self) -> Node:
        tok = self.tokens[self.i]
        node = Node(NodeKind.MATH, self.tree, tok.start)
        node.delim = tok.lexeme
        self.i += 1
        inline = tok.lexeme == "$"
        self.inline_math += inline
        self._run_scope(_Scope("math", tok.lexeme, node), node.children)
        self.inline_math -= inline
        return node

    def _parse_args(self, node: Node, limits: tuple[int, int] | None) -> None:
        n_opt = n_mand = 0
        max_opt, max_mand = limits if limits is not None else (1 << 30, 1 << 30)
        tokens = self.tokens
        while True:
            j = self._skip_trivia(self.i)
            if j >= self.n:
                break
            tok = tokens[j]
            if tok.kind is _BG and n_mand < max_mand and len(self.stack) <= MAX_DEPTH:
                node.args.append(self._parse_block(j, "{"))
                n_mand += 1
            elif tok.kind is _OO and n_opt < max_opt and j in self.matches:
                node.args.append(self._parse_block(j, "["))
                n_opt += 1
            else:
                break
            node.end = node.args[-1].end

    def _parse_command(self, stray_end: bool = False) -> Node:
        tok = self.tokens[self.i]
        node = Node(NodeKind.COMMAND, self.tree, tok.start, tok.lexeme[1:])
        node.end = node.name_end = tok.end
        self.i += 1
        self._parse_args(node, SIGNATURES.get(node.name))
        if stray_end:
            name = node.args[0].inner if node.args else "?"
            self.diag("error", "stray-end", node.start, node.end, f"\\end{{{name}}} without \\begin")
            node.kind = NodeKind.TEXT
            node.args = []
        return node

    def _parse_begin(self) -> Node:
        tok = self.tokens[self.i]
        name = self._peek_env_name(self.i)
        if name is None:
            node = self._parse_command()
            self.diag("error", "malformed-begin", node.start, node.end, "\\begin without environment name")
            return node
        node = Node(NodeKind.ENVIRONMENT, self.tree, tok.start, name)
        self.i += 1
        # the {name} block
        j = self._skip_trivia(self.i)
        name_block = self._parse_block(j, "{")
        node.header_end = name_block.end
        opts = 0
        while True:
            j = self._skip_trivia(self.i)
            if j < self.n and self.tokens[j].kind is _OO and j in self.matches and opts < 1:
                node.args.append(self._parse_block(j, "["))
                node.header_end = node.args[-1].end
                opts += 1
            else:
                break
        self._run_scope(_Scope("env", name, node), node.children)
        return node


@contextmanager
def paused_gc() -> Iterator[None]:
    """Suspend the cyclic collector while building many small acyclic objects."""
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def parse(text: str) -> DocumentTree:
    with paused_gc():
        tree = DocumentTree(text)
        tree.tokens = tokenize(text, tree.lines)
        _Parser(tree).parse()
    return tree


def arity_of_symdef(node: Node) -> int:
    if node.kind is not NodeKind.COMMAND or node.name != "symdef":
        raise MalformedSymdef(f"not a \\symdef command: {node!r}")
    if not node.mandatory_args:
        raise MalformedSymdef("\\symdef without a name argument")
    for key, value in node.options:
        if key == "" and value.isdigit():
            return int(value)
    return 0


_WS_RUN = re.compile(r"\s+")


def plain_text(text: str) -> str:
    """Strip markup: commands become their bare names, comments and delimiters vanish."""
    pieces = []
    for m in _TOKEN_RE.finditer(text):
        group = m.lastgroup
        if group == "text" or group == "ws":
            pieces.append(m.group())
        elif group == "cmd":
            name = m.group()[1:].rstrip("*")
            pieces.append(f" {name} " if name.isalpha() else " ")
        elif group != "comment":
            pieces.append(" ")
    return _WS_RUN.sub(" ", "".join(pieces)).strip()
