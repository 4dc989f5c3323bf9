"""Random edits and synthetic corpora for property tests and benchmark scripts."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .source_model import DocumentUri, LineIndex, TextEdit, Workspace

ALPHABET = "abcdefgh xyzRS\n,.=+-0123"
MARKUP = ["\\", "{", "}", "[", "]", "$", "%", "\\symdef{q}{r}", "\\importmodule{sets}",
          "\\end{module}", "\\begin{module}[id=zz]", "\\Reals", "\\inset{a}{b}", "\\verb|x|"]


@dataclass
class EditConfig:
    min_len: int = 1
    max_len: int = 20
    backslash_rate: float = 0.3
    delete_rate: float = 0.4


def random_edit(rng: random.Random, uri: DocumentUri, text: str, cfg: EditConfig = EditConfig()) -> TextEdit:
    """One random insertion or deletion of ``min_len..max_len`` characters.

    With probability ``backslash_rate`` the edit is an insertion containing a
    backslash (or a deletion starting at one when the text has any).
    """
    lines = LineIndex(text)
    n = len(text)
    size = rng.randint(cfg.min_len, cfg.max_len)
    wants_bs = rng.random() < cfg.backslash_rate
    if rng.random() < cfg.delete_rate and n > 0:
        if wants_bs and "\\" in text:
            slashes = [i for i, ch in enumerate(text) if ch == "\\"]
            a = rng.choice(slashes)
        else:
            a = rng.randrange(n)
        b = min(n, a + size)
        return TextEdit(uri, lines.range(a, b), "")
    a = rng.randint(0, n)
    if wants_bs:
        piece = rng.choice(MARKUP)
        if "\\" not in piece:
            piece = "\\" + piece
        filler = "".join(rng.choice(ALPHABET) for _ in range(max(0, size - len(piece))))
        cut = rng.randint(0, len(filler))
        rep = (filler[:cut] + piece + filler[cut:])[:max(size, piece.index("\\") + 1)]
    else:
        rep = "".join(rng.choice(ALPHABET) for _ in range(size))
    return TextEdit(uri, lines.range(a, a), rep)


def random_edit_in(rng: random.Random, workspace: Workspace, cfg: EditConfig = EditConfig()) -> TextEdit:
    uri = rng.choice(sorted(workspace.documents))
    return random_edit(rng, uri, workspace.documents[uri].text, cfg)


def letters(n: int) -> str:
    """``n`` spelled in base 26 with letters, since command names cannot hold digits."""
    out = ""
    while True:
        n, r = divmod(n, 26)
        out = chr(ord("a") + r) + out
        if not n:
            return out


def generated_document(target_bytes: int = 50_000, seed: int = 0) -> str:
    """A large sTeX document: many modules with symdefs, imports and definitions."""
    rng = random.Random(seed)
    parts: list[str] = []
    size = 0
    k = 0
    while size < target_bytes:
        tag = letters(k)
        lines = [f"\\section{{Part {k}}}", f"\\begin{{module}}[id=m{k}]"]
        if k:
            lines.append(f"  \\importmodule{{m{rng.randrange(k)}}}")
        names = [f"sym{tag}{suffix}" for suffix in ("A", "B", "C", "D")]
        for j, name in enumerate(names):
            arity = j % 3
            body = "".join(f"#{i + 1}" for i in range(arity)) or "\\mathrm{" + name + "}"
            lines.append(f"  \\symdef{{{name}}}[{arity}]{{{body}}}" if arity else f"  \\symdef{{{name}}}{{{body}}}")
        lines.append(f"  \\begin{{definition}}[id={names[0]}.def,for={names[0]},title=Concept {k}]")
        for j in range(4):
            lines.append(f"    The object $\\{names[j]}$ relates")
            lines.append(f"    to \\textbf{{plain}} text % remark {j}")
        lines.append("  \\end{definition}")
        lines.append("  Running prose with {grouped} words and $x^2$.")
        lines.append("\\end{module}")
        block = "\n".join(lines) + "\n"
        parts.append(block)
        size += len(block.encode())
        k += 1
    return "".join(parts)


NAME_POOL = ("alpha", "beta", "gamma", "delta", "eps", "zeta")


def random_corpus(rng: random.Random, n_modules: int = 30, n_files: int = 6,
                  pool: tuple[str, ...] = NAME_POOL) -> dict[str, str]:
    """Random multi-file corpus whose modules share symbol names.

    Module ``k`` imports up to two earlier modules and uses names from
    ``pool``; the first two modules both define ``pool[0]`` so duplicate
    names across definers always exist.
    """
    files: dict[str, list[str]] = {f"f{i}.tex": [] for i in range(min(n_files, n_modules))}
    names = sorted(files)
    for k in range(n_modules):
        lines = [f"\\begin{{module}}[id=m{k}]"]
        if k:
            for t in sorted(rng.sample(range(k), min(k, rng.randint(0, 2)))):
                lines.append(f"  \\importmodule{{m{t}}}")
        defined = set(rng.sample(pool, rng.randint(1, 3)))
        if k < 2:
            defined.add(pool[0])
        for name in sorted(defined):
            arity = rng.randint(0, 2)
            lines.append(f"  \\symdef{{{name}}}[{arity}]{{x}}" if arity else f"  \\symdef{{{name}}}{{x}}")
        for _ in range(rng.randint(1, 4)):
            used = rng.sample(pool, 2)
            lines.append(f"  Text with $\\{used[0]}$ and $\\{used[1]} + \\{used[0]}$.")
        lines.append("\\end{module}")
        files[names[k % len(names)]].append("\n".join(lines))
    return {name: "\n".join(blocks) + "\n" for name, blocks in files.items()}
