"""Concept search: find semantic macros near definitions that mention the query terms."""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass

from ..analysis import Analysis
from ..source_model import ModuleUri
from ..spotters import DefinitionBlock, SymdefDecl
from .common import EmptyQuery

FOR_WEIGHT = 3
USE_WEIGHT = 2
MODULE_WEIGHT = 1


@dataclass(frozen=True)
class SearchHit:
    symbol: SymdefDecl
    score: float
    evidence: tuple[tuple[DefinitionBlock, tuple[str, ...]], ...]

    def to_json(self) -> dict:
        return {
            "name": self.symbol.name,
            "definingModule": str(self.symbol.defining_module),
            "score": self.score,
            "evidence": [
                {"definition": b.id, "module": str(b.in_module), "range": str(b.range), "terms": list(terms)}
                for b, terms in self.evidence
            ],
        }


def _term_pattern(term: str) -> re.Pattern:
    return re.compile(r"(?<!\w)" + re.escape(term) + r"(?!\w)", re.IGNORECASE)


def concept_search(analysis: Analysis, terms: list[str]) -> list[SearchHit]:
    """Rank symdefs by how close they sit to definitions matching ``terms``.

    A matching block gives each related symbol its strongest relation weight
    (``for=`` key 3, used inside the block 2, same module 1) times the number
    of distinct terms the block matches; scores add up over blocks.
    """
    terms = sorted({t.strip().lower() for t in terms if t and t.strip()})
    if not terms:
        raise EmptyQuery("query has no terms")
    patterns = [(t, _term_pattern(t)) for t in terms]
    scores: dict[tuple[str, ModuleUri], float] = defaultdict(float)
    evidence: dict[tuple[str, ModuleUri], list] = defaultdict(list)
    for doc in sorted(analysis.results):
        result = analysis.results[doc]
        for block in result.definitions:
            haystack = block.text + " " + (block.title or "")
            matched = tuple(t for t, p in patterns if p.search(haystack))
            if not matched:
                continue
            weights: dict[tuple[str, ModuleUri], int] = {}

            def offer(key: tuple[str, ModuleUri], weight: int) -> None:
                if weights.get(key, 0) < weight:
                    weights[key] = weight

            for s in analysis.module_symdefs(block.in_module):
                offer((s.name, s.defining_module), MODULE_WEIGHT)
            for use in analysis.uses.get(doc, ()):
                if use.resolved_definer is not None and block.range.contains(use.range):
                    offer((use.name, use.resolved_definer), USE_WEIGHT)
            for name in block.for_symbols:
                definer = analysis.resolve_name(block.in_module, name)
                if definer is not None:
                    offer((name, definer), FOR_WEIGHT)
            for key, weight in weights.items():
                scores[key] += weight * len(matched)
                evidence[key].append((block, matched))

    hits = []
    for (name, definer), score in scores.items():
        decl = next(s for s in analysis.module_symdefs(definer) if s.name == name)
        hits.append(SearchHit(decl, score, tuple(evidence[(name, definer)])))
    hits.sort(key=lambda h: (-h.score, h.symbol.name, h.symbol.defining_module))
    return hits
