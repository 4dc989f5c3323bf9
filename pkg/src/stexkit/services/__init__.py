"""Authoring services over an analyzed workspace."""

from .common import (
    AlreadyReachable,
    EmptyQuery,
    IdCollision,
    InvalidName,
    NameCollision,
    RangeNotAStructure,
    RenamePlan,
    UnknownSymbol,
    apply_plan,
    preview_text,
)
from .completion import CompletionItem, complete_at, load_builtin_macros, retrieve_all, scope_at
from .export import OutlineNode, export_omdoc_skeleton, export_theory_graph, outline
from .imports import insert_import_for, lint_imports, minimize_imports
from .refactor import rename_module, rename_symbol, split_module
from .search import SearchHit, concept_search

__all__ = [
    "AlreadyReachable", "CompletionItem", "EmptyQuery", "IdCollision", "InvalidName",
    "NameCollision", "OutlineNode", "RangeNotAStructure", "RenamePlan", "SearchHit",
    "UnknownSymbol", "apply_plan", "complete_at", "concept_search", "export_omdoc_skeleton",
    "export_theory_graph", "insert_import_for", "lint_imports", "load_builtin_macros",
    "minimize_imports", "outline", "preview_text", "rename_module", "rename_symbol",
    "retrieve_all", "scope_at", "split_module",
]
