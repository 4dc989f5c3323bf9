"""Analysis engine and command-line tools for sTeX-style semantic LaTeX corpora."""

from .analysis import Analysis, analyze
from .parser import parse, tokenize
from .source_model import (
    DocumentUri,
    ModuleUri,
    SourcePosition,
    SourceRange,
    TextEdit,
    Workspace,
    apply_text_edit,
    scan_workspace,
)
from .spotters import SpotterRegistry, run_spotters

__all__ = [
    "Analysis", "DocumentUri", "ModuleUri", "SourcePosition", "SourceRange", "SpotterRegistry",
    "TextEdit", "Workspace", "analyze", "apply_text_edit", "parse", "run_spotters",
    "scan_workspace", "tokenize",
]

__version__ = "0.1.0"
