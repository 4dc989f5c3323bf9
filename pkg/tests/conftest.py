from pathlib import Path

import pytest

from stexkit.analysis import Analysis
from stexkit.source_model import DocumentUri, ModuleUri, Workspace, scan_workspace

FIXTURES = Path(__file__).parent / "fixtures"
REALS_COURSE = FIXTURES / "reals_course"
CORPUS5 = FIXTURES / "corpus5"
ABC = FIXTURES / "abc"
GOLDEN = Path(__file__).parent / "golden"

MAIN = DocumentUri("course/main.tex")
REALS = ModuleUri(MAIN, "reals")
SETS = ModuleUri(DocumentUri("background/sets.tex"), "sets")
BASE = ModuleUri(DocumentUri("background/base.tex"), "base")


def analyze_dir(path: Path) -> Analysis:
    return Analysis.build(scan_workspace(path))


def analyze_texts(texts: dict[str, str]) -> Analysis:
    return Analysis.build(Workspace.from_texts(texts))


def rebuilt(analysis: Analysis) -> Analysis:
    """Fresh analysis of the current texts of ``analysis``'s workspace."""
    return analyze_texts({d.value: t for d, t in analysis.workspace.texts().items()})


@pytest.fixture
def reals_course() -> Analysis:
    return analyze_dir(REALS_COURSE)


@pytest.fixture
def corpus5() -> Analysis:
    return analyze_dir(CORPUS5)


@pytest.fixture
def abc() -> Analysis:
    return analyze_dir(ABC)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
