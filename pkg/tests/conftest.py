import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from viewkeeper.datagen import GenParams, gen_dataset, university_catalog, university_views  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"

# Filled by test_acceptance.py, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def catalog():
    return university_catalog()


@pytest.fixture(scope="session")
def views():
    it, bba = university_views()
    return {"results_IT": it, "results_BBA": bba}


@pytest.fixture(scope="session")
def _uni_db():
    return gen_dataset(GenParams())


@pytest.fixture
def uni_db(_uni_db):
    """Default generated dataset; a fresh copy per test."""
    return _uni_db.copy()


@pytest.fixture(scope="session")
def uni_db_shared(_uni_db):
    """Read-only use only."""
    return _uni_db


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
