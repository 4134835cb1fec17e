import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from amrpointer.corpus import read_corpus

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture(scope="session")
def hand_corpus():
    return read_corpus(FIXTURES / "hand_corpus.amr")


@pytest.fixture(scope="session")
def figure_example(hand_corpus):
    return next(ex for ex in hand_corpus if ex.id == "fig-boy-go")


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES
