import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from molrewards.criteria import load_default_registry
from molrewards.reasoning import load_default_lexicon


@pytest.fixture(scope="session")
def registry():
    return load_default_registry()


@pytest.fixture(scope="session")
def lexicon():
    return load_default_lexicon()
