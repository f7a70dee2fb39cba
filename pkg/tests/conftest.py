import sys
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def fixture_command(script: str) -> str:
    """Command string for a bundled subprocess model."""
    return f"{sys.executable} {FIXTURES / script}"
