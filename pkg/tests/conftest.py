from pathlib import Path

import numpy as np
import pytest

from gpc.raster import bundled_atlas

DATA = Path(__file__).parent / "data"
NATURAL_IMAGES = sorted(DATA.glob("*_64.png"))

# cover/secret pairs used throughout the text experiments
TEXT_PAIRS = [
    ("ABCD", "ABCD"),
    ("HELLO", "THERE"),
    ("WELCOME", "GOODBYE"),
    ("WHERE", "THERE"),
    ("MORNING", "EVENING"),
]


@pytest.fixture(scope="session")
def payload_atlas():
    return bundled_atlas("payload")


@pytest.fixture(scope="session")
def text_atlas():
    return bundled_atlas("text")


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
