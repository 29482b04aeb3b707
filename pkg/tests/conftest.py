"""Shared fixtures: the three worked examples and small file writers."""

from pathlib import Path

import numpy as np
import pytest

from revpref.ingestion.dataset import DeterministicDataset, StochasticDataset
from revpref.stochastic.patches import enumerate_patches
from revpref.stochastic.types_matrix import enumerate_types


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run Monte Carlo experiments"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ---------------------------------------------------------------------------
# Deterministic examples
# ---------------------------------------------------------------------------


@pytest.fixture
def example1() -> DeterministicDataset:
    """GARP holds, GAPP fails."""
    return DeterministicDataset([[2.0, 1.0], [1.0, 2.0]], [[4.0, 0.0], [0.0, 1.0]])


@pytest.fixture
def example2() -> DeterministicDataset:
    """GAPP holds, GARP fails."""
    return DeterministicDataset([[2.0, 1.0], [1.0, 4.0]], [[2.0, 1.0], [0.0, 2.0]])


# ---------------------------------------------------------------------------
# Stochastic example: two crossing budgets with two patches each
# ---------------------------------------------------------------------------

CROSSING_PRICES = np.array([[2.0, 1.0], [1.0, 2.0]])

# normalized points, one per (budget, patch); patch 0 is Below, 1 is Above
BELOW_0 = np.array([0.45, 0.1])
ABOVE_0 = np.array([0.1, 0.8])
BELOW_1 = np.array([0.1, 0.45])
ABOVE_1 = np.array([0.8, 0.1])


def crossing_choices(counts: tuple[int, int, int, int], scales=(1.0, 2.5)) -> StochasticDataset:
    """Choices with ``counts`` = (below_0, above_0, below_1, above_1)."""
    b0, a0, b1, a1 = counts
    block0 = np.vstack([np.tile(BELOW_0, (b0, 1)), np.tile(ABOVE_0, (a0, 1))]) * scales[0]
    block1 = np.vstack([np.tile(BELOW_1, (b1, 1)), np.tile(ABOVE_1, (a1, 1))]) * scales[1]
    return StochasticDataset(CROSSING_PRICES, (block0, block1))


@pytest.fixture(scope="session")
def crossing_layout():
    return enumerate_patches(CROSSING_PRICES)


@pytest.fixture(scope="session")
def crossing_types(crossing_layout):
    return enumerate_types(crossing_layout)


@pytest.fixture
def rationalizable_choices() -> StochasticDataset:
    """Ten choices per budget with frequencies (2/5, 3/5) and (1/2, 1/2)."""
    return crossing_choices((4, 6, 5, 5))


@pytest.fixture
def violating_choices() -> StochasticDataset:
    """Frequencies (3/5, 2/5) and (1/2, 1/2): both Below patches too heavy."""
    return crossing_choices((6, 4, 5, 5))


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def write_text(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def example1_csv(tmp_path) -> Path:
    return write_text(tmp_path / "example1.csv", "p1,p2,x1,x2\n2,1,4,0\n1,2,0,1\n")


@pytest.fixture
def example2_csv(tmp_path) -> Path:
    return write_text(tmp_path / "example2.csv", "p1,p2,x1,x2\n2,1,2,1\n1,4,0,2\n")


def write_crossing_files(directory: Path, counts=(4, 6, 5, 5)) -> tuple[Path, Path]:
    """Long-format files of the crossing example with ``counts`` = (below_0, above_0, below_1, above_1)."""
    b0, a0, b1, a1 = counts
    lines = ["period,household,x1,x2"]
    h = 0
    for period, points in (
        ("1", [BELOW_0] * b0 + [ABOVE_0] * a0),
        ("2", [BELOW_1] * b1 + [ABOVE_1] * a1),
    ):
        for x in points:
            h += 1
            lines.append(f"{period},{h},{x[0] * 3},{x[1] * 3}")
    choices = write_text(directory / "choices.csv", "\n".join(lines) + "\n")
    prices = write_text(directory / "prices.csv", "period,p1,p2\n1,2,1\n2,1,2\n")
    return choices, prices


@pytest.fixture
def crossing_files(tmp_path):
    """Long-format files of the rationalizable crossing example."""
    return write_crossing_files(tmp_path)
