import numpy as np
import pytest

from mcox.grid import CellState, GridMap
from mcox.rng import SplitMix64


def grid_from_rows(rows: list[str], resolution: float = 1.0) -> GridMap:
    """Build a map from ASCII art rows: '#' occupied, '.' free, '?' unknown."""
    lut = {"#": CellState.OCCUPIED, ".": CellState.FREE, "?": CellState.UNKNOWN}
    cells = np.array([[lut[ch] for ch in row] for row in rows], dtype=np.int8)
    return GridMap(cells, resolution)


def random_walled_grid(seed: int, height: int, width: int, wall_prob: float = 0.25) -> GridMap:
    """Seeded random map of free/occupied cells with a guaranteed free center."""
    rng = SplitMix64(seed)
    cells = np.empty((height, width), dtype=np.int8)
    for r in range(height):
        for c in range(width):
            cells[r, c] = (
                CellState.OCCUPIED if rng.uniform() < wall_prob else CellState.FREE
            )
    cells[height // 2, width // 2] = CellState.FREE
    return GridMap(cells)


def random_belief_grid(seed: int, height: int, width: int) -> GridMap:
    """Seeded random belief with all three cell states present."""
    rng = SplitMix64(seed)
    cells = np.empty((height, width), dtype=np.int8)
    states = (CellState.UNKNOWN, CellState.FREE, CellState.OCCUPIED)
    weights = (0.35, 0.45, 0.20)
    for r in range(height):
        for c in range(width):
            u = rng.uniform()
            cells[r, c] = (
                states[0] if u < weights[0]
                else states[1] if u < weights[0] + weights[1]
                else states[2]
            )
    cells[height // 2, width // 2] = CellState.FREE
    return GridMap(cells)


@pytest.fixture
def open_grid():
    def _make(height: int, width: int) -> GridMap:
        return GridMap(np.zeros((height, width), dtype=np.int8))

    return _make
