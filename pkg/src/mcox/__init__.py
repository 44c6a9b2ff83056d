"""Multi-robot exploration and object-search simulator."""

from .grid import (
    Cell,
    CellState,
    GridMap,
    RobotState,
    coverage_fraction,
    exploration_complete,
    lidar_scan,
    merge,
    new_belief,
    reachable_free,
)
from .engine import EpisodeConfig, RunRecord, run_episode
from .harness import ExperimentSpec, SummaryTable, compare, run_experiment

__version__ = "0.1.0"

__all__ = [
    "Cell",
    "CellState",
    "GridMap",
    "RobotState",
    "EpisodeConfig",
    "ExperimentSpec",
    "RunRecord",
    "SummaryTable",
    "compare",
    "coverage_fraction",
    "exploration_complete",
    "lidar_scan",
    "merge",
    "new_belief",
    "reachable_free",
    "run_episode",
    "run_experiment",
]
