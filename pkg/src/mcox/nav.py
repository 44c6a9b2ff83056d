"""Grid navigation: A* planning, BFS distance fields, path following.

Planning treats unknown cells as non-traversable and other robots as
circular obstacles of radius `D_SAFE` (Euclidean test on cell centers, so
the default radius blocks exactly the occupant cell).  Paths are
4-connected and provably shortest; determinism comes from a fixed neighbor
order and a (f, row, col) expansion priority.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .grid import Cell, CellState, GridError, GridMap

D_SAFE = 1.0

_NEIGHBORS = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass(frozen=True)
class Obstacle:
    """Circular no-go disk around another robot."""

    center: Cell
    radius: float = D_SAFE


class UnreachableError(GridError):
    """Goal is occupied, out of bounds, or cut off in the current belief."""


def obstacle_mask(shape: tuple[int, int], obstacles: Sequence[Obstacle]) -> np.ndarray:
    """Cells strictly inside any obstacle disk."""
    blocked = np.zeros(shape, dtype=bool)
    for obs in obstacles:
        r0, c0 = obs.center
        rad = int(np.ceil(obs.radius))
        for dr in range(-rad, rad + 1):
            for dc in range(-rad, rad + 1):
                if dr * dr + dc * dc < obs.radius * obs.radius:
                    r, c = r0 + dr, c0 + dc
                    if 0 <= r < shape[0] and 0 <= c < shape[1]:
                        blocked[r, c] = True
    return blocked


def try_plan_path(
    belief: GridMap,
    start: Cell,
    goal: Cell,
    obstacles: Sequence[Obstacle] = (),
) -> list[Cell] | None:
    """Shortest free path from start to goal, or None if unreachable.

    A* with Manhattan heuristic over cells that are free in the belief and
    outside every obstacle disk; ties expand the smaller (row, col) first.
    """
    start, goal = Cell(*start), Cell(*goal)
    if not belief.in_bounds(start) or belief.state(start) is not CellState.FREE:
        raise GridError(f"path start {start} is not a free cell")
    blocked = obstacle_mask(belief.cells.shape, obstacles)
    if blocked[start.row, start.col]:
        raise GridError(f"path start {start} lies inside an obstacle disk")
    if not belief.in_bounds(goal):
        return None
    passable = belief.free_mask() & ~blocked
    if not passable[goal.row, goal.col]:
        return None
    if start == goal:
        return [start]

    h, w = belief.cells.shape
    g_cost = np.full((h, w), -1, dtype=np.int32)
    g_cost[start.row, start.col] = 0
    parent: dict[Cell, Cell] = {}
    heap = [(abs(start.row - goal.row) + abs(start.col - goal.col), start.row, start.col)]
    while heap:
        _, r, c = heapq.heappop(heap)
        if (r, c) == goal:
            break
        g_here = int(g_cost[r, c])
        for dr, dc in _NEIGHBORS:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or not passable[nr, nc]:
                continue
            g_new = g_here + 1
            if g_cost[nr, nc] == -1 or g_new < g_cost[nr, nc]:
                g_cost[nr, nc] = g_new
                parent[Cell(nr, nc)] = Cell(r, c)
                f = g_new + abs(nr - goal.row) + abs(nc - goal.col)
                heapq.heappush(heap, (f, nr, nc))
    if Cell(goal.row, goal.col) not in parent:
        return None
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def plan_path(
    belief: GridMap,
    start: Cell,
    goal: Cell,
    obstacles: Sequence[Obstacle] = (),
) -> list[Cell]:
    """Like try_plan_path but raises UnreachableError instead of None."""
    path = try_plan_path(belief, start, goal, obstacles)
    if path is None:
        raise UnreachableError(f"goal {tuple(goal)} unreachable from {tuple(start)}")
    return path


def is_reachable(
    belief: GridMap,
    start: Cell,
    goal: Cell,
    obstacles: Sequence[Obstacle] = (),
) -> bool:
    return try_plan_path(belief, start, goal, obstacles) is not None


def advance(
    path: list[Cell], speed: int, position: Cell | None = None
) -> tuple[Cell | None, list[Cell]]:
    """Follow `path` (head = current cell) by up to `speed` moves.

    Returns (new position, remaining path starting at it).  Never skips path
    cells; an empty path is a no-op that reports `position` unchanged.
    """
    if speed < 1:
        raise ValueError("speed must be >= 1")
    if not path:
        return position, []
    k = min(speed, len(path) - 1)
    return path[k], path[k:]


def bfs_distances(free: np.ndarray, sources: Iterable[Cell]) -> np.ndarray:
    """4-connected hop distance from the nearest source over free cells.

    Returns int32 array with -1 for unreachable cells.  Sources on non-free
    cells are ignored.
    """
    dist = np.full(free.shape, -1, dtype=np.int32)
    frontier = np.zeros(free.shape, dtype=bool)
    for r, c in sources:
        if free[r, c]:
            frontier[r, c] = True
    d = 0
    h, w = free.shape
    while frontier.any():
        dist[frontier] = d
        grown = np.zeros_like(frontier)
        grown[:-1, :] |= frontier[1:, :]
        grown[1:, :] |= frontier[:-1, :]
        grown[:, :-1] |= frontier[:, 1:]
        grown[:, 1:] |= frontier[:, :-1]
        frontier = grown & free & (dist == -1)
        d += 1
    return dist
