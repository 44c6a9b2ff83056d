"""Classical waypoint coordinators.

Three baselines built from the same candidate machinery:

  * sample-greedy: each robot takes its closest unassigned utility-ranked
    frontier, one waypoint per robot per cycle;
  * meanshift-greedy: same greedy rule over mean-shift cluster
    representatives;
  * sample-dvc: candidates are split into per-robot Voronoi regions and
    each robot tours its region along an (open) traveling-salesman order.

Assignments never hand the same waypoint to two robots in one cycle, and
robots are always processed in ascending id for determinism.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Sequence

from .frontier import FrontierCandidate
from .grid import Cell, GridMap, RobotState
from .nav import bfs_distances

Assignment = dict[int, list[Cell]]


def _as_cells(candidates: Iterable) -> list[Cell]:
    return [
        Cell(*(c.cell if isinstance(c, FrontierCandidate) or hasattr(c, "cell") else c))
        for c in candidates
    ]


def greedy_assign(
    candidates: Sequence, robots: list[RobotState], belief: GridMap
) -> Assignment:
    """One nearest unassigned candidate per robot, robots in id order.

    Suitability is shortest-path distance in the belief; candidates a robot
    cannot reach are skipped for that robot, and robots idle once the pool
    is exhausted.
    """
    cells = _as_cells(candidates)
    if not cells:
        return {robot.id: [] for robot in robots}
    free = belief.free_mask()
    assignment: Assignment = {}
    taken: set[Cell] = set()
    for robot in sorted(robots, key=lambda r: r.id):
        dist = bfs_distances(free, [robot.position])
        best = None
        for cell in cells:
            if cell in taken:
                continue
            d = int(dist[cell.row, cell.col])
            if d < 0:
                continue
            key = (d, cell)
            if best is None or key < best:
                best = key
        if best is None:
            assignment[robot.id] = []
        else:
            taken.add(best[1])
            assignment[robot.id] = [best[1]]
    return assignment


def voronoi_partition(
    candidates: Sequence[Cell], robots: list[RobotState]
) -> dict[int, list[Cell]]:
    """Each candidate goes to the Euclidean-nearest robot, ties to lower id."""
    if not robots:
        raise ValueError("need at least one robot")
    parts: dict[int, list[Cell]] = {robot.id: [] for robot in robots}
    ordered = sorted(robots, key=lambda r: r.id)
    for cell in _as_cells(candidates):
        best_id, best_d = None, None
        for robot in ordered:
            d = math.hypot(
                cell.row - robot.position.row, cell.col - robot.position.col
            )
            if best_d is None or d < best_d:
                best_id, best_d = robot.id, d
        parts[best_id].append(cell)
    return parts


def _distance_matrix(
    points: list[Cell], belief: GridMap
) -> list[list[int]]:
    free = belief.free_mask()
    n = len(points)
    mat = [[0] * n for _ in range(n)]
    for i, src in enumerate(points):
        dist = bfs_distances(free, [src])
        for j, dst in enumerate(points):
            mat[i][j] = int(dist[dst.row, dst.col])
    return mat


def _tour_cost(order: Sequence[int], mat: list[list[int]]) -> int:
    cost = mat[0][order[0]]
    for a, b in zip(order, order[1:]):
        cost += mat[a][b]
    return cost


def _two_opt(order: list[int], mat: list[list[int]]) -> list[int]:
    """First-improvement 2-opt on an open tour (index 0 of mat is the start)."""
    improved = True
    while improved:
        improved = False
        for i in range(len(order) - 1):
            for j in range(i + 1, len(order)):
                new = order[:i] + order[i : j + 1][::-1] + order[j + 1 :]
                if _tour_cost(new, mat) < _tour_cost(order, mat):
                    order = new
                    improved = True
    return order

# Exhaustive search stays tractable up to this many targets; beyond it the
# tour falls back to nearest-neighbor plus 2-opt.
EXACT_TOUR_LIMIT = 9


def tsp_tour(start: Cell, targets: Iterable[Cell], belief: GridMap) -> list[Cell]:
    """Open tour from `start` through all reachable targets.

    Distances are shortest-path lengths in the belief.  Exact (exhaustive
    permutations, ties broken by lexicographic waypoint sequence) for up to
    EXACT_TOUR_LIMIT targets; nearest-neighbor with 2-opt refinement beyond.
    Unreachable targets are dropped.
    """
    start = Cell(*start)
    goals = sorted({Cell(*t) for t in targets})
    reach = bfs_distances(belief.free_mask(), [start])
    kept = [g for g in goals if reach[g.row, g.col] >= 0]
    if not kept:
        return []
    points = [start] + kept
    mat = _distance_matrix(points, belief)
    idx = list(range(1, len(points)))

    if len(kept) <= EXACT_TOUR_LIMIT:
        best = min(
            itertools.permutations(idx),
            key=lambda order: (_tour_cost(order, mat), [points[i] for i in order]),
        )
        return [points[i] for i in best]

    order: list[int] = []
    here, remaining = 0, set(idx)
    while remaining:
        nxt = min(remaining, key=lambda j: (mat[here][j], points[j]))
        order.append(nxt)
        remaining.discard(nxt)
        here = nxt
    order = _two_opt(order, mat)
    return [points[i] for i in order]


def dvc_assign(
    candidates: Sequence, robots: list[RobotState], belief: GridMap
) -> Assignment:
    """Voronoi partition of the candidates, then a TSP tour per robot."""
    parts = voronoi_partition(_as_cells(candidates), robots)
    return {
        robot.id: tsp_tour(robot.position, parts[robot.id], belief)
        for robot in sorted(robots, key=lambda r: r.id)
    }
