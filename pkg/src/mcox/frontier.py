"""Frontier detection and candidate selection.

Frontier cells are free belief cells touching unknown space.  Candidates
for planning are chosen by sampling frontiers and ranking them with the
utility

    U(g) = s(g) - lambda * c(g)

where s(g) is the fraction of the sensing disk around g that is currently
unknown (occlusion-aware, unknown does not block) and c(g) is the path
distance from the closest robot (Euclidean fallback when no path exists in
the belief).  A minimum-separation greedy filter keeps the top candidates
spatially diverse.  The mean-shift clusterer used by the cluster-greedy
baseline also lives here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Cell, GridMap, RobotState, _disk_visibility, _shifted
from .nav import bfs_distances
from .rng import SplitMix64


@dataclass(frozen=True)
class FrontierCandidate:
    cell: Cell
    info_gain: float
    cost: float
    utility: float


@dataclass(frozen=True)
class FrontierParams:
    """Knobs for sampling-based frontier selection."""

    sample_count: int = 200   # frontier cells drawn per planning cycle
    keep_count: int = 8       # candidates surviving ranking
    cost_weight: float = 0.01 # lambda in the utility
    min_separation: float = 5.0

    def __post_init__(self):
        if not (self.sample_count >= self.keep_count >= 1):
            raise ValueError("need sample_count >= keep_count >= 1")
        if self.cost_weight < 0 or self.min_separation < 0:
            raise ValueError("cost_weight and min_separation must be >= 0")


def frontier_cells(belief: GridMap) -> set[Cell]:
    """Free belief cells with at least one unknown 4-neighbor."""
    free = belief.free_mask()
    unknown = belief.unknown_mask()
    near_unknown = np.zeros_like(unknown)
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        near_unknown |= _shifted(unknown, dr, dc)
    return {Cell(int(r), int(c)) for r, c in np.argwhere(free & near_unknown)}


def info_gains(belief: GridMap, cells: list[Cell], radius: int) -> np.ndarray:
    """Batched information gain for several cells at one sensing radius.

    Gain is (# visible unknown cells in the disk, center excluded) over
    (# in-bounds disk cells, center excluded); only occupied cells occlude.
    """
    if not cells:
        return np.zeros(0)
    centers = np.array(cells, dtype=np.int32)
    abs_cells, inb, visible = _disk_visibility(belief.cells, centers, radius)
    h, w = belief.cells.shape
    rr = np.clip(abs_cells[..., 0], 0, h - 1)
    cc = np.clip(abs_cells[..., 1], 0, w - 1)
    unknown = belief.unknown_mask()[rr, cc]
    num = (visible & unknown)[:, 1:].sum(axis=1)
    den = inb[:, 1:].sum(axis=1)
    out = np.zeros(len(cells))
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


def info_gain(belief: GridMap, cell: Cell, radius: int) -> float:
    """Fraction of the sensing disk around `cell` that is unknown."""
    if not belief.in_bounds(cell):
        raise ValueError(f"cell {cell} out of bounds")
    return float(info_gains(belief, [Cell(*cell)], radius)[0])


def _separated(candidates, min_sep: float):
    """Greedy pass keeping entries at pairwise Euclidean distance >= min_sep."""
    kept = []
    for cand in candidates:
        cell = cand.cell if hasattr(cand, "cell") else cand
        ok = True
        for other in kept:
            ocell = other.cell if hasattr(other, "cell") else other
            if math.hypot(cell[0] - ocell[0], cell[1] - ocell[1]) < min_sep:
                ok = False
                break
        if ok:
            kept.append(cand)
    return kept


def rank_and_select(
    belief: GridMap,
    robots: list[RobotState],
    params: FrontierParams,
    seed: int,
) -> list[FrontierCandidate]:
    """Sample, score, and filter frontier cells into waypoint candidates.

    Samples min(sample_count, #frontiers) cells without replacement, scores
    each with U = s - lambda*c, then greedily accepts by descending U
    (ties by (row, col)) subject to the separation floor, returning at most
    keep_count candidates.  Deterministic per seed.
    """
    fronts = sorted(frontier_cells(belief))
    if not fronts:
        return []
    rng = SplitMix64(seed)
    k = min(params.sample_count, len(fronts))
    sampled = [fronts[i] for i in rng.sample_indices(len(fronts), k)]

    free = belief.free_mask()
    fields = [bfs_distances(free, [robot.position]) for robot in robots]

    def nearest(cell: Cell) -> tuple[float, RobotState]:
        best = None
        for robot, field in zip(robots, fields):
            d = int(field[cell.row, cell.col])
            if d >= 0 and (best is None or d < best[0]):
                best = (float(d), robot)
        if best is None:
            for robot in robots:
                d = math.hypot(
                    cell.row - robot.position.row, cell.col - robot.position.col
                )
                if best is None or d < best[0]:
                    best = (d, robot)
        return best

    by_range: dict[int, list[int]] = {}
    costs: list[float] = []
    for i, cell in enumerate(sampled):
        cost, robot = nearest(cell)
        costs.append(cost)
        by_range.setdefault(robot.detect_range, []).append(i)
    gains = np.zeros(len(sampled))
    for radius, idxs in by_range.items():
        gains[idxs] = info_gains(belief, [sampled[i] for i in idxs], radius)

    scored = [
        FrontierCandidate(cell, float(gains[i]), costs[i],
                          float(gains[i]) - params.cost_weight * costs[i])
        for i, cell in enumerate(sampled)
    ]
    scored.sort(key=lambda c: (-c.utility, c.cell))
    return _separated(scored, params.min_separation)[: params.keep_count]


def mean_shift_frontiers(
    belief: GridMap,
    bandwidth: float = 6.0,
    min_cluster: int = 4,
    max_iter: int = 100,
    tol: float = 0.01,
) -> list[Cell]:
    """Cluster frontier cells by flat-kernel mean shift.

    Points iterate toward the mean of neighbors within `bandwidth`; modes
    closer than bandwidth/2 are merged, clusters smaller than `min_cluster`
    are dropped (which is what makes this baseline overlook small frontier
    patches), and each surviving mode snaps to its nearest frontier cell.
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    fronts = sorted(frontier_cells(belief))
    if not fronts:
        return []
    pts = np.array(fronts, dtype=float)
    shifted = pts.copy()
    bw2 = bandwidth * bandwidth
    for _ in range(max_iter):
        d2 = ((shifted[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        nbr = d2 <= bw2
        means = (nbr[:, :, None] * pts[None, :, :]).sum(axis=1) / nbr.sum(
            axis=1, keepdims=True
        )
        delta = np.linalg.norm(means - shifted, axis=1).max()
        shifted = means
        if delta < tol:
            break

    modes: list[np.ndarray] = []
    members: list[list[int]] = []
    half = bandwidth / 2.0
    for i in range(len(fronts)):
        placed = False
        for m, mode in enumerate(modes):
            if np.linalg.norm(shifted[i] - mode) < half:
                members[m].append(i)
                placed = True
                break
        if not placed:
            modes.append(shifted[i])
            members.append([i])

    reps: list[Cell] = []
    for mode_members in members:
        if len(mode_members) < min_cluster:
            continue
        center = shifted[mode_members].mean(axis=0)
        best = min(
            fronts,
            key=lambda f: ((f.row - center[0]) ** 2 + (f.col - center[1]) ** 2, f),
        )
        if best not in reps:
            reps.append(best)
    return sorted(reps)
