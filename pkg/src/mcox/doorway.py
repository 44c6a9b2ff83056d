"""Geometric doorway detection.

Sampled frontier cells are probed with rays in Q evenly spaced directions.
When an opposite-direction ray pair hits occupied cells on both sides at
similar distances and the free span between the hits is narrow enough, the
span midpoint is marked as a doorway candidate.  Candidates with little
unknown space around them are discarded, and a minimum-separation filter
(higher information gain wins) keeps the output spatially diverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .frontier import _separated, frontier_cells, info_gain
from .grid import Cell, CellState, GridMap
from .rng import SplitMix64

# Opposite hits count as symmetric when their distances differ by at most
# this many cells; exact equality is too brittle on a grid.
SYMMETRY_TOLERANCE = 2.0


@dataclass(frozen=True)
class DoorwayCandidate:
    cell: Cell
    axis_deg: float
    width: float
    info_gain: float


@dataclass(frozen=True)
class DoorwayParams:
    sample_count: int = 100    # frontier cells probed
    directions: int = 8        # Q ray directions, evenly spaced
    max_width: float = 5.0     # widest free span still counted as a doorway
    ray_length: float = 8.0    # cells probed along each ray
    min_gain: float = 0.15     # information-gain floor
    min_separation: float = 5.0

    def __post_init__(self):
        if self.directions < 4 or self.directions % 2 != 0:
            raise ValueError("directions must be even and >= 4")
        if self.max_width < 2:
            raise ValueError("max_width must be >= 2")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


def _ray_cells(origin: Cell, angle: float, length: float) -> list[Cell]:
    """Cells along a ray from origin (excluded), nearest first.

    Marched at half-cell steps with half-up rounding; duplicates collapsed.
    Angle 0 points along +col, 90 degrees along -row.
    """
    dr = -math.sin(math.radians(angle))
    dc = math.cos(math.radians(angle))
    cells: list[Cell] = []
    seen = {(origin[0], origin[1])}
    t = 0.0
    limit = length + 1.0
    while t <= limit:
        t += 0.5
        r = math.floor(origin[0] + t * dr + 0.5)
        c = math.floor(origin[1] + t * dc + 0.5)
        if (r, c) not in seen:
            seen.add((r, c))
            cells.append(Cell(r, c))
    return cells


def _first_wall_hit(
    belief: GridMap, origin: Cell, angle: float, length: float
) -> tuple[Cell, float] | None:
    """First occupied cell within `length` along the ray, with its distance.

    Unknown cells do not block; the march stops at the map edge.
    """
    for cell in _ray_cells(origin, angle, length):
        if not belief.in_bounds(cell):
            return None
        dist = math.hypot(cell.row - origin[0], cell.col - origin[1])
        if dist > length:
            return None
        if belief.state(cell) is CellState.OCCUPIED:
            return cell, dist
    return None


def _nearest_free(belief: GridMap, cell: Cell, radius: float) -> Cell | None:
    """Closest free cell to `cell` within `radius`, ties by (row, col)."""
    best = None
    rad = int(math.ceil(radius))
    for dr in range(-rad, rad + 1):
        for dc in range(-rad, rad + 1):
            cand = Cell(cell.row + dr, cell.col + dc)
            d = math.hypot(dr, dc)
            if d > radius or not belief.in_bounds(cand):
                continue
            if belief.state(cand) is CellState.FREE:
                key = (d, cand)
                if best is None or key < best:
                    best = key
    return best[1] if best else None


def detect_doorways(
    belief: GridMap,
    params: DoorwayParams,
    sense_range: int,
    seed: int,
) -> list[DoorwayCandidate]:
    """Probe sampled frontier cells for narrow symmetric wall gaps.

    A candidate qualifies when some opposite ray pair hits walls on both
    sides within the ray length, the hit distances agree to within the
    symmetry tolerance, and the free span between the hits is at most
    max_width.  The span midpoint (snapped to a free cell if needed) is
    scored with info_gain at `sense_range`; low-gain and crowded candidates
    are dropped.  Deterministic per seed.
    """
    fronts = sorted(frontier_cells(belief))
    if not fronts:
        return []
    rng = SplitMix64(seed)
    k = min(params.sample_count, len(fronts))
    sampled = [fronts[i] for i in rng.sample_indices(len(fronts), k)]

    q = params.directions
    step_deg = 360.0 / q
    raw: dict[Cell, DoorwayCandidate] = {}
    for cell in sampled:
        best = None  # (width, axis index, midpoint)
        for a in range(q // 2):
            angle = a * step_deg
            hit_a = _first_wall_hit(belief, cell, angle, params.ray_length)
            hit_b = _first_wall_hit(belief, cell, angle + 180.0, params.ray_length)
            if hit_a is None or hit_b is None:
                continue
            (cell_a, dist_a), (cell_b, dist_b) = hit_a, hit_b
            if abs(dist_a - dist_b) > SYMMETRY_TOLERANCE:
                continue
            # Width is the free span between the walls: hit-to-hit distance
            # minus one cell step along the axis (1 straight, sqrt(2) diagonal).
            first = _ray_cells(cell, angle, 2.0)[0]
            step_len = math.hypot(first.row - cell.row, first.col - cell.col)
            width = dist_a + dist_b - step_len
            if width > params.max_width:
                continue
            if best is None or width < best[0]:
                mid = Cell(
                    (cell_a.row + cell_b.row) // 2, (cell_a.col + cell_b.col) // 2
                )
                best = (width, a, mid)
        if best is None:
            continue
        width, a, mid = best
        if belief.state(mid) is not CellState.FREE:
            snapped = _nearest_free(belief, mid, params.max_width)
            if snapped is None:
                continue
            mid = snapped
        gain = info_gain(belief, mid, sense_range)
        if gain < params.min_gain:
            continue
        cand = DoorwayCandidate(mid, round(a * step_deg, 6), float(width), gain)
        prev = raw.get(mid)
        if prev is None or cand.info_gain > prev.info_gain:
            raw[mid] = cand

    ordered = sorted(raw.values(), key=lambda d: (-d.info_gain, d.cell))
    return _separated(ordered, params.min_separation)
