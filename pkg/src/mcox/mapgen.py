"""Procedural ground-truth maps.

Two families, both seeded and bit-reproducible through SplitMix64:

  * structured: a full-width central corridor with rooms tiled along both
    sides, one corridor doorway per room, optional inter-room doors between
    adjacent rooms;
  * unstructured: cave-like tunnels carved by drunken walks with width
    jitter and branches, repaired to a single free component.

Both return the map plus a deploy zone (the common entry region at the
western end) and guarantee that every free cell is reachable from it.
Layout numbers not fixed by the experiment design (corridor width, room
size range, doorway width, tunnel jitter) are declared as defaults here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Cell, CellState, GridMap, reachable_mask
from .nav import bfs_distances
from .rng import SplitMix64

SIZE_CLASSES = {"small": 60, "medium": 120, "large": 150}
# Corridor width by size class; rooms span 8..20 cells a side, doorways are
# 2 cells wide so a 5-cell sensing range resolves them.
_CORRIDOR_WIDTH = {"small": 4, "medium": 5, "large": 5}
ROOM_MIN, ROOM_MAX = 8, 20
DOOR_WIDTH = 2


class GenerationError(RuntimeError):
    """Spec cannot be realized (too small, or repair retries exhausted)."""


@dataclass(frozen=True)
class StructuredMapSpec:
    size_class: str = "small"
    seed: int = 0
    door_probability: float = 0.5

    def __post_init__(self):
        if self.size_class not in SIZE_CLASSES:
            raise ValueError(f"size_class must be one of {sorted(SIZE_CLASSES)}")
        if not 0.0 <= self.door_probability <= 1.0:
            raise ValueError("door_probability must be in [0, 1]")


@dataclass(frozen=True)
class UnstructuredMapSpec:
    size: int = 150
    seed: int = 0
    width_min: int = 2
    width_max: int = 6
    turn_amplitude: float = 0.7   # radians of heading jitter per step
    branch_min: int = 3
    branch_max: int = 6
    min_free_fraction: float = 0.30

    def __post_init__(self):
        if self.size < 30:
            raise ValueError("unstructured maps need size >= 30")
        if not 2 <= self.width_min <= self.width_max:
            raise ValueError("need 2 <= width_min <= width_max")
        if not 1 <= self.branch_min <= self.branch_max:
            raise ValueError("need 1 <= branch_min <= branch_max")


def _segment_widths(total: int, rng: SplitMix64) -> list[int]:
    """Split `total` columns into room widths separated by 1-cell walls."""
    if total < ROOM_MIN:
        raise GenerationError(f"band of {total} cells cannot fit one room")
    widths = []
    remaining = total
    while remaining > 0:
        if remaining <= ROOM_MAX:
            widths.append(remaining)
            break
        # leave room for a wall plus at least one more minimum-size room
        hi = min(ROOM_MAX, remaining - ROOM_MIN - 1)
        widths.append(rng.randrange(ROOM_MIN, hi))
        remaining -= widths[-1] + 1
    return widths


def _carve_band(
    cells: np.ndarray,
    rng: SplitMix64,
    corridor_wall_row: int,
    band_sign: int,
    band_depth: int,
    door_probability: float,
) -> None:
    """Rooms along one side of the corridor.

    `band_sign` is -1 for the band above the corridor (rows decrease away
    from it) and +1 below.  Every room gets a 2-cell doorway onto the
    corridor; adjacent rooms get an inter-room door with the given
    probability.
    """
    w = cells.shape[1]
    widths = _segment_widths(w - 2, rng)
    inner = corridor_wall_row + band_sign  # room row adjacent to the corridor wall

    col = 1
    rooms = []  # (col_start, col_end, height)
    for seg in widths:
        height = rng.randrange(ROOM_MIN, min(ROOM_MAX, band_depth))
        far = inner + band_sign * (height - 1)
        r0, r1 = min(inner, far), max(inner, far)
        cells[r0 : r1 + 1, col : col + seg] = CellState.FREE
        door = rng.randrange(col, col + seg - DOOR_WIDTH)
        cells[corridor_wall_row, door : door + DOOR_WIDTH] = CellState.FREE
        rooms.append((col, col + seg - 1, height))
        col += seg + 1

    for (c0a, c1a, ha), (c0b, c1b, hb) in zip(rooms, rooms[1:]):
        u = rng.uniform()  # always drawn so the stream shape is stable
        overlap = min(ha, hb)
        if u >= door_probability or overlap < DOOR_WIDTH:
            continue
        wall_col = c1a + 1
        r_near = inner
        r_far = inner + band_sign * (overlap - 1)
        lo, hi = min(r_near, r_far), max(r_near, r_far)
        top = rng.randrange(lo, hi - DOOR_WIDTH + 1)
        cells[top : top + DOOR_WIDTH, wall_col] = CellState.FREE


def gen_structured(spec: StructuredMapSpec) -> tuple[GridMap, set[Cell]]:
    """Corridor-and-rooms map plus its deploy zone (western corridor end)."""
    size = SIZE_CLASSES[spec.size_class]
    cw = _CORRIDOR_WIDTH[spec.size_class]
    rng = SplitMix64(spec.seed)
    cells = np.full((size, size), CellState.OCCUPIED, dtype=np.int8)

    corr_top = (size - cw) // 2
    cells[corr_top : corr_top + cw, 1 : size - 1] = CellState.FREE

    band_depth = corr_top - 2  # rows 1 .. corr_top-2 above the corridor wall
    if band_depth < ROOM_MIN:
        raise GenerationError("map too small for a room band")
    _carve_band(cells, rng, corr_top - 1, -1, band_depth, spec.door_probability)
    _carve_band(cells, rng, corr_top + cw, +1, band_depth, spec.door_probability)

    grid = GridMap(cells)
    deploy = {
        Cell(r, c)
        for r in range(corr_top, corr_top + cw)
        for c in range(1, 1 + 6)
    }
    _check_connected(grid, deploy)
    return grid, deploy


def _carve_disk(cells: np.ndarray, r: float, c: float, radius: int) -> None:
    h, w = cells.shape
    ri, ci = int(round(r)), int(round(c))
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            if dr * dr + dc * dc <= radius * radius:
                rr, cc = ri + dr, ci + dc
                if 1 <= rr < h - 1 and 1 <= cc < w - 1:
                    cells[rr, cc] = CellState.FREE


def _walk(
    cells: np.ndarray,
    rng: SplitMix64,
    spec: UnstructuredMapSpec,
    start: tuple[float, float],
    heading: float,
    steps: int,
) -> list[tuple[float, float]]:
    """Carve one jittering tunnel; returns the visited points."""
    r, c = start
    radius = rng.randrange(spec.width_min, spec.width_max) // 2
    path = []
    margin = 3
    for i in range(steps):
        if i % 15 == 0:
            radius = max(1, rng.randrange(spec.width_min, spec.width_max) // 2)
        heading += (rng.uniform() - 0.5) * 2.0 * spec.turn_amplitude
        r += math.sin(heading)
        c += math.cos(heading)
        r = min(max(r, margin), cells.shape[0] - 1 - margin)
        c = min(max(c, margin), cells.shape[1] - 1 - margin)
        _carve_disk(cells, r, c, radius)
        path.append((r, c))
    return path


def gen_unstructured(spec: UnstructuredMapSpec) -> tuple[GridMap, set[Cell]]:
    """Cave-like tunnel map plus its deploy zone around the west entry."""
    rng = SplitMix64(spec.seed)
    size = spec.size
    cells = np.full((size, size), CellState.OCCUPIED, dtype=np.int8)
    start = (size / 2.0, 4.0)
    _carve_disk(cells, start[0], start[1], 2)

    trunk = _walk(cells, rng, spec, start, heading=0.0, steps=int(size * 1.3))
    n_branches = rng.randrange(spec.branch_min, spec.branch_max)
    anchors = list(trunk)
    for _ in range(n_branches):
        origin = anchors[rng.below(len(anchors))]
        heading = rng.uniform() * 2.0 * math.pi
        steps = rng.randrange(size // 4, size)
        anchors.extend(_walk(cells, rng, spec, origin, heading, steps))

    total = size * size
    attempts = 0
    while (cells == CellState.FREE).sum() / total < spec.min_free_fraction:
        attempts += 1
        if attempts > 200:
            raise GenerationError("could not reach target free fraction")
        origin = anchors[rng.below(len(anchors))]
        heading = rng.uniform() * 2.0 * math.pi
        anchors.extend(_walk(cells, rng, spec, origin, heading, size // 2))

    grid = GridMap(cells)
    # Carving is contiguous so stray components should not exist; fill any
    # that slipped through rather than fail.
    start_cell = Cell(int(round(start[0])), int(round(start[1])))
    reach = reachable_mask(grid, start_cell)
    grid.cells[grid.free_mask() & ~reach] = CellState.OCCUPIED
    if (grid.cells == CellState.FREE).sum() / total < spec.min_free_fraction:
        raise GenerationError("free fraction fell below target after repair")

    deploy = set()
    for dr in range(-3, 4):
        for dc in range(-3, 4):
            cand = Cell(start_cell.row + dr, start_cell.col + dc)
            if (
                dr * dr + dc * dc <= 9
                and grid.in_bounds(cand)
                and grid.state(cand) is CellState.FREE
            ):
                deploy.add(cand)
    _check_connected(grid, deploy)
    return grid, deploy


def _check_connected(grid: GridMap, deploy: set[Cell]) -> None:
    if not deploy:
        raise GenerationError("empty deploy zone")
    anchor = min(deploy)
    reach = reachable_mask(grid, anchor)
    if not (reach == grid.free_mask()).all():
        raise GenerationError("generated map has unreachable free cells")


def deploy_anchor(deploy_zone: set[Cell]) -> Cell:
    """Deploy cell closest to the zone centroid, ties by (row, col)."""
    if not deploy_zone:
        raise ValueError("empty deploy zone")
    rc = np.array(sorted(deploy_zone), dtype=float)
    centroid = rc.mean(axis=0)
    best = min(
        sorted(deploy_zone),
        key=lambda c: ((c.row - centroid[0]) ** 2 + (c.col - centroid[1]) ** 2, c),
    )
    return best


class NoCandidateError(RuntimeError):
    """No reachable free cell falls in the requested distance band."""


def sample_target(
    truth: GridMap,
    deploy_zone: set[Cell],
    seed: int,
    difficulty_band: tuple[float, float],
) -> Cell:
    """Seeded draw of a reachable free cell whose shortest-path distance
    from the deploy anchor lies within `difficulty_band` (inclusive)."""
    lo, hi = difficulty_band
    if lo > hi:
        raise NoCandidateError("empty difficulty band")
    anchor = deploy_anchor(deploy_zone)
    dist = bfs_distances(truth.free_mask(), [anchor])
    rows, cols = np.where((dist >= lo) & (dist <= hi))
    if len(rows) == 0:
        raise NoCandidateError(f"no reachable cell at distance in {difficulty_band}")
    candidates = sorted(Cell(int(r), int(c)) for r, c in zip(rows, cols))
    return candidates[SplitMix64(seed).below(len(candidates))]


def max_target_distance(truth: GridMap, deploy_zone: set[Cell]) -> int:
    """Largest shortest-path distance from the deploy anchor."""
    dist = bfs_distances(truth.free_mask(), [deploy_anchor(deploy_zone)])
    return int(dist.max())
