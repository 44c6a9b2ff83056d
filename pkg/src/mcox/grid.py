"""Occupancy-grid world model.

The shared map is a dense array of three-valued cells (unknown / free /
occupied).  This module owns the sensing geometry: discretized line of
sight, range-limited LiDAR scans against a ground-truth map, monotone
merging of observations into a belief map, flood-fill reachability, and the
completion/coverage queries that terminate an episode.

Conventions fixed here and relied on everywhere else:
  * 4-connectivity for reachability (no diagonal corner cutting);
  * line of sight runs between cell centers along an integer-traced line,
    blocked by the first occupied cell strictly before the target;
  * occupied cells are observable but never traversable;
  * `resolution` is carried as metadata only, all logic is in cell units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, NamedTuple

import numpy as np


class CellState(IntEnum):
    UNKNOWN = -1
    FREE = 0
    OCCUPIED = 1


class Cell(NamedTuple):
    row: int
    col: int


class GridError(ValueError):
    """Invalid argument against a grid (bounds, dimensions, states)."""


class InvalidPoseError(GridError):
    """Sensor pose is not on a free cell."""


class InvalidObservationError(GridError):
    """Observation outside the map or carrying an Unknown state."""


_ASCII_OF_STATE = {CellState.UNKNOWN: "?", CellState.FREE: ".", CellState.OCCUPIED: "#"}
_STATE_OF_ASCII = {v: k for k, v in _ASCII_OF_STATE.items()}
# Grayscale values for image export: unknown renders white, free gray,
# occupied black.
PGM_VALUES = {CellState.UNKNOWN: 255, CellState.FREE: 128, CellState.OCCUPIED: 0}


@dataclass(eq=False)
class GridMap:
    """Dense H x W grid of cell states.

    Values are int8 with the CellState encoding.  Instances are treated as
    snapshots: mutating functions return fresh maps, and callers that do
    mutate in place must own the array exclusively.
    """

    cells: np.ndarray
    resolution: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.cells, dtype=np.int8)
        if arr.ndim != 2 or arr.shape[0] <= 0 or arr.shape[1] <= 0:
            raise GridError(f"grid must be 2D and non-empty, got shape {arr.shape}")
        valid = np.isin(arr, (CellState.UNKNOWN, CellState.FREE, CellState.OCCUPIED))
        if not valid.all():
            raise GridError("grid contains values outside {unknown, free, occupied}")
        self.cells = arr

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def state(self, cell: Cell) -> CellState:
        if not self.in_bounds(cell):
            raise GridError(f"cell {cell} outside {self.height}x{self.width} grid")
        return CellState(int(self.cells[cell[0], cell[1]]))

    def copy(self) -> "GridMap":
        return GridMap(self.cells.copy(), self.resolution)

    def free_mask(self) -> np.ndarray:
        return self.cells == CellState.FREE

    def unknown_mask(self) -> np.ndarray:
        return self.cells == CellState.UNKNOWN

    def occupied_mask(self) -> np.ndarray:
        return self.cells == CellState.OCCUPIED

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridMap):
            return NotImplemented
        return self.resolution == other.resolution and np.array_equal(
            self.cells, other.cells
        )


@dataclass
class RobotState:
    """Pose plus the characteristic pair (detection range, max speed)."""

    id: int
    position: Cell
    detect_range: int
    max_speed: int
    waypoints: list[Cell] = field(default_factory=list)

    def __post_init__(self):
        if self.detect_range < 1 or self.max_speed < 1:
            raise ValueError("detect_range and max_speed must be >= 1")
        self.position = Cell(*self.position)


def new_belief(height: int, width: int, resolution: float = 1.0) -> GridMap:
    """Fresh belief map with every cell unknown."""
    if height <= 0 or width <= 0:
        raise GridError(f"dimensions must be positive, got {height}x{width}")
    return GridMap(
        np.full((height, width), CellState.UNKNOWN, dtype=np.int8), resolution
    )


def line_cells(a: Cell, b: Cell) -> list[Cell]:
    """Integer-traced line between cell centers, endpoints included.

    One cell per step of the dominant axis; the minor coordinate is the
    rounded station value with exact halves rounded toward the start.  This
    matches the classic error-accumulation Bresenham walk.
    """
    dr, dc = b[0] - a[0], b[1] - a[1]
    n = max(abs(dr), abs(dc))
    if n == 0:
        return [Cell(a[0], a[1])]
    sr = 1 if dr >= 0 else -1
    sc = 1 if dc >= 0 else -1
    cells = []
    if abs(dr) >= abs(dc):
        m = abs(dc)
        for k in range(n + 1):
            off = (2 * m * k + n - 1) // (2 * n)
            cells.append(Cell(a[0] + sr * k, a[1] + sc * off))
    else:
        m = abs(dr)
        for k in range(n + 1):
            off = (2 * m * k + n - 1) // (2 * n)
            cells.append(Cell(a[0] + sr * off, a[1] + sc * k))
    return cells


class _VisibilityKernel:
    """Precomputed disk offsets and their strictly-between line cells.

    Row 0 of `offsets` is the center itself.  `between_*` hold, for each
    offset, the padded line cells strictly between center and target, so a
    whole disk (or a batch of disks) can be occlusion-tested with a couple
    of fancy-indexing gathers.
    """

    def __init__(self, radius: int):
        offs = [(0, 0)]
        for dr in range(-radius, radius + 1):
            for dc in range(-radius, radius + 1):
                if (dr, dc) != (0, 0) and dr * dr + dc * dc <= radius * radius:
                    offs.append((dr, dc))
        lines = [line_cells(Cell(0, 0), Cell(dr, dc))[1:-1] for dr, dc in offs]
        lmax = max(1, max(len(l) for l in lines))
        k = len(offs)
        self.offsets = np.array(offs, dtype=np.int32)
        self.between = np.zeros((k, lmax, 2), dtype=np.int32)
        self.between_mask = np.zeros((k, lmax), dtype=bool)
        for i, line in enumerate(lines):
            for j, cell in enumerate(line):
                self.between[i, j] = cell
                self.between_mask[i, j] = True


_KERNELS: dict[int, _VisibilityKernel] = {}


def _kernel(radius: int) -> _VisibilityKernel:
    if radius not in _KERNELS:
        _KERNELS[radius] = _VisibilityKernel(radius)
    return _KERNELS[radius]


def _disk_visibility(
    cells: np.ndarray, centers: np.ndarray, radius: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched visibility over the radius disk for each center.

    Returns (abs_cells, in_bounds, visible), each shaped (N, K[, 2]) over
    the kernel's K offsets.  A disk cell is visible when it is in bounds and
    no occupied cell lies strictly between it and the center.
    """
    kern = _kernel(radius)
    h, w = cells.shape
    abs_cells = centers[:, None, :] + kern.offsets[None, :, :]
    inb = (
        (abs_cells[..., 0] >= 0)
        & (abs_cells[..., 0] < h)
        & (abs_cells[..., 1] >= 0)
        & (abs_cells[..., 1] < w)
    )
    btw = centers[:, None, None, :] + kern.between[None, :, :, :]
    # Between cells of an in-bounds target are themselves in bounds; clipping
    # only guards the gathers for targets that inb already discards.
    br = np.clip(btw[..., 0], 0, h - 1)
    bc = np.clip(btw[..., 1], 0, w - 1)
    occ = (cells[br, bc] == CellState.OCCUPIED) & kern.between_mask[None, :, :]
    blocked = occ.any(axis=2)
    return abs_cells, inb, inb & ~blocked


def lidar_scan(
    truth: GridMap, pose: Cell, scan_range: int
) -> set[tuple[Cell, CellState]]:
    """Cells observed from `pose`: within Euclidean `scan_range`, line of
    sight not blocked by an occupied cell strictly before the target.

    Occupied cells at the edge of sight are themselves returned, so walls
    become known.  Deterministic for fixed inputs.
    """
    pose = Cell(*pose)
    if not truth.in_bounds(pose) or truth.state(pose) is not CellState.FREE:
        raise InvalidPoseError(f"scan pose {pose} is not a free cell")
    if scan_range < 1:
        raise GridError("scan range must be >= 1")
    centers = np.array([pose], dtype=np.int32)
    abs_cells, _, visible = _disk_visibility(truth.cells, centers, scan_range)
    out = set()
    for r, c in abs_cells[0][visible[0]]:
        cell = Cell(int(r), int(c))
        out.add((cell, CellState(int(truth.cells[cell.row, cell.col]))))
    return out


def merge(
    belief: GridMap, observations: Iterable[tuple[Cell, CellState]]
) -> GridMap:
    """New belief with each observed cell set to its observed state.

    Idempotent and order-independent for consistent observations; unknown
    never overwrites knowledge because unknown observations are rejected.
    """
    merged = belief.copy()
    for cell, state in observations:
        if not merged.in_bounds(cell):
            raise InvalidObservationError(f"observation at {cell} out of bounds")
        if state not in (CellState.FREE, CellState.OCCUPIED):
            raise InvalidObservationError(
                f"observation at {cell} must be free or occupied, got {state!r}"
            )
        merged.cells[cell[0], cell[1]] = state
    return merged


def _shifted(mask: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """Mask translated by (dr, dc) with zero fill."""
    out = np.zeros_like(mask)
    h, w = mask.shape
    src_r = slice(max(0, -dr), min(h, h - dr))
    src_c = slice(max(0, -dc), min(w, w - dc))
    dst_r = slice(max(0, dr), min(h, h + dr))
    dst_c = slice(max(0, dc), min(w, w + dc))
    out[dst_r, dst_c] = mask[src_r, src_c]
    return out


def _flood(free: np.ndarray, start: Cell) -> np.ndarray:
    """4-connected flood fill over a boolean mask."""
    reach = np.zeros_like(free)
    reach[start[0], start[1]] = True
    while True:
        grown = reach.copy()
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            grown |= _shifted(reach, dr, dc)
        grown &= free
        if (grown == reach).all():
            return reach
        reach = grown


def reachable_mask(truth: GridMap, start: Cell) -> np.ndarray:
    """Boolean mask of free cells 4-connected to `start`."""
    start = Cell(*start)
    if not truth.in_bounds(start) or truth.state(start) is not CellState.FREE:
        raise GridError(f"flood start {start} is not a free cell")
    return _flood(truth.free_mask(), start)


def reachable_free(truth: GridMap, start: Cell) -> set[Cell]:
    """Set of free cells 4-connected to `start` (contains `start`)."""
    mask = reachable_mask(truth, start)
    return {Cell(int(r), int(c)) for r, c in np.argwhere(mask)}


def _as_reach_mask(truth: GridMap, reachable) -> np.ndarray:
    if isinstance(reachable, np.ndarray):
        return reachable.astype(bool)
    mask = np.zeros((truth.height, truth.width), dtype=bool)
    for r, c in reachable:
        mask[r, c] = True
    return mask


def relevant_mask(truth: GridMap, reachable) -> np.ndarray:
    """Cells a complete exploration must know: reachable free cells plus
    occupied cells 4-adjacent to one."""
    reach = _as_reach_mask(truth, reachable)
    near = np.zeros_like(reach)
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        near |= _shifted(reach, dr, dc)
    return reach | (near & truth.occupied_mask())


def exploration_complete(belief: GridMap, truth: GridMap, reachable) -> bool:
    """True once every relevant truth cell is known in the belief."""
    if belief.cells.shape != truth.cells.shape:
        raise GridError("belief and truth dimensions differ")
    mask = relevant_mask(truth, reachable)
    return bool((belief.cells[mask] != CellState.UNKNOWN).all())


def coverage_fraction(belief: GridMap, truth: GridMap, reachable) -> float:
    """Known relevant cells divided by all relevant cells, in [0, 1]."""
    if belief.cells.shape != truth.cells.shape:
        raise GridError("belief and truth dimensions differ")
    mask = relevant_mask(truth, reachable)
    total = int(mask.sum())
    if total == 0:
        raise GridError("no relevant cells to cover")
    known = int((belief.cells[mask] != CellState.UNKNOWN).sum())
    return known / total


def format_ascii(grid: GridMap) -> str:
    """ASCII map: header line `H W r`, then one row per line of `#./?`."""
    lut = {int(s): ch for s, ch in _ASCII_OF_STATE.items()}
    rows = ["".join(lut[int(v)] for v in row) for row in grid.cells]
    return f"{grid.height} {grid.width} {grid.resolution:g}\n" + "\n".join(rows) + "\n"


def parse_ascii(text: str) -> GridMap:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GridError("empty map text")
    head = lines[0].split()
    if len(head) != 3:
        raise GridError(f"bad map header {lines[0]!r}, expected 'H W r'")
    h, w, res = int(head[0]), int(head[1]), float(head[2])
    body = lines[1:]
    if len(body) != h:
        raise GridError(f"expected {h} map rows, found {len(body)}")
    cells = np.empty((h, w), dtype=np.int8)
    for r, row in enumerate(body):
        if len(row) != w:
            raise GridError(f"row {r} has length {len(row)}, expected {w}")
        for c, ch in enumerate(row):
            if ch not in _STATE_OF_ASCII:
                raise GridError(f"unknown map character {ch!r} at {(r, c)}")
            cells[r, c] = _STATE_OF_ASCII[ch]
    return GridMap(cells, res)


def to_pgm(grid: GridMap) -> bytes:
    """Binary PGM (P5) render: unknown=255, free=128, occupied=0."""
    lut = np.zeros(3, dtype=np.uint8)
    for state, value in PGM_VALUES.items():
        lut[int(state) + 1] = value
    pixels = lut[grid.cells.astype(np.int16) + 1]
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def read_map_file(path) -> GridMap:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_ascii(fh.read())


def write_map_file(path, grid: GridMap) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_ascii(grid))
