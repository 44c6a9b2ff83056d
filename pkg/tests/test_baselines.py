import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcox.baselines import (
    dvc_assign,
    greedy_assign,
    tsp_tour,
    voronoi_partition,
)
from mcox.frontier import FrontierCandidate
from mcox.grid import Cell, CellState, RobotState, new_belief
from mcox.rng import SplitMix64

from .conftest import grid_from_rows, random_walled_grid
from . import oracles


def _open_belief(h, w):
    belief = new_belief(h, w)
    belief.cells[:, :] = CellState.FREE
    return belief


def _candidates(cells):
    return [FrontierCandidate(Cell(*c), 0.5, 1.0, 0.49) for c in cells]


class TestGreedyAssign:
    def test_one_robot_one_candidate(self):
        belief = _open_belief(5, 5)
        robots = [RobotState(0, Cell(0, 0), 5, 1)]
        out = greedy_assign(_candidates([(4, 4)]), robots, belief)
        assert out == {0: [Cell(4, 4)]}

    def test_two_robots_one_candidate_other_idles(self):
        belief = _open_belief(5, 5)
        robots = [RobotState(0, Cell(0, 0), 5, 1), RobotState(1, Cell(4, 4), 5, 1)]
        out = greedy_assign(_candidates([(4, 3)]), robots, belief)
        # robot 0 is processed first but robot 1 is closer? no: greedy by id,
        # robot 0 takes its minimum-distance candidate, the only one
        assert out[0] == [Cell(4, 3)]
        assert out[1] == []

    def test_no_duplicates_and_matches_oracle(self):
        rng = SplitMix64(5)
        for seed in range(10):
            belief = random_walled_grid(seed, 12, 12)
            free = sorted(oracles.flood_fill(belief, Cell(6, 6)))
            robots = [
                RobotState(i, free[rng.below(len(free))], 5, 1) for i in range(3)
            ]
            cells = sorted({free[rng.below(len(free))] for _ in range(5)})
            got = greedy_assign(_candidates(cells), robots, belief)
            expected = oracles.greedy_assignment(cells, robots, belief)
            assert got == expected, seed
            assigned = [c for q in got.values() for c in q]
            assert len(assigned) == len(set(assigned))

    def test_empty_candidates(self):
        belief = _open_belief(4, 4)
        robots = [RobotState(0, Cell(0, 0), 5, 1)]
        assert greedy_assign([], robots, belief) == {0: []}

    def test_unreachable_candidates_skipped(self):
        belief = grid_from_rows(["..#..", "..#..", "..#.."])
        robots = [RobotState(0, Cell(0, 0), 5, 1)]
        out = greedy_assign(_candidates([(0, 4)]), robots, belief)
        assert out == {0: []}


class TestVoronoiPartition:
    def test_single_robot_takes_all(self):
        robots = [RobotState(0, Cell(2, 2), 5, 1)]
        cells = [Cell(0, 0), Cell(4, 4), Cell(1, 3)]
        parts = voronoi_partition(cells, robots)
        assert parts == {0: cells}

    def test_dominance_near_own_corner(self):
        robots = [RobotState(0, Cell(0, 0), 5, 1), RobotState(1, Cell(9, 9), 5, 1)]
        parts = voronoi_partition([Cell(0, 1)], robots)
        assert parts[0] == [Cell(0, 1)] and parts[1] == []

    def test_tie_goes_to_lower_id(self):
        robots = [RobotState(0, Cell(0, 0), 5, 1), RobotState(1, Cell(0, 4), 5, 1)]
        parts = voronoi_partition([Cell(0, 2)], robots)
        assert parts[0] == [Cell(0, 2)]

    def test_matches_argmin_oracle(self):
        rng = SplitMix64(17)
        robots = [
            RobotState(i, Cell(rng.below(20), rng.below(20)), 5, 1) for i in range(4)
        ]
        cells = [Cell(rng.below(20), rng.below(20)) for _ in range(50)]
        parts = voronoi_partition(cells, robots)
        for rid, owned in parts.items():
            for cell in owned:
                assert oracles.voronoi_owner(cell, robots) == rid
        assert sum(len(v) for v in parts.values()) == len(cells)


class TestTspTour:
    def test_empty_targets(self):
        belief = _open_belief(5, 5)
        assert tsp_tour(Cell(0, 0), [], belief) == []

    def test_single_target(self):
        belief = _open_belief(5, 5)
        assert tsp_tour(Cell(0, 0), [Cell(3, 3)], belief) == [Cell(3, 3)]

    def test_collinear_corridor_visits_in_order(self):
        belief = grid_from_rows(["#######", ".......", "#######"])
        targets = [Cell(1, c) for c in (6, 2, 4, 1, 5)]
        tour = tsp_tour(Cell(1, 0), targets, belief)
        assert tour == [Cell(1, 1), Cell(1, 2), Cell(1, 4), Cell(1, 5), Cell(1, 6)]

    def test_matches_permutation_oracle(self):
        rng = SplitMix64(23)
        for seed in range(12):
            belief = random_walled_grid(seed + 40, 11, 11)
            free = sorted(oracles.flood_fill(belief, Cell(5, 5)))
            if len(free) < 7:
                continue
            start = free[rng.below(len(free))]
            targets = sorted({free[rng.below(len(free))] for _ in range(5)} - {start})
            got = tsp_tour(start, targets, belief)
            expected = oracles.optimal_open_tour(start, targets, belief)
            assert got == expected, seed

    def test_unreachable_targets_dropped(self):
        belief = grid_from_rows(["..#..", "..#..", "..#.."])
        tour = tsp_tour(Cell(0, 0), [Cell(0, 4), Cell(2, 0)], belief)
        assert tour == [Cell(2, 0)]

    def test_large_instance_uses_heuristic_and_visits_all(self):
        belief = _open_belief(20, 20)
        rng = SplitMix64(31)
        targets = sorted({Cell(rng.below(20), rng.below(20)) for _ in range(14)})
        targets = [t for t in targets if t != Cell(0, 0)]
        tour = tsp_tour(Cell(0, 0), targets, belief)
        assert sorted(tour) == sorted(targets)


class TestDvcAssign:
    def test_single_robot_tours_everything(self):
        belief = _open_belief(8, 8)
        robots = [RobotState(0, Cell(0, 0), 5, 1)]
        cells = [Cell(7, 7), Cell(0, 7), Cell(7, 0)]
        out = dvc_assign(_candidates(cells), robots, belief)
        assert sorted(out[0]) == sorted(cells)

    def test_clustered_candidates_stay_with_their_robot(self):
        belief = _open_belief(20, 20)
        robots = [RobotState(0, Cell(0, 0), 5, 1), RobotState(1, Cell(19, 19), 5, 1)]
        near0 = [Cell(1, 2), Cell(2, 1), Cell(3, 3)]
        near1 = [Cell(18, 17), Cell(17, 18)]
        out = dvc_assign(_candidates(near0 + near1), robots, belief)
        assert sorted(out[0]) == sorted(near0)
        assert sorted(out[1]) == sorted(near1)

    def test_queues_partition_candidates(self):
        belief = _open_belief(16, 16)
        rng = SplitMix64(3)
        robots = [RobotState(i, Cell(rng.below(16), rng.below(16)), 5, 1) for i in range(3)]
        cells = sorted({Cell(rng.below(16), rng.below(16)) for _ in range(9)})
        cells = [c for c in cells if c not in {r.position for r in robots}]
        out = dvc_assign(_candidates(cells), robots, belief)
        assigned = sorted(c for q in out.values() for c in q)
        assert assigned == sorted(cells)

    def test_empty_candidates(self):
        belief = _open_belief(4, 4)
        robots = [RobotState(0, Cell(0, 0), 5, 1), RobotState(1, Cell(3, 3), 5, 1)]
        out = dvc_assign([], robots, belief)
        assert out == {0: [], 1: []}
