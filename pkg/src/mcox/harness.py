"""Batch experiment runner.

Reproduces the benchmark design at desk scale: a batch of seeded maps per
size class, a sweep over team sizes and planners, one episode per cell of
the cross product, and quartile summaries of completion times.  Episode
seeds are hashed from (master seed, map seed, team size, planner) so no two
cells share a random stream.  Finished cells are skipped on rerun, so an
interrupted experiment resumes where it stopped.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import EpisodeConfig, LLMOptions, PLANNER_KINDS, RunRecord, run_episode
from .grid import Cell, GridMap
from .mapgen import (
    StructuredMapSpec,
    UnstructuredMapSpec,
    gen_structured,
    gen_unstructured,
    max_target_distance,
    sample_target,
)
from .rng import derive_seed

# Timestep budgets per map size class.
TIMESTEP_LIMITS = {"small": 1000, "medium": 1500, "large": 2000, "unstructured": 2000}

HOMOGENEOUS_ROBOT = (5, 1)  # detection range 5, speed 1
FAST_ROBOT = (5, 3)         # heterogeneous: short range, fast
SLOW_ROBOT = (10, 1)        # heterogeneous: long range, slow


class ComparisonError(ValueError):
    """The two planners share no episodes to compare on."""


@dataclass(frozen=True)
class ExperimentSpec:
    map_class: str = "small"
    map_count: int = 10
    team_sizes: tuple[int, ...] = (2,)
    composition: str = "homogeneous"  # or "heterogeneous"
    planners: tuple[str, ...] = ("sample-greedy",)
    task: str = "explore"
    # Target difficulty as fractions of the farthest reachable distance.
    difficulty_band: tuple[float, float] = (0.4, 0.8)
    seed: int = 0
    out_dir: str = "runs/experiment"
    t_max: int | None = None  # None -> TIMESTEP_LIMITS[map_class]
    t_h: int = 30
    door_probability: float = 0.5
    parallel: int = 1
    llm: LLMOptions = field(default_factory=LLMOptions)
    initial_info: str | None = None

    def __post_init__(self):
        if self.map_class not in TIMESTEP_LIMITS:
            raise ValueError(f"map_class must be one of {sorted(TIMESTEP_LIMITS)}")
        if self.map_count < 1:
            raise ValueError("map_count must be >= 1")
        if not self.team_sizes or any(m < 1 for m in self.team_sizes):
            raise ValueError("team_sizes must be positive")
        if self.composition not in ("homogeneous", "heterogeneous"):
            raise ValueError("composition must be homogeneous or heterogeneous")
        for planner in self.planners:
            if planner not in PLANNER_KINDS:
                raise ValueError(f"unknown planner {planner!r}")


@dataclass
class EpisodeRow:
    map_class: str
    map_seed: int
    planner: str
    team_size: int
    task: str
    outcome: str
    steps: int
    coverage_at_end: float

    CSV_FIELDS = (
        "map_class",
        "map_seed",
        "planner",
        "team_size",
        "task",
        "outcome",
        "steps",
        "coverage_at_end",
    )


@dataclass
class SummaryRow:
    map_class: str
    team_size: int
    planner: str
    quartiles: tuple[float, float, float, float, float]  # min, Q1, med, Q3, max
    timeouts: int
    mean_coverage: float
    episodes: int


@dataclass
class SummaryTable:
    rows: list[SummaryRow]
    episodes: list[EpisodeRow]


def team_for(composition: str, size: int) -> list[tuple[int, int]]:
    """Robot characteristic list for a team of `size`.

    Heterogeneous teams put size//2 fast short-range robots first, the rest
    slow long-range (matches the 5 -> 2+3 and 6 -> 3+3 splits).
    """
    if composition == "homogeneous":
        return [HOMOGENEOUS_ROBOT] * size
    fast = size // 2
    return [FAST_ROBOT] * fast + [SLOW_ROBOT] * (size - fast)


def build_map(spec: ExperimentSpec, map_seed: int) -> tuple[GridMap, set[Cell]]:
    gen_seed = derive_seed(spec.seed, "map", spec.map_class, map_seed)
    if spec.map_class == "unstructured":
        return gen_unstructured(UnstructuredMapSpec(seed=gen_seed))
    return gen_structured(
        StructuredMapSpec(
            size_class=spec.map_class,
            seed=gen_seed,
            door_probability=spec.door_probability,
        )
    )


def _cell_name(spec: ExperimentSpec, map_seed: int, team_size: int, planner: str) -> str:
    return f"{spec.map_class}_s{map_seed}_m{team_size}_{planner}_{spec.task}"


def _episode_config(
    spec: ExperimentSpec, map_seed: int, team_size: int, planner: str
) -> EpisodeConfig:
    truth, deploy = build_map(spec, map_seed)
    target = None
    if spec.task == "search":
        max_d = max_target_distance(truth, deploy)
        band = (spec.difficulty_band[0] * max_d, spec.difficulty_band[1] * max_d)
        target = sample_target(
            truth, deploy, derive_seed(spec.seed, "target", spec.map_class, map_seed), band
        )
    return EpisodeConfig(
        truth=truth,
        deploy_zone=deploy,
        team=team_for(spec.composition, team_size),
        planner=planner,
        task=spec.task,
        target=target,
        t_max=spec.t_max or TIMESTEP_LIMITS[spec.map_class],
        t_h=spec.t_h,
        initial_info=spec.initial_info,
        seed=derive_seed(spec.seed, map_seed, team_size, planner),
        llm=spec.llm,
    )


def _run_cell(args) -> tuple[str, str]:
    """Worker: run one episode, return (cell name, record JSON)."""
    spec, map_seed, team_size, planner = args
    cfg = _episode_config(spec, map_seed, team_size, planner)
    record = run_episode(cfg)
    return _cell_name(spec, map_seed, team_size, planner), record.to_json()


def run_experiment(spec: ExperimentSpec) -> SummaryTable:
    """Run every (map seed x team size x planner) cell and aggregate.

    Per-episode records land in <out_dir>/episodes/<cell>.json; cells whose
    record file already exists are loaded instead of rerun.  Episode aborts
    are recorded and the experiment continues.
    """
    out = Path(spec.out_dir)
    episodes_dir = out / "episodes"
    episodes_dir.mkdir(parents=True, exist_ok=True)

    cells = [
        (map_seed, team_size, planner)
        for map_seed in range(spec.map_count)
        for team_size in spec.team_sizes
        for planner in spec.planners
    ]
    pending = [
        cell
        for cell in cells
        if not (episodes_dir / f"{_cell_name(spec, *cell)}.json").exists()
    ]

    if spec.parallel > 1 and pending:
        with ProcessPoolExecutor(max_workers=spec.parallel) as pool:
            for name, payload in pool.map(
                _run_cell, [(spec, *cell) for cell in pending]
            ):
                (episodes_dir / f"{name}.json").write_text(payload, encoding="utf-8")
    else:
        for cell in pending:
            name, payload = _run_cell((spec, *cell))
            (episodes_dir / f"{name}.json").write_text(payload, encoding="utf-8")

    rows: list[EpisodeRow] = []
    for map_seed, team_size, planner in cells:
        payload = (episodes_dir / f"{_cell_name(spec, map_seed, team_size, planner)}.json").read_text(
            encoding="utf-8"
        )
        record = RunRecord.from_json(payload)
        rows.append(
            EpisodeRow(
                map_class=spec.map_class,
                map_seed=map_seed,
                planner=planner,
                team_size=team_size,
                task=spec.task,
                outcome=record.outcome,
                steps=record.steps,
                coverage_at_end=record.final_coverage,
            )
        )

    table = SummaryTable(rows=_summarize(spec, rows), episodes=rows)
    _write_csv(out / "episodes.csv", rows)
    _write_summary_csv(out / "summary.csv", table.rows)
    return table


def _summarize(spec: ExperimentSpec, rows: list[EpisodeRow]) -> list[SummaryRow]:
    summary = []
    for team_size in spec.team_sizes:
        for planner in spec.planners:
            group = [
                r for r in rows if r.team_size == team_size and r.planner == planner
            ]
            if not group:
                continue
            # Timeouts (and aborted episodes) count at the full budget.
            steps = [float(r.steps if r.outcome == "completed" else _t_max(spec)) for r in group]
            q = np.percentile(steps, [0, 25, 50, 75, 100])
            summary.append(
                SummaryRow(
                    map_class=spec.map_class,
                    team_size=team_size,
                    planner=planner,
                    quartiles=tuple(float(x) for x in q),
                    timeouts=sum(1 for r in group if r.outcome != "completed"),
                    mean_coverage=float(np.mean([r.coverage_at_end for r in group])),
                    episodes=len(group),
                )
            )
    return summary


def _t_max(spec: ExperimentSpec) -> int:
    return spec.t_max or TIMESTEP_LIMITS[spec.map_class]


def _write_csv(path: Path, rows: list[EpisodeRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EpisodeRow.CSV_FIELDS)
        for r in rows:
            writer.writerow(
                [
                    r.map_class,
                    r.map_seed,
                    r.planner,
                    r.team_size,
                    r.task,
                    r.outcome,
                    r.steps,
                    f"{r.coverage_at_end:.6f}",
                ]
            )


def _write_summary_csv(path: Path, rows: list[SummaryRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "map_class",
                "team_size",
                "planner",
                "min",
                "q1",
                "median",
                "q3",
                "max",
                "timeouts",
                "mean_coverage",
                "episodes",
            ]
        )
        for r in rows:
            writer.writerow(
                [r.map_class, r.team_size, r.planner, *[f"{q:g}" for q in r.quartiles],
                 r.timeouts, f"{r.mean_coverage:.6f}", r.episodes]
            )


def read_episodes_csv(path) -> list[EpisodeRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                EpisodeRow(
                    map_class=rec["map_class"],
                    map_seed=int(rec["map_seed"]),
                    planner=rec["planner"],
                    team_size=int(rec["team_size"]),
                    task=rec["task"],
                    outcome=rec["outcome"],
                    steps=int(rec["steps"]),
                    coverage_at_end=float(rec["coverage_at_end"]),
                )
            )
    return rows


def compare(table: SummaryTable, baseline: str, challenger: str, t_max: int | None = None) -> float:
    """Percent reduction of the challenger's mean completion time.

    Episodes are matched on (map_class, map_seed, team_size, task); timeouts
    score at the timestep budget.  Positive means the challenger is faster.
    """
    def steps_of(row: EpisodeRow) -> float:
        if row.outcome == "completed":
            return float(row.steps)
        return float(t_max or TIMESTEP_LIMITS[row.map_class])

    base = {
        (r.map_class, r.map_seed, r.team_size, r.task): steps_of(r)
        for r in table.episodes
        if r.planner == baseline
    }
    chal = {
        (r.map_class, r.map_seed, r.team_size, r.task): steps_of(r)
        for r in table.episodes
        if r.planner == challenger
    }
    common = sorted(set(base) & set(chal))
    if not common:
        raise ComparisonError(
            f"no common episodes between {baseline!r} and {challenger!r}"
        )
    mean_base = sum(base[k] for k in common) / len(common)
    mean_chal = sum(chal[k] for k in common) / len(common)
    return (mean_base - mean_chal) / mean_base * 100.0
