"""Episode simulation loop.

One episode runs a robot team against a ground-truth map until the task
completes or the timestep limit is hit:

  1. replan when the trigger fires (greedy planners: any queue empty;
     DVC/LLM planners: all queues empty; all planners: the replan horizon
     elapsed), producing fresh waypoint queues from the current belief;
  2. per robot in ascending id: pop statically unreachable head waypoints
     with an execution report, wait in place when transiently blocked by
     another robot, otherwise advance along a shortest path by up to the
     robot's speed;
  3. every robot scans, the buffered observations merge into the shared
     belief once per timestep;
  4. safety (pairwise distance >= d_safe) is checked every step.

Episodes are deterministic for the mock and baseline planners given the
config seed.  Per-step metrics, planning-cycle markers, and the event log
go into a RunRecord serializable as versioned JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import baselines, llm_planner, nav
from .doorway import DoorwayParams, detect_doorways
from .frontier import FrontierParams, rank_and_select, mean_shift_frontiers
from .grid import (
    Cell,
    CellState,
    GridMap,
    RobotState,
    format_ascii,
    lidar_scan,
    merge,
    new_belief,
    reachable_mask,
    relevant_mask,
    to_pgm,
)
from .llm_planner import (
    SUMMARY_LIMIT,
    EndpointConfig,
    ParseError,
    PlannerContext,
    build_prompt,
    format_response,
    mock_planner,
    parse_response,
    query_endpoint,
    render_map_image,
)
from .rng import derive_seed

RECORD_SCHEMA_VERSION = 1
D_SAFE = nav.D_SAFE

PLANNER_KINDS = ("sample-greedy", "meanshift-greedy", "sample-dvc", "llm", "llm-informed")
_GREEDY_KINDS = ("sample-greedy", "meanshift-greedy")
_LLM_KINDS = ("llm", "llm-informed")


class ConfigError(ValueError):
    pass


class SafetyViolation(RuntimeError):
    """Two robots came closer than d_safe; indicates an engine bug."""


@dataclass
class LLMOptions:
    backend: str = "mock"  # "mock" or "endpoint"
    endpoint: EndpointConfig | None = None
    image_scale: int = 4


@dataclass
class EpisodeConfig:
    truth: GridMap
    deploy_zone: set[Cell]
    team: list[tuple[int, int]]  # (detect_range, max_speed) per robot
    planner: str
    task: str = "explore"  # "explore" or "search"
    target: Cell | None = None
    t_max: int = 1000
    t_h: int = 30  # replan horizon
    initial_info: str | None = None
    seed: int = 0
    frontier_params: FrontierParams = field(default_factory=FrontierParams)
    doorway_params: DoorwayParams = field(default_factory=DoorwayParams)
    meanshift_bandwidth: float = 6.0
    meanshift_min_cluster: int = 4
    llm: LLMOptions = field(default_factory=LLMOptions)
    pgm_every: int = 0  # dump belief PGM snapshots every N steps when > 0

    def validate(self) -> None:
        if self.planner not in PLANNER_KINDS:
            raise ConfigError(f"unknown planner {self.planner!r}")
        if self.task not in ("explore", "search"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.task == "search":
            if self.target is None:
                raise ConfigError("search task needs a target cell")
            if not self.truth.in_bounds(self.target):
                raise ConfigError("target out of bounds")
        if self.t_max <= 0 or self.t_h <= 0:
            raise ConfigError("t_max and t_h must be positive")
        if not self.team:
            raise ConfigError("team must be non-empty")
        if len(self.deploy_zone) < len(self.team):
            raise ConfigError("deploy zone smaller than the team")
        if self.planner == "llm-informed" and not self.initial_info:
            raise ConfigError("llm-informed planner needs initial_info")


@dataclass
class StepRecord:
    t: int
    replanned: bool
    queue_lens_before: list[int]
    t_since_before: int
    positions: list[Cell]
    coverage: float
    events: list[str]
    target_known: bool | None = None


@dataclass
class CycleRecord:
    t: int
    num_frontiers: int
    num_doorways: int
    summary: str
    fallback: bool = False


@dataclass
class RunRecord:
    planner: str
    task: str
    seed: int
    team: list[tuple[int, int]]
    outcome: str  # "completed" | "timeout" | "error"
    steps: int
    final_coverage: float
    initial_coverage: float
    step_log: list[StepRecord]
    cycles: list[CycleRecord]
    error: str | None
    final_belief: list[str]

    def to_json(self) -> str:
        payload = {
            "schema_version": RECORD_SCHEMA_VERSION,
            "planner": self.planner,
            "task": self.task,
            "seed": self.seed,
            "team": [list(t) for t in self.team],
            "outcome": self.outcome,
            "steps": self.steps,
            "final_coverage": self.final_coverage,
            "initial_coverage": self.initial_coverage,
            "steps_log": [
                {
                    "t": s.t,
                    "replanned": s.replanned,
                    "queue_lens_before": s.queue_lens_before,
                    "t_since_before": s.t_since_before,
                    "positions": [list(p) for p in s.positions],
                    "coverage": s.coverage,
                    "events": s.events,
                    "target_known": s.target_known,
                }
                for s in self.step_log
            ],
            "cycles": [
                {
                    "t": c.t,
                    "num_frontiers": c.num_frontiers,
                    "num_doorways": c.num_doorways,
                    "summary": c.summary,
                    "fallback": c.fallback,
                }
                for c in self.cycles
            ],
            "error": self.error,
            "final_belief": self.final_belief,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "RunRecord":
        data = json.loads(text)
        if data["schema_version"] != RECORD_SCHEMA_VERSION:
            raise ValueError(f"unsupported record schema {data['schema_version']}")
        return RunRecord(
            planner=data["planner"],
            task=data["task"],
            seed=data["seed"],
            team=[tuple(t) for t in data["team"]],
            outcome=data["outcome"],
            steps=data["steps"],
            final_coverage=data["final_coverage"],
            initial_coverage=data["initial_coverage"],
            step_log=[
                StepRecord(
                    t=s["t"],
                    replanned=s["replanned"],
                    queue_lens_before=s["queue_lens_before"],
                    t_since_before=s["t_since_before"],
                    positions=[Cell(*p) for p in s["positions"]],
                    coverage=s["coverage"],
                    events=s["events"],
                    target_known=s["target_known"],
                )
                for s in data["steps_log"]
            ],
            cycles=[
                CycleRecord(
                    t=c["t"],
                    num_frontiers=c["num_frontiers"],
                    num_doorways=c["num_doorways"],
                    summary=c["summary"],
                    fallback=c["fallback"],
                )
                for c in data["cycles"]
            ],
            error=data["error"],
            final_belief=data["final_belief"],
        )


def place_team(deploy_zone: set[Cell], count: int, seed: int) -> list[Cell]:
    """Distinct starting cells inside the deploy zone.

    Cells are taken in order of distance to the zone centroid (ties by
    (row, col)), mirroring a team entering through one doorway.  The seed
    is accepted for interface stability; placement does not currently
    randomize.
    """
    if count < 1:
        raise ConfigError("team size must be >= 1")
    if len(deploy_zone) < count:
        raise ConfigError(f"deploy zone has {len(deploy_zone)} cells, need {count}")
    cells = sorted(deploy_zone)
    centroid_r = sum(c.row for c in cells) / len(cells)
    centroid_c = sum(c.col for c in cells) / len(cells)
    cells.sort(key=lambda c: ((c.row - centroid_r) ** 2 + (c.col - centroid_c) ** 2, c))
    return cells[:count]


def check_search_done(belief: GridMap, target: Cell) -> bool:
    """True once the target cell is known (free or occupied) in the belief."""
    if not belief.in_bounds(target):
        raise ConfigError(f"target {target} out of bounds")
    return belief.state(Cell(*target)) is not CellState.UNKNOWN


def _check_safety(robots: list[RobotState]) -> None:
    for i, a in enumerate(robots):
        for b in robots[i + 1 :]:
            d = math.hypot(
                a.position.row - b.position.row, a.position.col - b.position.col
            )
            if d < D_SAFE:
                raise SafetyViolation(
                    f"robots {a.id} and {b.id} at distance {d:.3f} < {D_SAFE}"
                )


class _Episode:
    """Mutable state for one run; `run` drives the loop."""

    def __init__(self, cfg: EpisodeConfig, out_dir: Path | None = None):
        cfg.validate()
        self.cfg = cfg
        self.out_dir = Path(out_dir) if out_dir else None
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        self.truth = cfg.truth
        self.belief = new_belief(
            self.truth.height, self.truth.width, self.truth.resolution
        )
        starts = place_team(cfg.deploy_zone, len(cfg.team), cfg.seed)
        self.robots = [
            RobotState(i, pos, det, spd)
            for i, (pos, (det, spd)) in enumerate(zip(starts, cfg.team))
        ]
        for robot in self.robots:
            if self.truth.state(robot.position) is not CellState.FREE:
                raise ConfigError(f"deploy cell {robot.position} is not free")
        reach = reachable_mask(self.truth, self.robots[0].position)
        self.relevant = relevant_mask(self.truth, reach)
        if not self.relevant.any():
            raise ConfigError("map has no relevant cells")
        self.paths: dict[int, list[Cell]] = {r.id: [] for r in self.robots}
        self._cluster_cache: tuple[bytes, list[Cell]] | None = None
        self.plan_summary = ""
        self.exec_events: list[str] = []
        self.t = 0
        self.t_since_plan = 0
        self.cycle_index = 0
        self.step_log: list[StepRecord] = []
        self.cycles: list[CycleRecord] = []

    # -- helpers ---------------------------------------------------------

    def _coverage(self) -> float:
        known = self.belief.cells[self.relevant] != CellState.UNKNOWN
        return float(int(known.sum()) / int(self.relevant.sum()))

    def _scan_all(self) -> None:
        observations: dict[Cell, CellState] = {}
        for robot in self.robots:
            for cell, state in lidar_scan(
                self.truth, robot.position, robot.detect_range
            ):
                observations[cell] = state
        self.belief = merge(self.belief, sorted(observations.items()))

    def _task_done(self) -> bool:
        if self.cfg.task == "search":
            return check_search_done(self.belief, self.cfg.target)
        return bool(
            (self.belief.cells[self.relevant] != CellState.UNKNOWN).all()
        )

    def _replan_due(self) -> bool:
        if self.t_since_plan >= self.cfg.t_h:
            return True
        queues = [len(r.waypoints) for r in self.robots]
        if self.cfg.planner in _GREEDY_KINDS:
            return any(q == 0 for q in queues)
        return all(q == 0 for q in queues)

    def _write_transcript(self, name: str, text: str) -> None:
        if self.out_dir:
            path = self.out_dir / f"cycle_{self.cycle_index:03d}_{name}.txt"
            path.write_text(text, encoding="utf-8")

    # -- planning --------------------------------------------------------

    def _replan(self) -> list[str]:
        cfg = self.cfg
        events: list[str] = []
        fp = cfg.frontier_params
        frontier_seed = derive_seed(cfg.seed, "frontier", self.cycle_index)
        candidates = rank_and_select(self.belief, self.robots, fp, frontier_seed)

        doorways = []
        summary = ""
        fallback = False
        if cfg.planner == "sample-greedy":
            assignment = baselines.greedy_assign(candidates, self.robots, self.belief)
        elif cfg.planner == "meanshift-greedy":
            # Clustering is a pure function of the belief; skip recomputation
            # while the robots are stalled and the map is not changing.
            key = self.belief.cells.tobytes()
            if self._cluster_cache is None or self._cluster_cache[0] != key:
                clusters = mean_shift_frontiers(
                    self.belief, cfg.meanshift_bandwidth, cfg.meanshift_min_cluster
                )
                self._cluster_cache = (key, clusters)
            assignment = baselines.greedy_assign(
                self._cluster_cache[1], self.robots, self.belief
            )
        elif cfg.planner == "sample-dvc":
            assignment = baselines.dvc_assign(candidates, self.robots, self.belief)
        else:
            max_range = max(r.detect_range for r in self.robots)
            doorways = detect_doorways(
                self.belief,
                cfg.doorway_params,
                max_range,
                derive_seed(cfg.seed, "doorway", self.cycle_index),
            )
            ctx = PlannerContext(
                task=cfg.task,
                frontiers=candidates,
                doorways=doorways,
                robots=self.robots,
                map_image=render_map_image(
                    self.belief, self.robots, cfg.llm.image_scale
                ),
                map_shape=(self.belief.height, self.belief.width),
                initial_info=cfg.initial_info if cfg.planner == "llm-informed" else None,
                plan_summary=self.plan_summary[:SUMMARY_LIMIT],
                exec_events=list(self.exec_events),
            )
            response, fallback = self._query_llm(ctx)
            if fallback:
                assignment = baselines.greedy_assign(
                    candidates, self.robots, self.belief
                )
                events.append("parse fallback engaged")
                summary = self.plan_summary  # carry the old summary forward
            else:
                assignment = {
                    rid: list(cells) for rid, cells in response.waypoints.items()
                }
                summary = response.summary
                for warning in response.warnings:
                    events.append(f"plan warning: {warning}")

        for robot in self.robots:
            robot.waypoints = list(assignment.get(robot.id, []))
            self.paths[robot.id] = []
        self.plan_summary = summary
        self.cycles.append(
            CycleRecord(
                t=self.t,
                num_frontiers=len(candidates),
                num_doorways=len(doorways),
                summary=summary,
                fallback=fallback,
            )
        )
        self.t_since_plan = 0
        self.exec_events = []
        self.cycle_index += 1
        return events

    def _query_llm(self, ctx: PlannerContext):
        """Returns (PlanResponse | None, fallback_engaged)."""
        cfg = self.cfg
        if cfg.llm.backend == "mock":
            response = mock_planner(
                ctx, derive_seed(cfg.seed, "plan", self.cycle_index)
            )
            self._write_transcript("prompt", build_prompt(ctx).text)
            self._write_transcript("response", format_response(response))
            return response, False
        if cfg.llm.endpoint is None:
            raise ConfigError("endpoint backend selected without endpoint config")
        prompt = build_prompt(ctx)
        self._write_transcript("prompt", prompt.text)
        raw = ""
        for _ in range(2):  # one re-query after a parse failure
            raw = query_endpoint(cfg.llm.endpoint, prompt)
            self._write_transcript("response", raw)
            try:
                return parse_response(raw, self.belief, len(self.robots)), False
            except ParseError:
                continue
        return None, True

    # -- movement --------------------------------------------------------

    def _step_robot(self, robot: RobotState) -> list[str]:
        events: list[str] = []
        if not robot.waypoints:
            return events
        goal = robot.waypoints[0]
        others = [
            nav.Obstacle(other.position)
            for other in self.robots
            if other.id != robot.id
        ]
        other_cells = {o.center for o in others}

        path = self.paths[robot.id]
        horizon = min(robot.max_speed, len(path) - 1) if path else 0
        stale = (
            not path
            or path[0] != robot.position
            or path[-1] != goal
            or any(cell in other_cells for cell in path[1 : horizon + 1])
        )
        if stale:
            path = nav.try_plan_path(self.belief, robot.position, goal, others)
            if path is None:
                if nav.try_plan_path(self.belief, robot.position, goal) is None:
                    # Statically unreachable: report and drop the waypoint.
                    events.append(
                        f"({goal.row},{goal.col}) unreachable by robot {robot.id}"
                    )
                    robot.waypoints.pop(0)
                else:
                    # Another robot is in the way: wait one step, replan next.
                    pass
                self.paths[robot.id] = []
                return events
        new_pos, remaining = nav.advance(path, robot.max_speed)
        robot.position = new_pos
        self.paths[robot.id] = remaining
        if new_pos == goal:
            robot.waypoints.pop(0)
            self.paths[robot.id] = []
        return events

    # -- main loop -------------------------------------------------------

    def run(self) -> RunRecord:
        cfg = self.cfg
        self._scan_all()  # initial sensing pass at deployment
        initial_coverage = self._coverage()

        outcome, steps, error = "timeout", cfg.t_max, None
        if self._task_done():
            outcome, steps = "completed", 0
        else:
            try:
                while self.t < cfg.t_max:
                    queue_lens = [len(r.waypoints) for r in self.robots]
                    t_since_before = self.t_since_plan
                    replanned = self._replan_due()
                    events: list[str] = []
                    if replanned:
                        events.extend(self._replan())
                    for robot in self.robots:
                        robot_events = self._step_robot(robot)
                        events.extend(robot_events)
                        self.exec_events.extend(robot_events)
                    self._scan_all()
                    _check_safety(self.robots)
                    self.t += 1
                    self.t_since_plan += 1
                    done = self._task_done()
                    if cfg.task == "search" and done:
                        events.append(
                            f"target ({cfg.target[0]},{cfg.target[1]}) observed"
                        )
                    self.step_log.append(
                        StepRecord(
                            t=self.t - 1,
                            replanned=replanned,
                            queue_lens_before=queue_lens,
                            t_since_before=t_since_before,
                            positions=[r.position for r in self.robots],
                            coverage=self._coverage(),
                            events=events,
                            target_known=(
                                check_search_done(self.belief, cfg.target)
                                if cfg.task == "search"
                                else None
                            ),
                        )
                    )
                    if self.out_dir and cfg.pgm_every and self.t % cfg.pgm_every == 0:
                        (self.out_dir / f"belief_{self.t:05d}.pgm").write_bytes(
                            to_pgm(self.belief)
                        )
                    if done:
                        outcome, steps = "completed", self.t
                        break
            except (llm_planner.EndpointError, llm_planner.EndpointConfigError) as exc:
                outcome, steps, error = "error", self.t, str(exc)

        record = RunRecord(
            planner=cfg.planner,
            task=cfg.task,
            seed=cfg.seed,
            team=list(cfg.team),
            outcome=outcome,
            steps=steps,
            final_coverage=self._coverage(),
            initial_coverage=initial_coverage,
            step_log=self.step_log,
            cycles=self.cycles,
            error=error,
            final_belief=format_ascii(self.belief).splitlines(),
        )
        if self.out_dir:
            (self.out_dir / "record.json").write_text(
                record.to_json(), encoding="utf-8"
            )
        return record


def run_episode(cfg: EpisodeConfig, out_dir: Path | None = None) -> RunRecord:
    """Run one seeded episode; see the module docstring for the loop."""
    return _Episode(cfg, out_dir).run()
