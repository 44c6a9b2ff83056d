"""Centralized language-model waypoint planner.

The planner sees structured context (ranked frontiers, doorway candidates,
robot states and characteristics, a grayscale render of the shared belief
map) plus unstructured context (an optional natural-language hint, the
previous cycle's plan summary, execution feedback) and returns per-robot
waypoint sequences with a fresh plan summary.

Two backends share the same context type: an HTTP client speaking the
chat-completions wire format (text part + base64 PNG image part), and a
deterministic scripted mock for offline runs and tests.
"""

from __future__ import annotations

import base64
import io
import json
import math
import os
import re
import time
from dataclasses import dataclass, field

import numpy as np
import requests
from PIL import Image

from .baselines import voronoi_partition
from .doorway import DoorwayCandidate
from .frontier import FrontierCandidate
from .grid import Cell, CellState, GridMap, PGM_VALUES, RobotState

ROBOT_PIXEL = 64  # overlay value: darker than free, lighter than walls
MAX_IMAGE_SIDE = 1024
SUMMARY_LIMIT = 1000  # S_plan truncation before reuse in the next prompt
MOCK_QUEUE_CAP = 4


class ParseError(ValueError):
    """No robot waypoint line could be extracted from a response."""


class EndpointConfigError(RuntimeError):
    """Endpoint settings are unusable (e.g. missing API key)."""


class EndpointError(RuntimeError):
    """Endpoint kept failing after the configured retries."""


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str = "MCOX_API_KEY"
    timeout_s: float = 60.0
    max_retries: int = 3

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


@dataclass
class PlannerContext:
    task: str  # "explore" or "search"
    frontiers: list[FrontierCandidate]
    doorways: list[DoorwayCandidate]
    robots: list[RobotState]
    map_image: bytes
    map_shape: tuple[int, int]
    initial_info: str | None = None
    plan_summary: str = ""
    exec_events: list[str] = field(default_factory=list)


@dataclass
class PlanResponse:
    waypoints: dict[int, list[Cell]]
    summary: str
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Prompt:
    text: str
    image_png: bytes


def render_map_image(
    belief: GridMap, robots: list[RobotState], scale: int = 4
) -> bytes:
    """Grayscale PNG of the belief: unknown=255, free=128, occupied=0,
    robot cells overlaid darker.  Deterministic bytes for fixed input."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    scale = min(scale, max(1, MAX_IMAGE_SIDE // max(belief.height, belief.width)))
    lut = np.zeros(3, dtype=np.uint8)
    for state, value in PGM_VALUES.items():
        lut[int(state) + 1] = value
    pixels = lut[belief.cells.astype(np.int16) + 1]
    for robot in robots:
        pixels[robot.position.row, robot.position.col] = ROBOT_PIXEL
    pixels = np.repeat(np.repeat(pixels, scale, axis=0), scale, axis=1)
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def _format_waypoint_lines(waypoints: dict[int, list[Cell]]) -> list[str]:
    return [
        "ROBOT {}: {}".format(
            rid, " ".join(f"({r},{c})" for r, c in cells)
        ).rstrip()
        for rid, cells in sorted(waypoints.items())
    ]


def format_response(plan: PlanResponse) -> str:
    """Canonical response text: one ROBOT line per robot, then SUMMARY."""
    lines = _format_waypoint_lines(plan.waypoints)
    lines.append(f"SUMMARY: {plan.summary}")
    return "\n".join(lines) + "\n"


_TASK_BLURB = {
    "explore": (
        "Your objective is to fully explore the environment: every reachable "
        "free cell and its bounding walls must become known."
    ),
    "search": (
        "Your objective is to locate a target object at an unknown position; "
        "the task completes as soon as any robot's sensor footprint covers it."
    ),
}


def build_prompt(ctx: PlannerContext) -> Prompt:
    """Assemble the fixed planning prompt from the context.

    Section order: task statement, robot states, frontier candidates,
    doorway candidates, optional initial hint (verbatim), previous plan
    summary, execution report, map-image note, response format.
    """
    h, w = ctx.map_shape
    lines = [
        f"You are the central planner for a team of {len(ctx.robots)} robots "
        f"on a {h}x{w} occupancy grid. {_TASK_BLURB[ctx.task]}",
        "Coordinates are (row, col); row 0 is the top edge, col 0 the west edge.",
        "",
        "ROBOT STATES:",
    ]
    for robot in sorted(ctx.robots, key=lambda r: r.id):
        lines.append(
            f"  robot {robot.id}: position=({robot.position.row},{robot.position.col})"
            f" detection_range={robot.detect_range} max_speed={robot.max_speed}"
        )
    lines.append("")
    lines.append("FRONTIER CANDIDATES (cell, info_gain, utility):")
    if ctx.frontiers:
        for f in ctx.frontiers:
            lines.append(
                f"  ({f.cell.row},{f.cell.col}) s={f.info_gain:.4f} U={f.utility:.4f}"
            )
    else:
        lines.append("  none")
    lines.append("")
    lines.append("DOORWAY CANDIDATES (cell, gain):")
    if ctx.doorways:
        for d in ctx.doorways:
            lines.append(f"  ({d.cell.row},{d.cell.col}) gain={d.info_gain:.4f}")
    else:
        lines.append("  none")
    if ctx.initial_info:
        lines.append("")
        lines.append("INITIAL INFORMATION:")
        lines.append(f"  {ctx.initial_info}")
    lines.append("")
    lines.append("PREVIOUS PLAN SUMMARY:")
    lines.append(f"  {ctx.plan_summary or 'none'}")
    lines.append("")
    lines.append("EXECUTION REPORT:")
    if ctx.exec_events:
        for event in ctx.exec_events:
            lines.append(f"  {event}")
    else:
        lines.append("  all waypoints reached")
    lines.append("")
    lines.append(
        "MAP IMAGE: attached as a base64 grayscale PNG "
        "(unknown=white, free=gray, occupied=black, robots dark)."
    )
    lines.append("")
    lines.append("RESPONSE FORMAT:")
    lines.append("  One line per robot: ROBOT <id>: (r1,c1) (r2,c2) ...")
    lines.append("  Then exactly one line: SUMMARY: <one-line plan summary>")
    lines.append(
        "  Waypoints are not restricted to the candidates listed above; any "
        "promising cell on the map, including unexplored regions, may be chosen."
    )
    return Prompt("\n".join(lines) + "\n", ctx.map_image)


_ROBOT_LINE = re.compile(r"ROBOT\s*(\d+)\s*:(.*)", re.IGNORECASE)
_COORD = re.compile(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)")
_SUMMARY_LINE = re.compile(r"SUMMARY\s*:\s*(.*)", re.IGNORECASE)


def parse_response(raw: str, belief: GridMap, robot_count: int) -> PlanResponse:
    """Extract per-robot waypoint queues and the plan summary from raw text.

    Tolerant of surrounding prose: any line containing `ROBOT <id>:` is
    scanned for (row,col) pairs.  Waypoints that are out of bounds or on
    occupied cells are dropped with a warning (unknown cells are allowed:
    the planner may aim at unexplored space).  Robots without a line get
    empty queues; duplicate lines for one robot keep the last.  Raises
    ParseError when no robot line parses at all.
    """
    waypoints: dict[int, list[Cell]] = {}
    warnings: list[str] = []
    summary = ""
    found_any = False
    for line in raw.splitlines():
        robot_match = _ROBOT_LINE.search(line)
        if robot_match:
            rid = int(robot_match.group(1))
            if not 0 <= rid < robot_count:
                warnings.append(f"ignored waypoints for unknown robot {rid}")
                continue
            found_any = True
            cells: list[Cell] = []
            for r_str, c_str in _COORD.findall(robot_match.group(2)):
                cell = Cell(int(r_str), int(c_str))
                if not belief.in_bounds(cell):
                    warnings.append(f"robot {rid}: dropped out-of-bounds {tuple(cell)}")
                elif belief.state(cell) is CellState.OCCUPIED:
                    warnings.append(f"robot {rid}: dropped occupied {tuple(cell)}")
                else:
                    cells.append(cell)
            waypoints[rid] = cells
            continue
        summary_match = _SUMMARY_LINE.search(line)
        if summary_match:
            summary = summary_match.group(1).strip()
    if not found_any:
        raise ParseError("no parseable ROBOT waypoint lines in response")
    for rid in range(robot_count):
        waypoints.setdefault(rid, [])
    return PlanResponse(waypoints, summary, warnings)


def query_endpoint(
    cfg: EndpointConfig,
    prompt: Prompt,
    send=None,
    sleep=time.sleep,
) -> str:
    """POST a chat-completions request and return the assistant text.

    The request carries one user message with a text part and a base64 PNG
    image part.  Transport errors and 5xx responses are retried with
    exponential backoff up to cfg.max_retries; other failures raise
    immediately.  `send` may be injected for testing and must return
    (status_code, body_text).
    """
    key = os.environ.get(cfg.api_key_env)
    if not key:
        raise EndpointConfigError(
            f"API key environment variable {cfg.api_key_env!r} is not set"
        )
    image_b64 = base64.b64encode(prompt.image_png).decode("ascii")
    payload = {
        "model": cfg.model,
        "messages": [
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": prompt.text},
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:image/png;base64,{image_b64}"},
                    },
                ],
            }
        ],
    }

    def _default_send(body: dict) -> tuple[int, str]:
        resp = requests.post(
            cfg.base_url.rstrip("/") + "/chat/completions",
            json=body,
            headers={"Authorization": f"Bearer {key}"},
            timeout=cfg.timeout_s,
        )
        return resp.status_code, resp.text

    send = send or _default_send
    last_error = None
    for attempt in range(cfg.max_retries + 1):
        if attempt > 0:
            sleep(0.5 * 2 ** (attempt - 1))
        try:
            status, body = send(payload)
        except (requests.RequestException, OSError) as exc:
            last_error = f"transport error: {exc}"
            continue
        if status >= 500:
            last_error = f"server error {status}"
            continue
        if status != 200:
            raise EndpointError(f"endpoint returned {status}: {body[:200]}")
        try:
            data = json.loads(body)
            return data["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise EndpointError(f"malformed endpoint response: {exc}")
    raise EndpointError(f"retries exhausted: {last_error}")


def mock_planner(ctx: PlannerContext, seed: int) -> PlanResponse:
    """Deterministic scripted stand-in for the language-model backend.

    Splits the union of frontier and doorway candidates into per-robot
    Voronoi regions, orders each region by a nearest-neighbor chain from
    the robot, and caps queues at MOCK_QUEUE_CAP waypoints.  Ignores the
    natural-language hint (it cannot read); byte-deterministic per
    (context, seed).
    """
    cells: list[Cell] = []
    for cand in list(ctx.frontiers) + list(ctx.doorways):
        if cand.cell not in cells:
            cells.append(cand.cell)
    robots = sorted(ctx.robots, key=lambda r: r.id)
    if not cells:
        return PlanResponse({r.id: [] for r in robots}, "no candidates")

    parts = voronoi_partition(cells, robots)
    waypoints: dict[int, list[Cell]] = {}
    for robot in robots:
        remaining = sorted(parts[robot.id])
        here = robot.position
        queue: list[Cell] = []
        while remaining and len(queue) < MOCK_QUEUE_CAP:
            nxt = min(
                remaining,
                key=lambda c: (math.hypot(c.row - here.row, c.col - here.col), c),
            )
            queue.append(nxt)
            remaining.remove(nxt)
            here = nxt
        waypoints[robot.id] = queue
    total = sum(len(q) for q in waypoints.values())
    summary = (
        f"assigned {total} waypoints across {len(robots)} robots covering "
        f"{len(ctx.frontiers)} frontier and {len(ctx.doorways)} doorway candidates"
    )
    return PlanResponse(waypoints, summary)
