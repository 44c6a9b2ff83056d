"""Command-line entry points.

Subcommands:
  genmap    generate a ground-truth map file
  frontiers rank frontier candidates on a map file, emit CSV
  doorways  detect doorway candidates on a map file, emit CSV
  run       run a batch experiment from a JSON config file
  compare   percent change in mean completion time between two planners
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import harness
from .doorway import DoorwayParams, detect_doorways
from .frontier import FrontierParams, rank_and_select
from .grid import Cell, RobotState, read_map_file, write_map_file
from .llm_planner import EndpointConfig
from .mapgen import (
    SIZE_CLASSES,
    StructuredMapSpec,
    UnstructuredMapSpec,
    gen_structured,
    gen_unstructured,
)


def _parse_cell(text: str) -> Cell:
    r, c = text.split(",")
    return Cell(int(r), int(c))


def _cmd_genmap(args) -> int:
    if args.map_class == "unstructured":
        grid, deploy = gen_unstructured(UnstructuredMapSpec(seed=args.seed))
    else:
        grid, deploy = gen_structured(
            StructuredMapSpec(
                size_class=args.map_class,
                seed=args.seed,
                door_probability=args.p_door,
            )
        )
    write_map_file(args.out, grid)
    anchor = min(deploy)
    print(f"wrote {args.out} ({grid.height}x{grid.width}), deploy zone near "
          f"({anchor.row},{anchor.col})")
    return 0


def _write_rows(out, header, rows) -> None:
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if out:
            fh.close()


def _cmd_frontiers(args) -> int:
    belief = read_map_file(args.map)
    robots = [
        RobotState(i, cell, args.range, 1)
        for i, cell in enumerate(args.robot or [])
    ]
    params = FrontierParams(
        sample_count=args.samples,
        keep_count=args.keep,
        cost_weight=args.cost_weight if robots else 0.0,
        min_separation=args.sep,
    )
    if not robots:
        # Without robots there is no travel cost; score by gain alone from a
        # virtual robot so the utility stays defined.
        robots = [RobotState(0, _first_free(belief), args.range, 1)]
        params = FrontierParams(args.samples, args.keep, 0.0, args.sep)
    cands = rank_and_select(belief, robots, params, args.seed)
    _write_rows(
        args.out,
        ["row", "col", "s", "c", "U"],
        [
            [c.cell.row, c.cell.col, f"{c.info_gain:.6f}", f"{c.cost:.6f}",
             f"{c.utility:.6f}"]
            for c in cands
        ],
    )
    return 0


def _first_free(belief) -> Cell:
    import numpy as np

    free = np.argwhere(belief.free_mask())
    if len(free) == 0:
        raise SystemExit("map has no free cells")
    return Cell(int(free[0][0]), int(free[0][1]))


def _cmd_doorways(args) -> int:
    belief = read_map_file(args.map)
    params = DoorwayParams(
        sample_count=args.samples,
        directions=args.directions,
        max_width=args.max_width,
        ray_length=args.ray_length,
        min_gain=args.min_gain,
        min_separation=args.sep,
    )
    cands = detect_doorways(belief, params, args.range, args.seed)
    _write_rows(
        args.out,
        ["row", "col", "axis_deg", "width", "gain"],
        [
            [d.cell.row, d.cell.col, f"{d.axis_deg:g}", f"{d.width:.4f}",
             f"{d.info_gain:.6f}"]
            for d in cands
        ],
    )
    return 0


def _load_experiment(args) -> harness.ExperimentSpec:
    config = {}
    if args.config:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    exp = dict(config.get("experiment", {}))
    if args.seed is not None:
        exp["seed"] = args.seed
    if args.out is not None:
        exp["out_dir"] = args.out
    if args.planner:
        exp["planners"] = args.planner
    if args.team:
        exp["team_sizes"] = args.team
    if args.task:
        exp["task"] = args.task
    if args.parallel is not None:
        exp["parallel"] = args.parallel

    llm_cfg = dict(config.get("llm", {}))
    llm = harness.LLMOptions(
        backend=llm_cfg.get("backend", "mock"),
        image_scale=int(llm_cfg.get("image_scale", 4)),
    )
    if llm.backend == "endpoint":
        llm.endpoint = EndpointConfig(
            base_url=llm_cfg["base_url"],
            model=llm_cfg["model"],
            api_key_env=llm_cfg.get("api_key_env", "MCOX_API_KEY"),
            timeout_s=float(llm_cfg.get("timeout_s", 60.0)),
            max_retries=int(llm_cfg.get("max_retries", 3)),
        )
    return harness.ExperimentSpec(
        map_class=exp.get("map_class", "small"),
        map_count=int(exp.get("map_count", 10)),
        team_sizes=tuple(exp.get("team_sizes", (2,))),
        composition=exp.get("composition", "homogeneous"),
        planners=tuple(exp.get("planners", ("sample-greedy",))),
        task=exp.get("task", "explore"),
        difficulty_band=tuple(exp.get("difficulty_band", (0.4, 0.8))),
        seed=int(exp.get("seed", 0)),
        out_dir=exp.get("out_dir", "runs/experiment"),
        t_max=exp.get("t_max"),
        t_h=int(exp.get("t_h", 30)),
        door_probability=float(exp.get("door_probability", 0.5)),
        parallel=int(exp.get("parallel", 1)),
        llm=llm,
        initial_info=exp.get("initial_info"),
    )


def _cmd_run(args) -> int:
    spec = _load_experiment(args)
    table = harness.run_experiment(spec)
    print(f"{len(table.episodes)} episodes -> {spec.out_dir}")
    for row in table.rows:
        q = ", ".join(f"{v:g}" for v in row.quartiles)
        print(
            f"  {row.map_class} team={row.team_size} {row.planner}: "
            f"quartiles [{q}] timeouts={row.timeouts} "
            f"coverage={row.mean_coverage:.3f}"
        )
    return 0


def _cmd_compare(args) -> int:
    rows = harness.read_episodes_csv(args.episodes)
    table = harness.SummaryTable(rows=[], episodes=rows)
    pct = harness.compare(table, args.baseline, args.challenger, t_max=args.t_max)
    print(f"{args.challenger} vs {args.baseline}: {pct:+.2f}% mean-time change")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcox", description="Multi-robot exploration/search simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genmap", help="generate a ground-truth map")
    p.add_argument("--class", dest="map_class", required=True,
                   choices=[*SIZE_CLASSES, "unstructured"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--p-door", type=float, default=0.5)
    p.set_defaults(func=_cmd_genmap)

    p = sub.add_parser("frontiers", help="rank frontier candidates on a map")
    p.add_argument("map")
    p.add_argument("--robot", type=_parse_cell, action="append",
                   help="robot cell as row,col (repeatable)")
    p.add_argument("--range", type=int, default=5)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--keep", type=int, default=8)
    p.add_argument("--cost-weight", type=float, default=0.01)
    p.add_argument("--sep", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_frontiers)

    p = sub.add_parser("doorways", help="detect doorway candidates on a map")
    p.add_argument("map")
    p.add_argument("--range", type=int, default=5)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--directions", type=int, default=8)
    p.add_argument("--max-width", type=float, default=5.0)
    p.add_argument("--ray-length", type=float, default=8.0)
    p.add_argument("--min-gain", type=float, default=0.15)
    p.add_argument("--sep", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_doorways)

    p = sub.add_parser("run", help="run a batch experiment")
    p.add_argument("--config", help="JSON config file (see README)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--planner", action="append")
    p.add_argument("--team", type=int, action="append")
    p.add_argument("--task", choices=("explore", "search"))
    p.add_argument("--parallel", type=int)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="compare two planners on an episodes.csv")
    p.add_argument("episodes")
    p.add_argument("--baseline", required=True)
    p.add_argument("--challenger", required=True)
    p.add_argument("--t-max", type=int)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
