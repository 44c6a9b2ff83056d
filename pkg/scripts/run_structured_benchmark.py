#!/usr/bin/env python3
"""Structured-environment benchmark: homogeneous teams, all planners.

Sweeps team sizes over seeded corridor-and-rooms maps for one size class
and writes quartile summaries plus per-episode CSV under --out.  The
language-model planner runs with the offline mock unless --live is given
(which requires MCOX_API_KEY plus --base-url/--model).
"""

import argparse

from mcox.engine import LLMOptions
from mcox.harness import ExperimentSpec, TIMESTEP_LIMITS, compare, run_experiment
from mcox.llm_planner import EndpointConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--class", dest="map_class", default="small",
                        choices=("small", "medium", "large"))
    parser.add_argument("--maps", type=int, default=10)
    parser.add_argument("--teams", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    parser.add_argument("--task", default="explore", choices=("explore", "search"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs/structured")
    parser.add_argument("--parallel", type=int, default=1)
    parser.add_argument("--live", action="store_true",
                        help="query a real endpoint instead of the mock")
    parser.add_argument("--base-url", default="https://api.openai.com/v1")
    parser.add_argument("--model", default="gpt-4o")
    args = parser.parse_args()

    llm = LLMOptions(backend="mock")
    if args.live:
        llm = LLMOptions(
            backend="endpoint",
            endpoint=EndpointConfig(base_url=args.base_url, model=args.model),
        )

    spec = ExperimentSpec(
        map_class=args.map_class,
        map_count=args.maps,
        team_sizes=tuple(args.teams),
        composition="homogeneous",
        planners=("sample-greedy", "meanshift-greedy", "sample-dvc", "llm"),
        task=args.task,
        seed=args.seed,
        out_dir=args.out,
        parallel=args.parallel,
        llm=llm,
    )
    table = run_experiment(spec)
    print(f"{len(table.episodes)} episodes, budget "
          f"{TIMESTEP_LIMITS[args.map_class]} steps")
    for row in table.rows:
        q = ", ".join(f"{v:g}" for v in row.quartiles)
        print(f"  team={row.team_size} {row.planner:18s} quartiles [{q}] "
              f"timeouts={row.timeouts}")
    for challenger in ("sample-dvc", "llm"):
        pct = compare(table, "sample-greedy", challenger)
        print(f"{challenger} vs sample-greedy: {pct:+.1f}% mean completion time")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
