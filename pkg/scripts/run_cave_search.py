#!/usr/bin/env python3
"""Cave-environment search benchmark with homogeneous or heterogeneous teams.

Unstructured 150x150 maps, a target sampled per map inside the difficulty
band, mock-backed language-model planner by default.  Heterogeneous teams
mix fast short-range with slow long-range robots.
"""

import argparse

from mcox.harness import ExperimentSpec, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--maps", type=int, default=10)
    parser.add_argument("--teams", type=int, nargs="+", default=[4, 5, 6])
    parser.add_argument("--composition", default="heterogeneous",
                        choices=("homogeneous", "heterogeneous"))
    parser.add_argument("--hint", default=None,
                        help="natural-language prior passed to the informed planner")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs/cave-search")
    parser.add_argument("--parallel", type=int, default=1)
    args = parser.parse_args()

    planners = ["sample-greedy", "meanshift-greedy", "sample-dvc", "llm"]
    if args.hint:
        planners.append("llm-informed")
    spec = ExperimentSpec(
        map_class="unstructured",
        map_count=args.maps,
        team_sizes=tuple(args.teams),
        composition=args.composition,
        planners=tuple(planners),
        task="search",
        seed=args.seed,
        out_dir=args.out,
        parallel=args.parallel,
        initial_info=args.hint,
    )
    table = run_experiment(spec)
    for row in table.rows:
        q = ", ".join(f"{v:g}" for v in row.quartiles)
        print(f"  team={row.team_size} {row.planner:18s} quartiles [{q}] "
              f"timeouts={row.timeouts}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
