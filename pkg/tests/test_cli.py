import csv
import json
from pathlib import Path

import pytest

from mcox.cli import main
from mcox.grid import read_map_file


def test_genmap_writes_parseable_map(tmp_path, capsys):
    out = tmp_path / "map.txt"
    assert main(["genmap", "--class", "small", "--seed", "5", "--out", str(out)]) == 0
    grid = read_map_file(out)
    assert grid.height == grid.width == 60
    assert "deploy zone" in capsys.readouterr().out


def test_genmap_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["genmap", "--class", "small", "--seed", "9", "--out", str(a)])
    main(["genmap", "--class", "small", "--seed", "9", "--out", str(b)])
    assert a.read_text() == b.read_text()


def test_frontiers_emits_candidate_csv(tmp_path):
    map_path = tmp_path / "map.txt"
    main(["genmap", "--class", "small", "--seed", "5", "--out", str(map_path)])
    out = tmp_path / "frontiers.csv"
    # a partially known belief: reuse the truth map but blank the east half
    grid = read_map_file(map_path)
    grid.cells[:, 30:] = -1
    map2 = tmp_path / "belief.txt"
    from mcox.grid import write_map_file

    write_map_file(map2, grid)
    assert main([
        "frontiers", str(map2), "--robot", "30,3", "--seed", "2", "--out", str(out),
    ]) == 0
    rows = list(csv.DictReader(open(out)))
    assert rows
    assert set(rows[0]) == {"row", "col", "s", "c", "U"}


def test_doorways_emits_csv(tmp_path):
    from mcox.grid import write_map_file
    from .test_doorway import gap_fixture

    belief, _ = gap_fixture(3)
    map_path = tmp_path / "belief.txt"
    write_map_file(map_path, belief)
    out = tmp_path / "doors.csv"
    assert main([
        "doorways", str(map_path), "--min-gain", "0.05", "--out", str(out),
    ]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 1
    assert set(rows[0]) == {"row", "col", "axis_deg", "width", "gain"}


def test_run_and_compare_round_trip(tmp_path, capsys):
    config = {
        "experiment": {
            "map_class": "small",
            "map_count": 1,
            "team_sizes": [2],
            "planners": ["sample-greedy", "llm"],
            "task": "explore",
            "seed": 4,
            "out_dir": str(tmp_path / "exp"),
            "t_max": 120,
        },
        "llm": {"backend": "mock"},
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    assert main(["run", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "episodes" in out and "sample-greedy" in out

    episodes = tmp_path / "exp" / "episodes.csv"
    assert episodes.exists()
    assert main([
        "compare", str(episodes), "--baseline", "sample-greedy",
        "--challenger", "llm", "--t-max", "120",
    ]) == 0
    assert "mean-time change" in capsys.readouterr().out


def test_run_flag_overrides(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({
        "experiment": {"map_count": 1, "t_max": 80, "planners": ["sample-dvc"]}
    }))
    assert main([
        "run", "--config", str(cfg_path), "--seed", "1",
        "--out", str(tmp_path / "exp2"), "--planner", "sample-greedy",
        "--team", "1", "--task", "explore", "--parallel", "1",
    ]) == 0
    assert (tmp_path / "exp2" / "summary.csv").exists()
    # the --planner flag overrode the config's planner list
    rows = (tmp_path / "exp2" / "episodes.csv").read_text()
    assert "sample-greedy" in rows and "sample-dvc" not in rows
