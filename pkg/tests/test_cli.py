import csv
import json

import pytest

from lsqd.cli import RESULT_COLUMNS, main

TIMING = {"wall_time_s"}


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def run(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["--preset", "demo1d", "--p", "2,3", "--splits", "0..2", "--out", str(out), *extra])
    return code, out


def test_schema_and_summary(tmp_path):
    code, out = run(tmp_path, "a")
    assert code == 0
    with open(out / "results.csv") as fh:
        assert next(csv.reader(fh)) == RESULT_COLUMNS
    rows = read_rows(out / "results.csv")
    assert [(int(r["P"]), int(r["splits"])) for r in rows] == [(P, s) for P in (2, 3) for s in range(3)]
    assert rows[0]["eoc_running"] == "nan"
    assert float(rows[2]["eoc_running"]) > 1.0
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["P"]) == {"2", "3"}
    assert summary["P"]["2"]["eoc"] > 1.0
    lines = (out / "solves.log").read_text().splitlines()
    assert len(lines) == 6 and len(lines[0].split(",")) == 7


def test_deterministic_modulo_timing(tmp_path):
    _, a = run(tmp_path, "a")
    _, b = run(tmp_path, "b", "--threads", "2")
    ra, rb = read_rows(a / "results.csv"), read_rows(b / "results.csv")
    strip = lambda rows: [{k: v for k, v in r.items() if k not in TIMING} for r in rows]
    assert strip(ra) == strip(rb)


def test_invalid_preset_writes_nothing(tmp_path):
    out = tmp_path / "bad"
    assert main(["--preset", "dirichlet/cube/uniform", "--out", str(out)]) == 1
    assert not (out / "results.csv").exists()


def test_invalid_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "demo1d", "solver": {"preconditioner": "amg"}, "out": str(tmp_path / "o")}))
    assert main(["--config", str(cfg)]) == 1
    assert not (tmp_path / "o" / "results.csv").exists()
    cfg.write_text("{not json")
    assert main(["--config", str(cfg)]) == 1


def test_nonconvergence_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    out = tmp_path / "o"
    cfg.write_text(json.dumps({"preset": "demo1d", "P": [3], "splits": [2], "out": str(out),
                               "solver": {"max_iters": 2, "preconditioner": "none"}}))
    assert main(["--config", str(cfg)]) == 2
    assert len(read_rows(out / "results.csv")) == 1


def test_explicit_block_and_dumps(tmp_path):
    cfg = tmp_path / "c.json"
    out = tmp_path / "o"
    cfg.write_text(json.dumps({
        "domain": "square", "grid": {"mode": "uniform", "base_depth": 2},
        "problem": {"exact": "polynomial", "degree": 2, "bc": "robin"},
        "P": [2], "splits": [0], "out": str(out), "dump": ["solution", "estimator", "grid", "system"],
    }))
    assert main(["--config", str(cfg)]) == 0
    rows = read_rows(out / "results.csv")
    assert float(rows[0]["linf_error"]) < 1e-9
    for name in ("solution_P2_s0.csv", "estimator_P2_s0.csv", "grid_P2_s0.csv", "neighborhoods_P2_s0.csv"):
        assert (out / name).exists()
    assert any(p.suffix == ".mtx" for p in out.iterdir())


@pytest.mark.parametrize("argv", [["--p", "x"], ["--dump", "everything"]])
def test_argparse_rejects(argv):
    with pytest.raises(SystemExit):
        main(argv)
