import csv
import io
import json

import pytest
from click.testing import CliRunner

from congsiegel.cli import main, parse_config

run = CliRunner().invoke


def test_parse_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"N": 2, "v0": [1, 0], "seed": 3, "region": "disk:5"}))
    cfg = parse_config("verify first-moment", {"seed": 9}, str(cfg_file))
    assert cfg.seed == 9 and cfg.N == 2 and cfg.v0 == (1, 0)


def test_parse_config_rejects_unknown_keys(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"N": 2, "colour": "red"}))
    r = run(main, ["verify", "first-moment", "--config", str(cfg_file)])
    assert r.exit_code == 2 and "colour" in r.output


def test_gcd_rejected():
    r = run(main, ["verify", "first-moment", "--N", "2", "--v0", "2,4"])
    assert r.exit_code == 2


def test_missing_config_is_io_error(tmp_path):
    r = run(main, ["verify", "first-moment", "--config", str(tmp_path / "none.json")])
    assert r.exit_code == 3


def test_unwritable_output_is_io_error(tmp_path):
    r = run(main, ["verify", "first-moment", "--samples", "200", "-o", str(tmp_path / "no" / "x.json")])
    assert r.exit_code == 3


def test_verify_first_moment_json(tmp_path):
    out = tmp_path / "r.json"
    r = run(main, ["verify", "first-moment", "--N", "2", "--v0", "1,0", "--region", "disk:5", "--samples", "20000",
                   "--seed", "7", "-o", str(out)])
    assert r.exit_code == 0, r.output
    rep = json.loads(out.read_text())
    for key in ("theory", "mc_mean", "mc_stderr", "z_score", "pass", "schema_version", "tool_version", "wall_time"):
        assert key in rep
    assert rep["theory"] == pytest.approx(15.915494309189533)
    # the pass flag follows from the recorded numbers
    assert rep["pass"] == (abs(rep["mc_mean"] - rep["theory"]) <= 4 * rep["mc_stderr"])


def test_verify_reproducible_across_threads():
    args = ["verify", "cone-first", "--region", "disk:3", "--samples", "10000", "--seed", "5"]
    a = json.loads(run(main, args + ["--threads", "1"]).output)
    b = json.loads(run(main, args + ["--threads", "4"]).output)
    assert a["mc_mean"] == b["mc_mean"] and a["mc_stderr"] == b["mc_stderr"]


def test_verify_second_moment_csv():
    r = run(main, ["verify", "second-moment", "--v0", "1,1", "--region", "disk:2", "--samples", "20000",
                   "--format", "csv"])
    assert r.exit_code == 0, r.output
    rows = list(csv.DictReader(io.StringIO(r.output)))
    assert rows[0]["name"] == "second-moment" and rows[0]["pass"] == "true"


def test_verify_cone_second_reports_both_variants():
    r = run(main, ["verify", "cone-second", "--v0", "1,1", "--region", "disk:2", "--samples", "20000",
                   "--kernel-samples", "200000"])
    rep = json.loads(r.output)
    names = [c["name"] for c in rep["checks"]]
    assert names == ["cone-second", "cone-second (half diagonal)", "cone-second (full diagonal)"]
    assert r.exit_code == (0 if rep["pass"] else 1)


def test_verify_rejects_unbounded_region():
    r = run(main, ["verify", "first-moment", "--region", "khintchine:1,0.5,10"])
    assert r.exit_code == 2


def test_orbits_csv():
    r = run(main, ["orbits", "--N", "2", "--n-range", "2:8"])
    assert r.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(r.output)))
    assert rows and all(row["match"] == "true" for row in rows)
    assert {row["sigma"] for row in rows} == {"((0,1),2)", "((1,0),2)", "((1,1),2)"}
    one = run(main, ["orbits", "--N", "3", "--v0", "1,0", "--n-range", "3:6"])
    assert {row["sigma"] for row in csv.DictReader(io.StringIO(one.output))} == {"((1,0),3)"}


def test_arith_phi_table(tmp_path):
    out = tmp_path / "t.csv"
    r = run(main, ["arith", "phi-table", "--N", "2", "--K", "100000", "-o", str(out)])
    assert r.exit_code == 0
    rows = list(csv.DictReader(out.open()))
    assert [int(r["K"]) for r in rows] == [10, 100, 1000, 10000, 100000]
    assert int(rows[1]["exact"]) == 1037


def test_arith_small_commands():
    assert json.loads(run(main, ["arith", "zeta", "--N", "2"]).output)["value"] == pytest.approx(1.2337005501361697)
    assert run(main, ["arith", "s-nm", "--N", "4", "--m-max", "10"]).exit_code == 0
    assert "Phi_N" in run(main, ["arith", "phi-kernel", "--N", "2", "--x", "2"]).output


def test_count_commands():
    r = run(main, ["count", "schmidt", "--v0", "1,1", "--lattices", "2", "--volumes", "1e3,1e4"])
    assert r.exit_code == 0
    assert r.output.splitlines()[0] == "seed,lattice_id,V,count,predicted,norm_err"
    assert len(r.output.splitlines()) == 5
    k = run(main, ["count", "khintchine", "--v0", "1,1", "--x", "0.25", "--x", "0.5", "--T", "10,100"])
    assert k.exit_code == 0
    assert k.output.splitlines()[0] == "seed,x,T,count,predicted,ratio"


def test_selftest_subset():
    r = run(main, ["selftest", "--only", "2,5"])
    assert r.exit_code == 0
    assert r.output.count("[PASS]") == 2
    assert run(main, ["selftest", "--only", "99"]).exit_code == 2
