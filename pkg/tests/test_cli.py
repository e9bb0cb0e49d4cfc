import csv
import json

import pytest

from qpwave.cli import RunConfig, main

DESK_CFG = {
    "equation": "gkdv",
    "omega": [1.0],
    "initial_data": [[[1], 0.1, 0.0], {"n": [-1], "re": 0.1, "im": 0.0}],
    "k": 1.0,
    "kappa": 0.5,
    "epsilon": 0.25,
    "R": 0.6,
    "N": 8,
    "M": 32,
}


def run(tmp_path, mode, cfg, *extra, name="cfg.json", out="out"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    code = main([mode, "--config", str(path), "--output", str(tmp_path / out), *extra])
    return code, tmp_path / out


def error_payload(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_certify_unit_radius(tmp_path):
    cfg = dict(DESK_CFG, R=1.0)
    code, out = run(tmp_path, "certify", cfg, "--serial")
    assert code == 0
    cert = json.loads((out / "certificate.json").read_text())["certificate"]
    assert cert["q"] <= 0.5
    assert cert["T"] == pytest.approx((1.0 - 0.25 - 0.5) / (2 * cert["gamma"]))


def test_solve_zero_data(tmp_path):
    cfg = dict(DESK_CFG, initial_data=[])
    code, out = run(tmp_path, "solve", cfg, "--serial")
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["iterations"] == 1
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "n1", "re", "im"]
    assert len(rows) - 1 == 33 * 17
    assert all(float(r[2]) == 0.0 and float(r[3]) == 0.0 for r in rows[1:])


def test_solve_manifest_contents(tmp_path):
    code, out = run(tmp_path, "solve", DESK_CFG, "--serial")
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["kappa"] == 0.5 and man["config"]["mode"] == "solve"
    for key in ("params", "certificate", "defects", "residuals", "growth_check"):
        assert key in man
    assert man["residuals"]["residual_M"] <= 1e-10
    assert man["wall_clock_s"] is None


def test_compare_oracle_deviation(tmp_path):
    code, out = run(tmp_path, "compare-oracle", DESK_CFG, "--serial")
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["max_deviation"] <= 1e-6
    assert man["oracle"]["method"] == "expRK4"
    assert (out / "oracle_trajectory.csv").exists()
    assert len(man["per_coefficient"]) == 17


def test_compare_oracle_both_directions(tmp_path):
    code, out = run(tmp_path, "compare-oracle", dict(DESK_CFG, direction="both", M=16, oracle_steps=64), "--serial")
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["max_deviation"] <= 1e-6
    with open(out / "oracle_trajectory.csv") as fh:
        times = sorted({float(r[0]) for r in list(csv.reader(fh))[1:]})
    assert len(times) == 129
    assert times[0] == pytest.approx(-times[-1])


def test_diagnose_liouville(tmp_path):
    code, out = run(tmp_path, "diagnose-liouville", {"liouville": {"kappa": 0.56}}, "--serial")
    assert code == 0
    rep = json.loads((out / "liouville.json").read_text())["report"]
    assert not rep["all_hold"]
    assert {l["name"] for l in rep["links"] if not l["holds"]} == {"exp_kappa"}


@pytest.mark.parametrize("mode", ["solve", "compare-oracle", "certify", "diagnose-liouville"])
def test_serial_runs_byte_reproducible(tmp_path, mode):
    run(tmp_path, mode, DESK_CFG, "--serial", out="a")
    run(tmp_path, mode, DESK_CFG, "--serial", out="b")
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_threaded_run_matches(tmp_path):
    run(tmp_path, "solve", DESK_CFG, "--serial", out="a")
    code, _ = run(tmp_path, "solve", DESK_CFG, "--threads", "2", out="b")
    assert code == 0
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert b["wall_clock_s"] > 0 and b["threads"] == 2
    assert abs(a["final_defect"] - b["final_defect"]) <= 1e-12


def test_preset_initial_data(tmp_path):
    cfg = dict(DESK_CFG, initial_data=None, initial_preset={"amplitude": 0.05, "decay": 2.0, "radius": 3})
    code, out = run(tmp_path, "solve", cfg, "--serial")
    assert code == 0


def test_custom_symbol(tmp_path):
    cfg = dict(DESK_CFG, symbol={"odd": [0.0, -1.0]})
    code, out = run(tmp_path, "certify", cfg)
    assert code == 0
    cfg = dict(DESK_CFG, symbol={"odd": [1.0], "even": [1.0]})
    code, out = run(tmp_path, "certify", cfg, out="o2")
    assert code == 0
    assert json.loads((out / "certificate.json").read_text())["model"]["real_valued"] is False


def test_unknown_key_rejected(tmp_path, capsys):
    code, _ = run(tmp_path, "solve", dict(DESK_CFG, gama=3))
    assert code == 2
    err = error_payload(capsys)
    assert err["exit_code"] == 2 and "gama" in err["message"]


def test_infeasible_setup(tmp_path, capsys):
    code, _ = run(tmp_path, "certify", dict(DESK_CFG, kappa=0.8))
    assert code == 2
    assert error_payload(capsys)["error"] == "CertificationError"


def test_mode_conflict(tmp_path):
    code, _ = run(tmp_path, "solve", dict(DESK_CFG, mode="certify"))
    assert code == 2


def test_data_ball(tmp_path, capsys):
    code, _ = run(tmp_path, "solve", dict(DESK_CFG, R=0.3))
    assert code == 2
    assert error_payload(capsys)["error"] == "DataBallError"


def test_non_convergence(tmp_path, capsys):
    code, _ = run(tmp_path, "solve", dict(DESK_CFG, max_iter=2))
    assert code == 3
    assert len(error_payload(capsys)["defects"]) == 2


def test_missing_config(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 4
    assert error_payload(capsys)["exit_code"] == 4


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _ = run(tmp_path, "certify", DESK_CFG, out="file/sub")
    assert code == 4


def test_bad_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    assert main(["solve", "--config", str(path)]) == 2


def test_config_validation_direct():
    with pytest.raises(ValueError):
        RunConfig.from_dict({"equation": "kdv"})
    with pytest.raises(ValueError):
        RunConfig.from_dict({"N": 2.5})
    with pytest.raises(ValueError):
        RunConfig.from_dict({"initial_data": [], "initial_preset": {}})
    assert RunConfig.from_dict({}).equation == "gkdv"
