import csv
import io
import json
import math
from dataclasses import replace

import pytest

from nurseflow.cli import EXIT_OK, EXIT_USAGE, main
from nurseflow.instance_gen import load_instance, save_instance
from nurseflow.milp.oracle import brute_force_deterministic
from nurseflow.scenario import single_path_tree

GEN = ["generate", "--nurses", "2", "--eta", "1", "--stages", "2", "--days-per-stage", "2",
       "--start-weekday", "5", "--requests", "1", "--catalog", "toy"]


def rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def pipeline(inst_path, run, gns=True):
    for mode in ("dp", "sp", "tp"):
        assert main(["solve", str(inst_path), "--mode", mode, "--run", str(run)]) == EXIT_OK
    assert main(["gns", str(inst_path), "--run", str(run), "--episodes", "24", "--hidden", "8"]) == EXIT_OK
    if gns:
        assert main(["sample", "--run", str(run), "--k", "3", "--n-samples", "40"]) == EXIT_OK


def test_generate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(GEN + ["--seed", "4", "-o", str(a)]) == EXIT_OK
    assert main(GEN + ["--seed", "4", "-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["provenance"]["seed"] == 4


def test_negative_demand_scale_is_a_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["generate", "--nurses", "2", "--eta", "-1", "-o", str(tmp_path / "x.json")])
    assert e.value.code == EXIT_USAGE


def test_solve_dp_matches_enumeration(tmp_path):
    inst_path = tmp_path / "i.json"
    main(GEN + ["-o", str(inst_path)])
    run = tmp_path / "run"
    assert main(["solve", str(inst_path), "--mode", "dp", "--run", str(run)]) == EXIT_OK
    doc = json.loads((run / "dp" / "solution.json").read_text())
    obj, _ = brute_force_deterministic(load_instance(inst_path))
    assert doc["status"] == "optimal" and math.isclose(doc["objective"], obj)
    assert (run / "dp" / "roster.csv").exists() and (run / "instance.json").exists()


def test_run_directory_is_pinned_to_one_instance(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(GEN + ["-o", str(a)])
    main(GEN + ["--seed", "1", "-o", str(b)])
    run = str(tmp_path / "run")
    assert main(["solve", str(a), "--mode", "dp", "--run", run]) == EXIT_OK
    assert main(["solve", str(b), "--mode", "dp", "--run", run]) == EXIT_USAGE


def test_sampling_without_a_policy_is_a_usage_error(tmp_path):
    inst_path = tmp_path / "i.json"
    main(GEN + ["-o", str(inst_path)])
    run = tmp_path / "run"
    main(["solve", str(inst_path), "--mode", "dp", "--run", str(run)])
    assert main(["sample", "--run", str(run)]) == EXIT_USAGE


def test_report_lists_missing_inputs(tmp_path, capsys):
    assert main(["report", str(tmp_path / "nothing"), "--out", str(tmp_path / "out")]) == EXIT_USAGE
    assert "sp/eev.json" in capsys.readouterr().err


def test_full_pipeline(tmp_path):
    inst_path = tmp_path / "i.json"
    main(GEN + ["-o", str(inst_path)])
    run = tmp_path / "run"
    pipeline(inst_path, run)
    for name in ("policy.txt", "train_log.csv", "initial.csv", "run.json"):
        assert (run / "gns" / name).exists()
    cands = json.loads((run / "candidates" / "candidates.json").read_text())
    assert len(list((run / "candidates").glob("candidate-*.csv"))) == len(cands["candidates"])
    assert main(["select", "--run", str(run), "--path", "expected"]) == EXIT_OK
    assert main(["select", "--run", str(run), "--path", "0,1"]) == EXIT_OK
    picked = json.loads((run / "select" / "realized_cost.json").read_text())
    assert picked["cost"]["total"] == min(picked["all_costs"])
    out = tmp_path / "report"
    assert main(["report", str(run), "--out", str(out)]) == EXIT_OK
    for name in ("vss.csv", "coverage.csv", "flexibility.csv", "crf.csv"):
        assert (out / name).exists()
    (row,) = rows(out / "vss.csv")
    assert float(row["VSS_eev"]) >= -1e-6 and float(row["VSS_tp"]) >= -1e-6
    assert math.isfinite(float(row["GNS"]))
    assert main(["select", "--run", str(run), "--path", "9,9"]) == EXIT_USAGE


def test_deterministic_instance_has_zero_vss_and_two_runs_get_a_mean_row(tmp_path):
    inst_path = tmp_path / "i.json"
    main(GEN + ["-o", str(inst_path)])
    inst = load_instance(inst_path)
    det = replace(inst, tree=single_path_tree([inst.tree.stages[0][0].demand, inst.tree.stages[1][1].demand]))
    det_path = tmp_path / "det.json"
    save_instance(det, det_path)
    pipeline(det_path, tmp_path / "det", gns=False)
    pipeline(inst_path, tmp_path / "sto", gns=False)
    out = tmp_path / "report"
    assert main(["report", str(tmp_path / "det"), str(tmp_path / "sto"), "--out", str(out)]) == EXIT_OK
    table = rows(out / "vss.csv")
    assert [r["run"] for r in table] == ["det", "sto", "mean"]
    assert math.isclose(float(table[0]["VSS_eev"]), 0.0, abs_tol=1e-6)
    assert math.isclose(float(table[0]["VSS_tp"]), 0.0, abs_tol=1e-6)
    assert math.isnan(float(table[0]["GNS"]))
    assert math.isclose(float(table[2]["PP"]), (float(table[0]["PP"]) + float(table[1]["PP"])) / 2)
    assert {r["run"] for r in rows(out / "crf.csv")} == {"det", "sto"}
