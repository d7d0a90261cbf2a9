import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest

from momentdet.cli import main
from momentdet.errors import MomentDetError
from momentdet.manifest import parse_manifest
from momentdet.report import dumps, emit, run_manifest

DATA = Path(__file__).parent / "data"
GAUSS = {"family": "gaussian"}


def _strings_for_nonfinite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _strings_for_nonfinite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_strings_for_nonfinite(v) for v in obj]
    return obj


def run(doc, **kw):
    return run_manifest(parse_manifest(doc), **kw)


def test_gaussian_carleman_report():
    rep = run({"dimension": 1, "measure": GAUSS, "analyses": [{"kind": "carleman"}]}, timestamps=False)
    (r,) = rep.data["results"]
    assert rep.ok and r["verdict"]["outcome"] == "SUFFICIENT_DETERMINATE" and r["verdict"]["density"] is True
    assert "wall_clock_s" not in r and "timestamp" not in rep.data


def test_lognormal_report():
    rep = run({"dimension": 1, "measure": {"family": "lognormal"}, "analyses": [
        {"kind": "carleman"},
        {"kind": "criterion", "spec": {"kind": "repeated_log", "a": [1, 1], "p": [1, 1, 0]}},
    ]})
    assert [r["verdict"]["outcome"] for r in rep.data["results"]] == ["CRITERION_NOT_MET"] * 2
    assert all(r["wall_clock_s"] >= 0 for r in rep.data["results"])
    assert "timestamp" in rep.data


def test_empty_analyses():
    rep = run({"dimension": 1, "measure": GAUSS, "analyses": []})
    assert rep.ok and rep.data["results"] == []


def test_failures_are_recorded_per_entry():
    rep = run({"dimension": 1, "measure": GAUSS, "analyses": [
        {"kind": "criterion", "spec": {"kind": "repeated_log", "p": [1, 2]}},
        {"kind": "carleman", "M": 12},
    ]}, timestamps=False)
    first, second = rep.data["results"]
    assert first["status"] == "error" and "CriterionError" in first["error"]
    assert second["status"] == "ok"
    assert not rep.ok


def test_inconclusive_does_not_fail():
    rep = run({"dimension": 1, "analyses": [
        {"kind": "classify_weight", "weight": {"kind": "expr", "formula": "exp(-abs(x))"}}]})
    assert rep.data["results"][0]["verdict"]["outcome"] == "INCONCLUSIVE"
    assert rep.ok


def test_json_round_trip():
    rep = run({"dimension": 1, "measure": GAUSS, "analyses": [{"kind": "moments", "M": 6, "A": 2},
                                                              {"kind": "shohat_tamarkin", "M": 10}]})
    assert json.loads(rep.to_json()) == _strings_for_nonfinite(rep.data)


def test_float_formatting():
    text = dumps({"a": 0.1, "b": 1.0, "c": math.inf, "d": math.nan, "e": [1e-300, 2]})
    assert '"a": 0.10000000000000001' in text
    assert '"b": 1.0' in text and '"c": "inf"' in text and '"d": "nan"' in text
    assert json.loads(text)["e"] == [1e-300, 2]


def test_csv_bundle(tmp_path):
    rep = run({"dimension": 1, "measure": GAUSS, "analyses": [
        {"kind": "carleman", "id": "carl", "M": 10},
        {"kind": "criterion", "id": "tail", "spec": {"kind": "radial_rho", "R": 1, "rho": "s"}},
        {"kind": "density", "id": "dens", "target": "sin(x)", "max_degree": 6, "trig_grids": [[-1, 0, 1]]},
        {"kind": "classify_weight", "id": "w", "weight": {"kind": "exp_decay", "eps": 1}},
    ]})
    paths = emit(rep, tmp_path, "csv")
    names = sorted(os.path.basename(p) for p in paths)
    assert names == ["carl.csv", "dens.csv", "report.json", "tail.csv"]
    header = (tmp_path / "carl.csv").read_text().splitlines()[0]
    assert header == "m,direction_0_term,direction_0_partial_sum"


def test_emit_surfaces_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rep = run({"dimension": 1, "measure": GAUSS, "analyses": []})
    with pytest.raises(MomentDetError) as exc:
        emit(rep, blocker / "sub", "json")
    assert str(blocker) in str(exc.value)


# --- command line ------------------------------------------------------------

def test_cli_focused_subcommand(capsys):
    code = main(["carleman", "--measure", '{"family": "lognormal"}', "--M", "20", "--no-timestamp"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["results"][0]["verdict"]["outcome"] == "CRITERION_NOT_MET"
    assert out["manifest"]["analyses"][0]["M"] == 20


def test_cli_flags_reach_numerics(capsys):
    main(["moments", "--measure", '{"family": "gaussian"}', "--M", "4", "--tol", "1e-9", "--seed", "5",
          "--deterministic", "--no-timestamp"])
    out = json.loads(capsys.readouterr().out)
    assert out["manifest"]["numerics"]["tol"] == 1e-9
    assert out["seed"] == 5 and out["deterministic"] is True


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dimension": 1, "measure": GAUSS, "analyses": [], "oops": 1}))
    assert main(["analyze", str(bad)]) == 2
    failing = tmp_path / "failing.json"
    failing.write_text(json.dumps({"dimension": 1, "measure": GAUSS, "analyses": [
        {"kind": "criterion", "spec": {"kind": "repeated_log", "p": [1, 2]}}]}))
    assert main(["analyze", str(failing), "--no-timestamp"]) == 1
    assert "CriterionError" in capsys.readouterr().err


def test_cli_writes_bundle(tmp_path, capsys):
    code = main(["density", "--measure", '{"family": "gaussian"}', "--target", "sin(x)", "--max-degree", "8",
                 "--trig-grid", "[-1, 0, 1]", "--output", str(tmp_path), "--format", "csv", "--no-timestamp"])
    assert code == 0
    assert sorted(os.listdir(tmp_path)) == ["00_density.csv", "report.json"]


def test_cli_other_subcommands(capsys):
    assert main(["classify-weight", "--weight", '{"kind": "repeated_log", "a": [1, 1], "p": [1, 2]}']) == 0
    assert json.loads(capsys.readouterr().out)["results"][0]["verdict"]["outcome"] == "NOT_QUASI_ANALYTIC"
    assert main(["stieltjes", "--measure", '{"family": "exponential"}', "--e", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["results"][0]["passed"] is True
    assert main(["criterion", "--measure", '{"family": "exponential"}', "--cone", "true",
                 "--spec", '{"kind": "stieltjes_radial", "weight": {"kind": "exp_decay", "eps": 1}}']) == 0
    res = json.loads(capsys.readouterr().out)["results"][0]
    assert res["verdict"]["outcome"] == "SUFFICIENT_C_DETERMINATE"
    assert res["strengthened"]["outcome"] == "SUFFICIENT_DETERMINATE"


def test_console_script_is_installed():
    proc = subprocess.run([sys.executable, "-m", "momentdet.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "momentdet" in proc.stdout
