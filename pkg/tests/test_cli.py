"""Command-line surface: exit codes, report schema, reproducibility."""

import json
import subprocess
import sys

import pytest

from stepskew.baseseq import word_from_text
from stepskew.cli import main


def run_cli(argv, capsys):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def run_json(argv, capsys):
    code, out = run_cli(argv, capsys)
    return code, json.loads(out)


# ---------------------------------------------------------------------------
# params
# ---------------------------------------------------------------------------


def test_params_report(capsys):
    code, rep = run_json(["params", "--n", "16"], capsys)
    assert code == 0
    assert rep["params"]["h"] == 0.00390625
    assert rep["epsilon_log2"] == -256
    assert rep["header"]["config"]["n"] == 16
    assert rep["header"]["format"].startswith("stepskew-report/")
    for name in ("Qplus", "Qminus", "P", "R", "Wprime"):
        assert name in rep["regions"]
    # plumbing never enters the reproducibility echo
    for key in ("out", "threads", "config"):
        assert key not in rep["header"]["config"]


def test_params_rejects_small_n(capsys):
    code, _ = run_cli(["params", "--n", "10"], capsys)
    assert code == 2


def test_params_ladder_constant_at_128(capsys):
    code, rep = run_json(["params", "--n", "128"], capsys)
    assert code == 0
    assert rep["params"]["Kc"] == 1485
    assert rep["params"]["c"] == pytest.approx(0.07811945373086014, abs=1e-15)
    assert "K" in rep["regions"] and "Kplus" in rep["regions"]


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_all_one_contracts_to_corner(capsys):
    code, rep = run_json(
        ["simulate", "--base", "all-one", "--steps", "2000", "--grid", "8"], capsys
    )
    assert code == 0
    assert rep["mode"] == "single"
    assert max(abs(v - 1.0) for v in rep["final_x"]) < 1e-10


def test_simulate_descent_base_reaches_deep_slab(tmp_path, capsys):
    out = tmp_path / "run"
    code, rep = run_json(
        [
            "simulate", "--base", "descent", "--grid", "32",
            "--out", str(out), "--trace", "--figures",
        ],
        capsys,
    )
    assert code == 0
    by_region = {s["region"]: s for s in rep["stats"]}
    assert by_region["R"]["hits"] > 0
    assert by_region["R"]["frequency"] > 0.0
    assert all(s["violations"] == 0 for s in rep["stats"])
    assert rep["invisibility"]["verdict"] == "visible"
    for name in ("report.json", "histogram.csv", "trace.jsonl", "hist.png", "trace.png"):
        assert (out / name).exists(), name
    lines = (out / "trace.jsonl").read_text().splitlines()
    assert len(lines) == rep["base"]["length"] + 1
    first = json.loads(lines[0])
    assert first["t"] == 0 and len(first["x"]) == 2


def test_simulate_ensemble_bytes_identical_across_threads(tmp_path, capsys):
    base_args = ["simulate", "--orbits", "4", "--steps", "20000", "--grid", "16"]
    outs = []
    csvs = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "4")):
        out = tmp_path / name
        code, text = run_cli(
            base_args + ["--threads", threads, "--out", str(out)], capsys
        )
        assert code == 0
        outs.append(text)
        csvs.append((out / "histogram.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert csvs[0] == csvs[1] == csvs[2]
    rep = json.loads(outs[0])
    assert rep["invisibility"]["deep_hits"] == 0
    assert rep["invisibility"]["verdict"] == "invisible at this horizon"


def test_simulate_random_rejects_trace_and_x0(capsys):
    code, _ = run_cli(["simulate", "--trace", "--out", "/tmp/x"], capsys)
    assert code == 2
    code, _ = run_cli(["simulate", "--x0", "0.5,0.5"], capsys)
    assert code == 2


def test_simulate_escape_is_a_dynamical_anomaly(capsys):
    code, _ = run_cli(
        ["simulate", "--base", "all-zero", "--steps", "10", "--x0", "5,5"], capsys
    )
    assert code == 3


def test_simulate_unwritable_out_is_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    code, _ = run_cli(
        [
            "simulate", "--base", "all-one", "--steps", "50",
            "--out", str(blocker / "sub"),
        ],
        capsys,
    )
    assert code == 4


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def test_verify_norms_passes(capsys):
    code, rep = run_json(["verify", "--suite", "norms"], capsys)
    assert code == 0
    assert rep["pass"] is True
    (norms,) = rep["suites"]
    assert norms["name"] == "norm-bounds"
    assert norms["count"] == 6
    assert norms["pass"] is True


def test_verify_strips_oversized_delta_fails(capsys):
    code, rep = run_json(["verify", "--suite", "strips", "--delta", "0.01"], capsys)
    assert code == 1
    assert rep["pass"] is False
    names = [s["name"] for s in rep["suites"]]
    assert "strip-blocks-perturbed" in names
    assert any(not s["pass"] for s in rep["suites"])


def test_verify_words_n16_skips_unclaimed_pipeline(capsys):
    code, rep = run_json(
        ["verify", "--suite", "words", "--steps", "100000"], capsys
    )
    assert code == 0
    names = [s["name"] for s in rep["suites"]]
    assert names == ["word-machinery"]
    assert "critical-words" in rep["notes"]
    experiment = rep["suites"][0]["certificates"][1]
    assert experiment["pass"] is True
    assert experiment["witness"]["occurrences"] > 0
    assert experiment["witness"]["landing_exceptions"] == 0


def test_verify_all_k3_runs_what_is_claimed(capsys):
    code, rep = run_json(
        [
            "verify", "--suite", "all", "--n", "12", "--k", "3",
            "--orbits", "2", "--steps", "50000",
        ],
        capsys,
    )
    assert code == 0
    assert rep["pass"] is True
    assert set(rep["notes"]) == {"movement", "norms", "perturbed-entry", "words"}
    names = [s["name"] for s in rep["suites"]]
    assert "strip-blocks" in names
    assert "zero-run" in names
    assert "strip-blocks-perturbed" in names
    assert "perturbed-shadowing" in names


def test_verify_explicit_planar_suite_rejected_at_k3(capsys):
    code, _ = run_cli(["verify", "--suite", "norms", "--n", "12", "--k", "3"], capsys)
    assert code == 2
    code, _ = run_cli(["verify", "--suite", "words", "--n", "12", "--k", "3"], capsys)
    assert code == 2


def test_verify_perturbed_suite_passes(capsys):
    code, rep = run_json(["verify", "--suite", "perturbed"], capsys)
    assert code == 0
    names = [s["name"] for s in rep["suites"]]
    assert names == [
        "strip-blocks-perturbed",
        "directional-movement-perturbed",
        "perturbed-shadowing",
    ]
    shadow = rep["suites"][2]
    assert shadow["count"] == 2
    assert rep["perturbation"]["delta"] > 0
    assert rep["perturbation"]["displacement_budget"] <= rep["perturbation"]["delta"] / 2


def test_verify_reports_are_reproducible(capsys):
    _, first = run_cli(["verify", "--suite", "strips"], capsys)
    _, second = run_cli(["verify", "--suite", "strips"], capsys)
    assert first == second


# ---------------------------------------------------------------------------
# critical-word
# ---------------------------------------------------------------------------


def test_critical_word_round_trip(tmp_path, capsys):
    out = tmp_path / "word"
    code, rep = run_json(
        [
            "critical-word", "--n", "128", "--target", "0.5,0.5",
            "--radius", "0.05", "--out", str(out),
        ],
        capsys,
    )
    assert code == 0
    assert rep["pass"] is True
    assert rep["certificate"]["margin"] > 0
    text = (out / "word.txt").read_text()
    word = word_from_text(text, 2)
    assert word.shape == (rep["length"], 2)
    assert rep["parts"]["route"] in ("ascent", "ladder")


def test_critical_word_outside_cube_rejected(capsys):
    code, _ = run_cli(["critical-word", "--n", "128", "--target", "2.0,0.5"], capsys)
    assert code == 2


def test_critical_word_bad_target_shape(capsys):
    code, _ = run_cli(["critical-word", "--target", "0.5"], capsys)
    assert code == 2


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------


def test_config_file_sets_defaults_and_flags_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 128}))
    code, rep = run_json(["params", "--config", str(cfg)], capsys)
    assert code == 0
    assert rep["params"]["n"] == 128
    code, rep = run_json(["params", "--config", str(cfg), "--n", "16"], capsys)
    assert code == 0
    assert rep["params"]["n"] == 16


def test_config_file_error_codes(tmp_path, capsys):
    unknown = tmp_path / "u.json"
    unknown.write_text(json.dumps({"bogus": 1}))
    assert run_cli(["params", "--config", str(unknown)], capsys)[0] == 2
    notjson = tmp_path / "n.json"
    notjson.write_text("not json")
    assert run_cli(["params", "--config", str(notjson)], capsys)[0] == 2
    assert run_cli(["params", "--config", str(tmp_path / "gone.json")], capsys)[0] == 4


# ---------------------------------------------------------------------------
# subprocess round trips (the installed entry point, cold start)
# ---------------------------------------------------------------------------


def _spawn(args):
    return subprocess.run(
        [sys.executable, "-m", "stepskew.cli", *args],
        capture_output=True,
        text=True,
        timeout=300,
    )


def test_subprocess_params_round_trip():
    proc = _spawn(["params", "--n", "16"])
    assert proc.returncode == 0, proc.stderr
    rep = json.loads(proc.stdout)
    assert rep["params"]["nu"] == 0.0625


def test_subprocess_verify_exit_codes():
    good = _spawn(["verify", "--suite", "norms"])
    assert good.returncode == 0, good.stderr
    bad = _spawn(["verify", "--suite", "strips", "--delta", "0.01"])
    assert bad.returncode == 1, bad.stderr
    assert json.loads(bad.stdout)["pass"] is False
