"""End-to-end command-line checks, run in process through cli.main."""

import csv
import io
import json
import math

import pytest

from febvp import cli


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(argv, capsys):
    code, out, err = run(argv, capsys)
    return code, json.loads(out) if out.strip() else None, err


def stderr_doc(err):
    return json.loads(err.strip().splitlines()[-1])


# --------------------------------------------------------------------- solve

def test_solve_two_point_example(capsys):
    code, doc, _ = run_json(["solve", "--catalog", "free_fall",
                             "--param", "g=-9.8", "--neumann", "0", "1",
                             "0", "0", "--tau", "0.5", "--format", "json"],
                            capsys)
    assert code == 0
    row = doc["rows"][0]
    assert row["tau"] == 0.5
    assert abs(row["x"] - 1.225) <= 1e-9


def test_solve_cauchy_example(capsys):
    code, doc, _ = run_json(["solve", "--catalog", "free_fall",
                             "--param", "g=-9.8", "--cauchy", "0", "0", "1",
                             "--tau", "1", "--format", "json"], capsys)
    assert code == 0
    assert abs(doc["rows"][0]["x"] - (-3.9)) <= 1e-9


def test_solve_expression_constant(capsys):
    code, doc, _ = run_json(["solve", "--ode", "0", "--neumann", "0", "1",
                             "2", "2", "--tau", "0.7", "--format", "json"],
                            capsys)
    assert code == 0
    assert abs(doc["rows"][0]["x"] - 2.0) <= 1e-12


def test_solve_rows_sorted_by_tau(capsys):
    code, doc, _ = run_json(["solve", "--catalog", "free_fall", "--neumann",
                             "0", "1", "0", "0", "--tau", "0.9", "--tau",
                             "0.1", "--tau", "0.5", "--format", "json"],
                            capsys)
    assert code == 0
    taus = [row["tau"] for row in doc["rows"]]
    assert taus == sorted(taus) == [0.1, 0.5, 0.9]


def test_solve_conjugate_point_exit_two(capsys):
    code, out, err = run(["solve", "--catalog", "oscillator", "--neumann",
                          "0", str(math.pi), "0", "0", "--tau", "1.0"],
                         capsys)
    assert code == 2
    assert stderr_doc(err)["code"] == "conjugate_point"


def test_parse_error_reports_position(capsys):
    code, out, err = run(["solve", "--ode", "x +", "--neumann", "0", "1",
                          "0", "0", "--tau", "0.5"], capsys)
    assert code == 1
    doc = stderr_doc(err)
    assert doc["code"] == "config_error"
    assert doc["context"]["position"] == 3


def test_solve_requires_exactly_one_condition(capsys):
    code, _, err = run(["solve", "--catalog", "free_fall", "--neumann", "0",
                        "1", "0", "0", "--cauchy", "0", "0", "1", "--tau",
                        "0.5"], capsys)
    assert code == 1
    code, _, err = run(["solve", "--catalog", "free_fall", "--tau", "0.5"],
                       capsys)
    assert code == 1


def test_solve_requires_an_ode_source(capsys):
    code, _, err = run(["solve", "--neumann", "0", "1", "0", "0", "--tau",
                        "0.5"], capsys)
    assert code == 1
    assert stderr_doc(err)["code"] == "config_error"


# -------------------------------------------------------------------- verify

def test_verify_composition_closed(capsys):
    code, doc, _ = run_json(["verify", "--catalog", "free_fall", "--laws",
                             "composition", "--mode", "closed", "--samples",
                             "100", "--seed", "42", "--format", "json"],
                            capsys)
    assert code == 0
    assert isinstance(doc, list) and len(doc) == 1
    report = doc[0]
    assert report["law"] == "composition"
    assert report["failures"] == 0
    assert report["max_residual"] <= 1e-12


def test_verify_threshold_override_can_fail(capsys):
    code, doc, err = run_json(["verify", "--catalog", "free_fall", "--laws",
                               "composition", "--mode", "closed", "--samples",
                               "20", "--seed", "1", "--threshold",
                               "composition=1e-30", "--format", "json"],
                              capsys)
    assert code == 2


def test_verify_unknown_law(capsys):
    code, _, err = run(["verify", "--catalog", "free_fall", "--laws",
                        "associativity"], capsys)
    assert code == 1
    assert stderr_doc(err)["code"] == "config_error"


def test_verify_oscillator_spanning_pi(capsys):
    code, doc, _ = run_json(["verify", "--catalog", "oscillator", "--laws",
                             "boundary", "--mode", "numeric",
                             "--singular-floor", "0.05",
                             "--alpha-beta-range", "0", "3.45",
                             "--min-separation", "2.99", "--max-interval",
                             "3.45", "--samples", "20", "--seed", "0",
                             "--format", "json"], capsys)
    assert code == 2
    assert doc[0]["failures"] > 0


def test_verify_flat_klapka(capsys):
    code, doc, _ = run_json(["verify", "--laws", "klapka", "--connection",
                             "flat", "--samples", "30", "--seed", "3",
                             "--format", "json"], capsys)
    assert code == 0
    assert doc[0]["max_residual"] <= 1e-12


def test_verify_jensen_is_flat_only(capsys):
    code, _, err = run(["verify", "--laws", "jensen", "--connection",
                        "half_plane", "--samples", "5"], capsys)
    assert code == 1


# --------------------------------------------------------------- reconstruct

def test_reconstruct_free_fall(capsys):
    code, doc, _ = run_json(["reconstruct", "--catalog", "free_fall",
                             "--point", "0.3", "-1.0", "0.7", "--format",
                             "json"], capsys)
    assert code == 0
    row = doc["rows"][0]
    assert abs(row["f_reconstructed"] - (-9.8)) <= 1e-6
    assert row["f_true"] == -9.8
    assert row["abs_err"] <= 1e-6


def test_reconstruct_linear_zero(capsys):
    code, doc, _ = run_json(["reconstruct", "--catalog", "linear_zero",
                             "--point", "0", "1", "-1", "--format", "json"],
                            capsys)
    assert code == 0
    assert doc["rows"][0]["abs_err"] <= 1e-8


def test_reconstruct_conic(capsys):
    code, doc, _ = run_json(["reconstruct", "--catalog", "conic", "--param",
                             "k=1", "--param", "g=0", "--point", "0", "2",
                             "0", "--format", "json"], capsys)
    assert code == 0
    row = doc["rows"][0]
    assert abs(row["f_reconstructed"] - 2.0) <= 1e-4
    assert row["abs_err"] <= 1e-4


def test_reconstruct_tight_threshold(capsys):
    code, _, err = run(["reconstruct", "--catalog", "conic", "--param",
                        "k=1", "--param", "g=0", "--point", "0", "2", "0",
                        "--threshold", "1e-15"], capsys)
    assert code == 2
    assert stderr_doc(err)["code"] == "reconstruction_mismatch"


# ------------------------------------------------------------------ geodesic

def test_geodesic_flat_affine(capsys):
    code, doc, _ = run_json(["geodesic", "--connection", "flat", "--a", "0",
                             "0", "--b", "1", "2", "--rho", "0.25",
                             "--format", "json"], capsys)
    assert code == 0
    x, y = doc["rows"][0]["point"]
    assert abs(x - 0.25) <= 1e-10
    assert abs(y - 0.5) <= 1e-10


def test_geodesic_half_plane_semicircle(capsys):
    code, doc, _ = run_json(["geodesic", "--connection", "half_plane",
                             "--a", "-0.3", "1", "--b", "0.3", "1", "--rho",
                             "0.5", "--format", "json"], capsys)
    assert code == 0
    x, y = doc["rows"][0]["point"]
    assert abs(x) <= 1e-8
    assert abs(y - math.sqrt(1.09)) <= 1e-8


def test_geodesic_half_plane_rejects_lower_half(capsys):
    code, _, err = run(["geodesic", "--connection", "half_plane", "--a",
                        "0", "-1", "--b", "1", "1", "--rho", "0.5"], capsys)
    assert code == 1


# ------------------------------------------------------- formats & plumbing

def test_csv_output_is_rfc4180(capsys):
    code, out, _ = run(["solve", "--catalog", "free_fall", "--neumann", "0",
                        "1", "0", "0", "--tau", "0.25", "--tau", "0.75",
                        "--format", "csv"], capsys)
    assert code == 0
    assert "\r\n" in out
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:2] == ["tau", "x"]
    assert len(rows) == 3
    assert float(rows[1][0]) == 0.25


def test_json_runs_byte_identical(capsys):
    argv = ["verify", "--catalog", "free_fall", "--laws",
            "composition,boundary", "--mode", "closed", "--samples", "50",
            "--seed", "42", "--format", "json"]
    code1, out1, _ = run(argv, capsys)
    code2, out2, _ = run(argv, capsys)
    assert code1 == code2 == 0
    assert out1 == out2


def test_config_file_supplies_defaults(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": 7, "samples": 25}))
    argv_file = ["verify", "--catalog", "free_fall", "--laws", "composition",
                 "--mode", "closed", "--config", str(cfg), "--format",
                 "json"]
    argv_flags = ["verify", "--catalog", "free_fall", "--laws",
                  "composition", "--mode", "closed", "--seed", "7",
                  "--samples", "25", "--format", "json"]
    _, out_file, _ = run(argv_file, capsys)
    _, out_flags, _ = run(argv_flags, capsys)
    assert out_file == out_flags
    # an explicit flag wins over the file value
    _, out_override, _ = run(argv_file[:-2] + ["--seed", "9", "--format",
                                               "json"], capsys)
    assert out_override != out_file


def test_env_seed_default(monkeypatch, capsys):
    monkeypatch.setenv("FEBVP_SEED", "7")
    argv_env = ["verify", "--catalog", "free_fall", "--laws", "composition",
                "--mode", "closed", "--samples", "25", "--format", "json"]
    _, out_env, _ = run(argv_env, capsys)
    monkeypatch.delenv("FEBVP_SEED")
    _, out_flag, _ = run(argv_env + ["--seed", "7"], capsys)
    assert out_env == out_flag


def test_invalid_format_rejected(capsys):
    code, _, err = run(["solve", "--catalog", "free_fall", "--neumann", "0",
                        "1", "0", "0", "--tau", "0.5", "--format", "yaml"],
                       capsys)
    assert code == 1


def test_table_format_human_readable(capsys):
    code, out, _ = run(["solve", "--catalog", "free_fall", "--neumann", "0",
                        "1", "0", "0", "--tau", "0.5"], capsys)
    assert code == 0
    header = out.splitlines()[0]
    assert "tau" in header and "x" in header
