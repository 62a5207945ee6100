"""Command-line interface: exit codes, report formats, determinism."""

import json
import os

import pytest

from instanton import cli


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr().out
    return code, out


def test_classify_known_family(capsys):
    code, out = run(["classify", "--metric", "taub-nut", "--orientation",
                     "reversed", "--samples", "16", "--seed", "7"], capsys)
    assert code == 0
    report = cli.parse_report(out)
    assert report["checks"][0]["value"] == "II"
    assert report["pass"] is True


def test_classify_expectation_failure(capsys):
    code, out = run(["classify", "--metric", "flat", "--expect", "II",
                     "--samples", "8"], capsys)
    assert code == 1
    assert cli.parse_report(out)["pass"] is False


def test_unknown_family_is_usage_error(capsys):
    assert cli.run(["classify", "--metric", "nosuch"]) == 2


def test_bad_flag_is_usage_error():
    assert cli.run(["classify", "--nope"]) == 2
    assert cli.run(["not-a-command"]) == 2


def test_verify_ricci(capsys):
    code, out = run(["verify-ricci", "--metric", "kerr", "--samples", "25"],
                    capsys)
    assert code == 0
    rec = cli.parse_report(out)["checks"][0]
    assert float(rec["value"]) < float(rec["tol"])


def test_toda_check_and_build(capsys):
    code, out = run(["toda-check", "--solution", "alh_star",
                     "--points", "100"], capsys)
    assert code == 0
    code, out = run(["toda-build", "--solution", "kasner",
                     "--samples", "10"], capsys)
    assert code == 0
    names = [c["name"] for c in cli.parse_report(out)["checks"]]
    assert "built-ricci" in names and "catalog-deviation" in names


def test_toric_reports_rationals(capsys):
    code, out = run(["toric-intersect", "--fan", "fmn", "--m", "1",
                     "--n", "3", "--boundary", "2"], capsys)
    assert code == 0
    report = cli.parse_report(out)
    assert "1/3" in {x for row in report["params"]["intersection_matrix"]
                     for x in row}


def test_toric_classify(capsys):
    code, out = run(["toric-classify", "--max-n", "3", "--max-k", "2"],
                    capsys)
    assert code == 0
    report = cli.parse_report(out)
    assert any(v["family"].startswith("fmn(")
               for v in report["params"]["verdicts"] if v["ample"])


def test_json_reports_are_byte_identical(capsys):
    args = ["classify", "--metric", "schwarzschild", "--samples", "12",
            "--seed", "3"]
    _, first = run(args, capsys)
    _, second = run(args, capsys)
    assert first == second


def test_report_roundtrip_and_formats():
    checks = [cli.check_lt("alpha", 1e-9, 1e-7),
              cli.check_true("beta", True)]
    report = cli.build_report("demo", {"x": 1}, 4, checks)
    assert cli.parse_report(cli.emit_report(report, "json")) == report
    csv_text = cli.emit_report(report, "csv")
    assert csv_text.splitlines()[0] == "name,value,tol,pass,paper_ref"
    text = cli.emit_report(report, "text")
    assert "summary: PASS" in text


def test_empty_and_failing_reports():
    empty = cli.build_report("demo", {}, 0, [])
    assert empty["pass"] is True
    failing = cli.build_report("demo", {}, 0,
                               [cli.check_lt("gamma", 1.0, 1e-7)])
    assert failing["pass"] is False


def test_value_formatting():
    from fractions import Fraction
    assert cli.format_value(Fraction(-3, 7)) == "-3/7"
    assert cli.format_value(True) == "true"
    assert len(cli.format_value(1.0 / 3.0)) >= 17


def test_output_file_and_report_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("INSTANTON_REPORT_DIR", str(tmp_path))
    code = cli.run(["classify", "--metric", "flat", "--samples", "8",
                    "--output", "rep.json"])
    capsys.readouterr()
    assert code == 0
    assert json.loads((tmp_path / "rep.json").read_text())["pass"] is True


def test_config_file_overrides_defaults(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("samples=9\nseed=11\n")
    code, out = run(["classify", "--metric", "flat", "--config", str(cfg)],
                    capsys)
    assert code == 0
    report = cli.parse_report(out)
    assert report["seed"] == 11
    assert report["params"]["samples"] == 9


def test_hermitian_subcommand(capsys):
    code, out = run(["verify-hermitian", "--metric", "kasner",
                     "--samples", "6", "--seed", "3"], capsys)
    assert code == 0
    report = cli.parse_report(out)
    signs = [c for c in report["checks"] if c["name"] == "scalar-sign"]
    assert signs and signs[0]["value"] == "-1"
