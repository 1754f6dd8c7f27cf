"""Tests for the command-line interface."""

import json

import pytest

from srkweak.cli import main
from srkweak.tableau import registry_get, save_method, tableau_to_dict


def test_check_reduced_ok(capsys):
    assert main(["check", "BDK1", "--reduced"]) == 0
    out = capsys.readouterr().out
    assert "all satisfied" in out


def test_check_both_reports(capsys):
    assert main(["check", "StratoExplicit24"]) == 0
    out = capsys.readouterr().out
    assert "reduced conditions" in out and "table conditions" in out


def test_check_json(capsys):
    assert main(["check", "BDK3", "--table", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["all_satisfied"] is True
    assert len(payload["records"]) == 43


def test_check_fails_on_broken_method(tmp_path, capsys):
    data = tableau_to_dict(registry_get("BDK1"))
    data["alpha"] = [0.5, 0.6]
    data["name"] = "broken"
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(data))
    assert main(["check", str(path), "--reduced"]) == 1


def test_check_accepts_method_file(tmp_path, capsys):
    path = tmp_path / "bdk1.json"
    save_method(registry_get("BDK1"), path)
    assert main(["check", str(path)]) == 0


def test_converge_writes_csv(tmp_path, capsys):
    out = tmp_path / "table.csv"
    code = main(
        [
            "converge",
            "det_exponential",
            "BDK2",
            "--h",
            "0.5,0.25",
            "--batches",
            "2",
            "--paths",
            "1",
            "--seed",
            "7",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0] == "method,problem,h,estimate,stderr,exact,abs_error,effort"
    assert "BDK2" in text
    assert "observed order" in capsys.readouterr().out


def test_effort_output(capsys):
    assert main(["effort", "BDK3", "--m", "1"]) == 0
    out = capsys.readouterr().out
    assert "N_d=3" in out and "N_s=2" in out and "N_r=2" in out and "effort=7" in out


def test_forests_listing(capsys):
    assert main(["forests", "--max-order", "1", "--exotic"]) == 0
    out = capsys.readouterr().out
    assert "[1[1]]" in out and "phi_i f^{p1,i}_{i1} f^{p1,i1}" in out


def test_forests_table(capsys):
    assert main(["forests", "--table"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 44  # header + 43 rows


def test_invariant_command(capsys):
    code = main(
        [
            "invariant",
            "--potential",
            "ou",
            "--h",
            "0.25",
            "--steps",
            "20000",
            "--burn-in",
            "200",
            "--seed",
            "3",
            "--chains",
            "20",
        ]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["second_moment"][0] - 1.0) < 0.15
