"""End-to-end command-line workflow on a small generated session."""

import json

import pytest
from click.testing import CliRunner

from gaittune.cli import main


@pytest.fixture(scope="module")
def session_dir(tmp_path_factory):
    """demo -> fit -> everything else reuses these artifacts."""
    runner = CliRunner()
    root = tmp_path_factory.mktemp("cli")
    result = runner.invoke(main, ["demo", str(root / "data"), "--subjects", "2"])
    assert result.exit_code == 0, result.output
    paths = json.loads(result.output)

    bundle = root / "baseline.bundle.json"
    result = runner.invoke(
        main,
        [
            "fit",
            "--dataset",
            paths["walking"],
            "--sitstand",
            paths["sitstand"],
            "--out",
            str(bundle),
        ],
    )
    assert result.exit_code == 0, result.output
    return {"root": root, "paths": paths, "bundle": bundle, "runner": runner}


def test_fit_reports_vaf(session_dir):
    result = session_dir["runner"].invoke(
        main,
        ["fit", "--dataset", session_dir["paths"]["walking"]],
    )
    assert result.exit_code == 0, result.output
    assert "vaf[ankle]" in result.output
    assert "vaf[knee]" in result.output


def test_validate_writes_reports(session_dir):
    root = session_dir["root"]
    result = session_dir["runner"].invoke(
        main,
        [
            "validate",
            "--dataset",
            session_dir["paths"]["walking"],
            "--csv",
            str(root / "report.csv"),
            "--json",
            str(root / "report.json"),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "improved pairs" in result.output
    assert (root / "report.csv").exists()
    assert json.loads((root / "report.json").read_text())["cells"]


def test_preset_prints_profile(session_dir):
    result = session_dir["runner"].invoke(
        main, ["preset", "--param", "pushoff_pct", "--level", "HIGH"]
    )
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["params"]["pushoff_pct"] == pytest.approx(48.0)


def test_tune_enforces_bounds(session_dir):
    root = session_dir["root"]
    profile_path = root / "profile.json"
    runner = session_dir["runner"]
    result = runner.invoke(
        main,
        ["tune", "--param", "pushoff_pct", "--value", "50", "--out", str(profile_path)],
    )
    assert result.exit_code == 0, result.output
    assert json.loads(profile_path.read_text())["params"]["pushoff_pct"] == 50.0

    result = runner.invoke(
        main,
        ["tune", "--param", "pushoff_pct", "--value", "99", "--out", str(root / "x.json")],
    )
    assert result.exit_code != 0


def test_regenerate_then_simulate_and_export(session_dir):
    root = session_dir["root"]
    runner = session_dir["runner"]
    profile_path = root / "profile.json"
    runner.invoke(
        main,
        ["tune", "--param", "pushoff_pct", "--value", "50", "--out", str(profile_path)],
    )
    tuned = root / "tuned.bundle.json"
    result = runner.invoke(
        main,
        [
            "regenerate",
            "--dataset",
            session_dir["paths"]["walking"],
            "--bundle",
            str(session_dir["bundle"]),
            "--profile",
            str(profile_path),
            "--sitstand",
            session_dir["paths"]["sitstand"],
            "--out",
            str(tuned),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "impedance:ankle" in result.output

    replay_csv = root / "replay.csv"
    result = runner.invoke(
        main,
        [
            "simulate",
            "--dataset",
            session_dir["paths"]["walking"],
            "--bundle",
            str(tuned),
            "--baseline-bundle",
            str(session_dir["bundle"]),
            "--task",
            "1.0,0.0",
            "--csv",
            str(replay_csv),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "peak commanded torque" in result.output
    assert replay_csv.exists()
    payload = json.loads(result.output[result.output.index("{") :])
    ankle_rows = [r for r in payload["walking"] if r["joint"] == "ankle"]
    assert ankle_rows and ankle_rows[0]["peak_torque_change_pct"] > 5.0

    reexport = root / "reexport.bundle.json"
    result = runner.invoke(
        main, ["export", "--bundle", str(tuned), "--out", str(reexport)]
    )
    assert result.exit_code == 0, result.output
    assert reexport.read_bytes() == tuned.read_bytes()
