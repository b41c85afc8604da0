"""Exit codes, error listings, artifact determinism, and verify filtering."""

import json
from pathlib import Path

import pytest

from condux.cli import main


def _write(path: Path, obj) -> str:
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def test_empty_config_exits_2_with_field_message(tmp_path, capsys):
    cfg = _write(tmp_path / "empty.json", {})
    assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert "config error: experiment: required field" in err


def test_every_offending_path_is_listed(tmp_path, capsys):
    cfg = _write(tmp_path / "bad.json", {
        "experiment": "chua",
        "params": {"M": "big", "junk": 1},
        "integration": {"step": 0},
    })
    assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    for path in ("params.M", "params.junk", "integration.step"):
        assert path in err


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "out")]) == 2
    assert "config error" in capsys.readouterr().err


def test_run_artifacts_are_deterministic(tmp_path, capsys):
    cfg = _write(tmp_path / "probe.json",
                 {"experiment": "probe", "params": {"t1": 10.0}})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--out", str(out1)]) == 0
    assert main(["run", cfg, "--out", str(out2)]) == 0
    capsys.readouterr()
    names1 = sorted(p.name for p in out1.iterdir())
    names2 = sorted(p.name for p in out2.iterdir())
    assert names1 == names2 and names1
    for name in names1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_run_reports_written_paths(tmp_path, capsys):
    cfg = _write(tmp_path / "probe.json", {"experiment": "probe"})
    assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "probe_report.json" in out
    report = json.loads((tmp_path / "out" / "probe_report.json").read_text())
    assert report["stable"] is True
    assert report["rate"] == pytest.approx(-1.0, abs=1e-6)


def test_verify_filter_without_match_exits_2(capsys):
    assert main(["verify", "--filter=bogus"]) == 2
    assert "matches no criterion" in capsys.readouterr().err


def test_verify_properties_section_passes(tmp_path, capsys):
    out = tmp_path / "rows.json"
    assert main(["verify", "--filter=properties", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "criterion" in text and "verdict" in text
    assert "FAIL" not in text
    rows = json.loads(out.read_text())
    assert rows and all(r["passed"] for r in rows)
    assert {r["criterion"] for r in rows} == {"properties"}


@pytest.mark.slow
def test_verify_exits_1_when_a_check_fails(capsys):
    # the kapitza criterion carries a known-red deadline check
    assert main(["verify", "--filter=kapitza"]) == 1
    text = capsys.readouterr().out
    assert "FAIL" in text and "note:" in text
