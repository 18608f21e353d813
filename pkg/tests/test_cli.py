from __future__ import annotations

import json
import math

import pytest

from adiabatic_tn.cli import main
from adiabatic_tn.records import TOOLKIT, ExperimentManifest, ManifestError, RunRecord, file_digest, read_csv


def write_manifest(path, **overrides):
    data = {"experiment_id": "exp", "family": "mps-family:g=-0.6", "n": [8], "T": [2.0]}
    data.update(overrides)
    path.write_text(json.dumps(data))
    return str(path)


def strip_timing(path):
    doc = json.loads(path.read_text())
    doc.pop("timing")
    return doc


def test_prepare_smoke(tmp_path):
    m = write_manifest(tmp_path / "m.json", n=[32], T=[10])
    assert main(["prepare", "--manifest", m, "--out", str(tmp_path / "o")]) == 0
    run = tmp_path / "o" / "exp"
    rec = RunRecord.load(run / "run_N32_T10.json")
    assert 0.0 < rec.summary["final_fidelity"] <= 1.0
    assert rec.toolkit_version == TOOLKIT
    meta, rows = read_csv(run / "run_N32_T10.csv")
    assert meta["manifest_hash"] == rec.manifest_hash
    assert list(rows[0]) == ["step", "t", "s", "fidelity", "max_bond", "energy"]
    assert rec.outputs["trajectory_digest"] == file_digest(run / "run_N32_T10.csv")
    assert not list(run.glob("*.ckpt.json"))


def test_prepare_deterministic_and_parallel(tmp_path):
    m = write_manifest(tmp_path / "m.json", n=[8, 12], T=[1.0, 2.0])
    for out, jobs in (("a", "1"), ("b", "1"), ("c", "2")):
        assert main(["prepare", "--manifest", m, "--out", str(tmp_path / out), "--jobs", jobs]) == 0
    for name in ("run_N8_T1.json", "run_N12_T2.json"):
        ref = strip_timing(tmp_path / "a" / "exp" / name)
        assert strip_timing(tmp_path / "b" / "exp" / name) == ref
        assert strip_timing(tmp_path / "c" / "exp" / name) == ref
        csv = name.replace(".json", ".csv")
        assert (tmp_path / "c" / "exp" / csv).read_bytes() == (tmp_path / "a" / "exp" / csv).read_bytes()


@pytest.mark.parametrize(
    "overrides",
    [{"T": []}, {"n": []}, {"n": [7]}, {"family": "mps-family:g=0"}, {"tau": -1}, {"schedule": "cosine"}, {"bogus": 1}],
)
def test_prepare_validation(tmp_path, overrides):
    m = write_manifest(tmp_path / "m.json", **overrides)
    assert main(["prepare", "--manifest", m, "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o" / "exp").exists()


def test_prepare_missing_manifest(tmp_path):
    assert main(["prepare", "--manifest", str(tmp_path / "none.json")]) == 2


def test_usage_errors():
    assert main_exit(["prepare"]) == 1
    assert main_exit(["nonsense"]) == 1
    assert main_exit(["gap", "--family", "aklt-1d", "--n", "6", "--grid", "0:1"]) == 1
    assert main_exit(["schedule", "--kind", "beta(3)", "--samples", "-5"]) == 1
    assert main_exit(["state", "--family", "aklt-1d", "--n", "6", "--s", "1.2"]) == 1
    assert main_exit(["fit", "--input", "x", "--model", "error-density", "--window", "5:1"]) == 1


def main_exit(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return exc.value.code


def test_gap_command(tmp_path, capsys):
    code = main(["gap", "--family", "mps-family:g=-0.3", "--n", "4", "6", "--grid", "0:1:5", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert [p["n"] for p in summary["profiles"]] == [4, 6]
    meta, rows = read_csv(tmp_path / "gap_mps-family_g-0.3_N4.csv")
    assert len(rows) == 5 and meta["manifest_hash"] == summary["manifest_hash"]
    assert all(float(r["gap"]) > 0 for r in rows)


def test_gap_validation(tmp_path):
    assert main(["gap", "--family", "aklt-2d-hex", "--n", "4", "--out", str(tmp_path)]) == 2
    assert main(["gap", "--family", "mps-family:g=-0.3", "--n", "5", "--out", str(tmp_path)]) == 2


def test_schedule_command(capsys):
    assert main(["schedule", "--kind", "beta(3)", "--samples", "101"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
    assert lines[0] == "lambda,s" and len(lines) == 102
    assert lines[1] == "0.0,0.0" and lines[-1] == "1.0,1.0"
    assert main(["schedule", "--kind", "sin2-1d", "--samples", "3", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["s"][1] == pytest.approx(0.5, abs=1e-15)


def test_state_command(capsys):
    assert main(["state", "--family", "aklt-1d", "--n", "8", "--s", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["energy"] < 1e-10
    assert main(["state", "--family", "mps-family:g=-0.5", "--n", "8"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["correlation_length"] == pytest.approx(0.910239, abs=1e-6)
    assert doc["max_bond"] == 2


def test_fit_missing_files(tmp_path, capsys):
    pattern = str(tmp_path / "nothing" / "*.json")
    assert main(["fit", "--input", pattern, "--model", "power-law"]) == 2
    assert pattern in capsys.readouterr().err


def test_fit_error_density_pipeline(tmp_path):
    m = write_manifest(tmp_path / "m.json", n=[8, 12, 16, 20], T=[2.0])
    out = tmp_path / "o"
    assert main(["prepare", "--manifest", m, "--out", str(out)]) == 0
    fit_path = tmp_path / "fit.json"
    assert main(["fit", "--input", str(out / "exp" / "run_*.json"), "--model", "error-density", "--out", str(fit_path)]) == 0
    doc = json.loads(fit_path.read_text())
    fit = doc["fits"][0]
    assert {"kappa", "c", "residual"} <= set(fit) and fit["n_points"] == 4
    # referential integrity: every input is a run record of this manifest with matching digest
    mhash = ExperimentManifest.load(m).hash
    for item in doc["inputs"]:
        assert item["manifest_hash"] == mhash
        assert file_digest(item["file"]) == item["digest"]


def test_ed_evolve_and_power_law_fit(tmp_path):
    m = write_manifest(tmp_path / "m.json", family="mps-family:g=-0.3", n=[4], T=[4.0, 6.0, 8.0, 10.0], tau=0.05)
    out = tmp_path / "o"
    assert main(["ed-evolve", "--manifest", m, "--out", str(out)]) == 0
    rec = RunRecord.load(out / "exp" / "ed_N4_T4.json")
    assert rec.kind == "ed" and rec.summary["infidelity"] == pytest.approx(1 - rec.summary["final_fidelity"])
    fit_path = tmp_path / "fit.json"
    code = main(["fit", "--input", str(out / "exp" / "ed_*.json"), "--model", "power-law", "--window", "4:10", "--out", str(fit_path)])
    assert code == 0
    doc = json.loads(fit_path.read_text())
    assert doc["window"] == [4.0, 10.0] and math.isfinite(doc["fit"]["alpha"])


def test_manifest_hash_ignores_location():
    base = {"experiment_id": "e", "family": "aklt-1d", "n": [6], "T": [1.0]}
    a = ExperimentManifest.from_dict(base)
    b = ExperimentManifest.from_dict({**base, "out": "elsewhere", "jobs": 4})
    c = ExperimentManifest.from_dict({**base, "tau": 0.02})
    assert a.hash == b.hash != c.hash


def test_manifest_type_checks():
    with pytest.raises(ManifestError):
        ExperimentManifest.from_dict({"experiment_id": "e", "family": "aklt-1d", "n": [6.5], "T": [1.0]})
    with pytest.raises(ManifestError):
        ExperimentManifest.from_dict({"experiment_id": "e", "family": "aklt-1d", "n": [6]})
