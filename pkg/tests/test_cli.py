"""Command-line interface: exit codes, artifacts, determinism."""
import filecmp
import json
import os

import numpy as np
import yaml
import pytest

from sensorbridge import SoftmaxClassifier, save_model
from sensorbridge.cli import main

from test_ingest import write_dataset

SYNTH_DATASET = {
    "type": "synthetic",
    "n_subjects": 3,
    "n_sensors": 2,
    "n_actions": 4,
    "activities": [["walk", [0, 1, 0, 1]], ["cook", [2, 3, 2, 3]]],
    "observability": [[1, 1, 1, 1], [1, 1, 1, 1]],
    "noise_std": 0.2,
    "samples_per_action": 40,
    "seed": 5,
    "sampling_rate_hz": 20.0,
    "channels_per_sensor": 1,
}


def write_yaml(path, payload):
    path.write_text(yaml.safe_dump(payload))
    return str(path)


def grid_config(tmp_path, variants=None):
    payload = {
        "dataset": SYNTH_DATASET,
        "window": {"length_s": 1.0, "step_s": 1.0},
        "test_sensors": ["sensor0", "sensor1"],
        "k_per_sensor": 4,
        "seed": 0,
    }
    if variants is not None:
        payload["variants"] = variants
    return write_yaml(tmp_path / "grid.yaml", payload)


class TestValidate:
    def test_valid_manifest_ok(self, tmp_path, capsys):
        rows = [f"{t / 10.0},u1,acc,x,{1.0 + t % 3}" for t in range(50)]
        path = write_dataset(tmp_path, rows, ["u1,0.0,4.9,walk"])
        assert main(["validate", "--config", path]) == 0
        assert "OK" in capsys.readouterr().out

    def test_label_outside_recording_fails(self, tmp_path, capsys):
        rows = [f"{t / 10.0},u1,acc,x,1.0" for t in range(50)]
        path = write_dataset(tmp_path, rows, ["u1,0.0,30.0,walk"])
        assert main(["validate", "--config", path]) == 1
        err = capsys.readouterr().err
        assert "u1" in err

    def test_missing_label_file_fails(self, tmp_path, capsys):
        rows = [f"{t / 10.0},u1,acc,x,1.0" for t in range(10)]
        path = write_dataset(tmp_path, rows, ["u1,0.0,0.9,walk"])
        os.remove(tmp_path / "labels.csv")
        assert main(["validate", "--config", path]) == 1
        assert "labels.csv" in capsys.readouterr().err


class TestRun:
    def test_run_writes_report_and_echo(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "run.yaml", {
            "dataset": SYNTH_DATASET,
            "window": {"length_s": 1.0, "step_s": 1.0},
            "test_sensor": "sensor0",
            "variant": "Trad",
            "k_per_sensor": 4,
            "seed": 0,
        })
        out = tmp_path / "out"
        assert main(["run", "--config", config, "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["variant"] == "Trad"
        assert 0.0 <= report["pooled_micro_f1"] <= 1.0
        assert (out / "config_echo.yaml").exists()

    def test_bad_config_exits_1(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "bad.yaml", {"dataset": {"type": "csv"}})
        assert main(["run", "--config", config,
                     "--out", str(tmp_path / "o")]) == 1
        assert "config error" in capsys.readouterr().err

    def test_seed_override_changes_echo(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "run.yaml", {
            "dataset": SYNTH_DATASET,
            "window": {"length_s": 1.0, "step_s": 1.0},
            "test_sensor": "sensor0",
            "variant": "Trad",
            "seed": 0,
        })
        out = tmp_path / "out"
        assert main(["run", "--config", config, "--out", str(out),
                     "--seed", "9", "--quiet"]) == 0
        echo = yaml.safe_load((out / "config_echo.yaml").read_text())
        assert echo["seed"] == 9


class TestGrid:
    def test_two_sensors_six_variants_gives_12_reports(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["grid", "--config", grid_config(tmp_path),
                     "--out", str(out), "--quiet"]) == 0
        reports = sorted(p for p in os.listdir(out)
                         if p.startswith("report_"))
        assert len(reports) == 12
        assert (out / "comparison.csv").exists()
        assert (out / "comparison.txt").exists()

    def test_rerun_is_byte_identical(self, tmp_path, capsys):
        config = grid_config(tmp_path, variants=["Trad", "LinR"])
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["grid", "--config", config, "--out", str(out1),
                     "--quiet"]) == 0
        assert main(["grid", "--config", config, "--out", str(out2),
                     "--quiet"]) == 0
        names = sorted(os.listdir(out1))
        assert names == sorted(os.listdir(out2))
        match, mismatch, errors = filecmp.cmpfiles(out1, out2, names,
                                                   shallow=False)
        assert mismatch == [] and errors == []

    def test_trad_only_runs_one_variant_per_sensor(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["grid", "--config", grid_config(tmp_path, ["Trad"]),
                     "--out", str(out), "--quiet"]) == 0
        reports = sorted(p for p in os.listdir(out)
                         if p.startswith("report_"))
        assert reports == ["report_sensor0_Trad.json",
                           "report_sensor1_Trad.json"]
        csv = (out / "comparison.csv").read_text()
        assert csv.splitlines()[0] == "sensor,Trad,best"

    def test_unknown_variant_exits_1(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["grid", "--config",
                     grid_config(tmp_path, ["Trad", "SVM"]),
                     "--out", str(out), "--quiet"]) == 1
        assert "SVM" in capsys.readouterr().err


class TestSynthAndInspect:
    def test_synth_writes_loadable_dataset(self, tmp_path, capsys):
        config = write_yaml(tmp_path / "synth.yaml",
                            {k: v for k, v in SYNTH_DATASET.items()
                             if k != "type"})
        out = tmp_path / "data"
        assert main(["synth", "--config", config, "--out", str(out),
                     "--quiet"]) == 0
        assert main(["validate", "--config",
                     str(out / "manifest.yaml"), "--quiet"]) == 0

    def test_inspect_classifier(self, tmp_path, capsys):
        X = np.vstack([np.zeros((5, 2)), np.ones((5, 2))])
        clf = SoftmaxClassifier().fit(X, ["a"] * 5 + ["b"] * 5)
        path = str(tmp_path / "clf.json")
        save_model(clf, path)
        assert main(["inspect", "--config", path]) == 0
        out = capsys.readouterr().out
        assert "classifier" in out and "a, b" in out

    def test_inspect_garbage_exits_1(self, tmp_path, capsys):
        path = tmp_path / "junk.json"
        path.write_text("{\"format_version\": 7}")
        assert main(["inspect", "--config", str(path)]) == 1
