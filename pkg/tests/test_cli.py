import hashlib
import json
import re

import numpy as np
import pytest

from fallsense import cli
from fallsense.errors import SchemaMismatch, UninitializedGravity
from fallsense.formats import (
    CSI_HEADER,
    IMU_HEADER,
    read_csi_trace,
    read_imu_trace,
    verdict_lines,
    write_csi_trace,
    write_imu_trace,
)
from fallsense.fusion import run_session
from fallsense.neural import save_weights
from fallsense.synth import ScenarioSegment, ScenarioSpec, gen_scenario, scenario_spec

SMALL = ["--classes", "fall=6,walk=6,static=6", "--csi-counts", "static=6,motion=6"]


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    assert cli.main(["generate", *SMALL, "--seed", "2", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def model_files(trained, tmp_path_factory):
    d = tmp_path_factory.mktemp("models")
    save_weights(trained.mlp, d / "mlp.fsw")
    save_weights(trained.cnn, d / "cnn.fsw")
    return d


def write_scenario(spec, directory):
    imu, csi, _ = gen_scenario(spec)
    directory.mkdir(parents=True, exist_ok=True)
    write_imu_trace(imu, directory / "imu.csv")
    write_csi_trace(csi, directory / "csi.csv")
    return imu, csi


def replay_args(scen, models, out, *extra):
    return ["replay", "--imu", str(scen / "imu.csv"), "--csi", str(scen / "csi.csv"),
            "--mlp", str(models / "mlp.fsw"), "--cnn", str(models / "cnn.fsw"),
            "--out", str(out), *extra]


def test_headers():
    assert IMU_HEADER == ("t", "acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z")
    assert len(CSI_HEADER) == 213
    assert CSI_HEADER[1] == "a0_sc0_re" and CSI_HEADER[54] == "a1_sc0_re"
    assert CSI_HEADER[107] == "a0_sc0_im" and CSI_HEADER[-1] == "a1_sc52_im"


def test_trace_files_round_trip_bit_exact(tmp_path):
    imu, csi = write_scenario(scenario_spec("fall-static", 3), tmp_path)
    assert read_imu_trace(tmp_path / "imu.csv").samples == imu.samples
    assert read_csi_trace(tmp_path / "csi.csv").samples == csi.samples


def test_trace_reader_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,ax\n0,1\n")
    with pytest.raises(SchemaMismatch):
        read_imu_trace(bad)
    bad.write_text(",".join(IMU_HEADER) + "\n0.0,1,2,3,4,5\n")
    assert cli.main(["replay", "--imu", str(bad), "--csi", str(bad), "--mlp", "x", "--cnn", "y",
                     "--out", str(tmp_path)]) == cli.EXIT_DATA


def test_generate_table1(tmp_path):
    assert cli.main(["generate", "--classes", "table1", "--seed", "7", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    labels = np.load(tmp_path / "imu_labels.npy")
    assert manifest["seed"] == 7
    assert np.bincount(labels).tolist() == [820, 748, 870, 876, 818, 896, 759, 832, 866, 820]
    assert np.bincount(np.load(tmp_path / "csi_labels.npy")).tolist() == [820, 800]
    assert np.load(tmp_path / "imu_raw.npy").shape == (8305, 30, 7)


def test_generate_scenario_is_byte_identical(tmp_path):
    for run in ("a", "b"):
        assert cli.main(["generate", "--scenario", "fall-static", "--seed", "1",
                         "--out", str(tmp_path / run)]) == 0
    for name in ("imu.csv", "csi.csv", "manifest.json"):
        assert sha(tmp_path / "a" / name) == sha(tmp_path / "b" / name)
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["expected"]["EMERGENCY"] == 1


def test_generate_dataset_is_byte_identical(tmp_path, small_dataset):
    assert cli.main(["generate", *SMALL, "--seed", "2", "--out", str(tmp_path)]) == 0
    for f in small_dataset.iterdir():
        assert sha(f) == sha(tmp_path / f.name)


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("FALLSENSE_SEED", "41")
    assert cli.main(["generate", "--scenario", "daily", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 41
    monkeypatch.setenv("FALLSENSE_SEED", "many")
    assert cli.main(["generate", "--scenario", "daily", "--out", str(tmp_path)]) == cli.EXIT_USAGE


def test_train_reports_and_is_deterministic(tmp_path, small_dataset):
    args = ["train", "csi", "--dataset", str(small_dataset), "--epochs", "3", "--seed", "5"]
    assert cli.main([*args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main([*args, "--out", str(tmp_path / "b")]) == 0
    assert sha(tmp_path / "a" / "cnn.fsw") == sha(tmp_path / "b" / "cnn.fsw")
    report = json.loads((tmp_path / "a" / "csi_report.json").read_text())
    assert report["config"]["epochs"] == 3 and report["config"]["seed"] == 5
    assert len(report["history"]) == 3
    assert sum(map(sum, report["confusion_matrix"])) == report["n_test"]
    assert set(report["per_class"]) == {"static", "motion"}
    assert report["weights_sha256"] == sha(tmp_path / "a" / "cnn.fsw")


def test_train_imu_untrained_is_near_chance(tmp_path, small_dataset):
    assert cli.main(["train", "imu", "--dataset", str(small_dataset), "--epochs", "0",
                     "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "imu_report.json").read_text())
    assert report["history"] == []
    assert report["n_classes"] == 10
    assert report["test_accuracy"] <= 0.5


def test_config_file_and_flag_precedence(tmp_path, small_dataset):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# training\nepochs = 2\nlr = 0.0\n")
    assert cli.main(["train", "imu", "--dataset", str(small_dataset), "--config", str(cfg),
                     "--out", str(tmp_path / "a")]) == 0
    assert json.loads((tmp_path / "a" / "imu_report.json").read_text())["config"]["epochs"] == 2
    assert cli.main(["train", "imu", "--dataset", str(small_dataset), "--config", str(cfg),
                     "--epochs", "1", "--out", str(tmp_path / "b")]) == 0
    report = json.loads((tmp_path / "b" / "imu_report.json").read_text())
    assert report["config"]["epochs"] == 1
    assert report["config"]["learning_rate"] == 0.0
    cfg.write_text("colour = blue\n")
    assert cli.main(["train", "imu", "--dataset", str(small_dataset), "--config", str(cfg),
                     "--out", str(tmp_path)]) == cli.EXIT_USAGE


@pytest.mark.parametrize("name,expected", [
    ("fall-static", {"EMERGENCY": 1, "REMINDER": 0, "MISJUDGMENT": 0}),
    ("throw", {"EMERGENCY": 0, "REMINDER": 0, "MISJUDGMENT": 1}),
])
def test_replay_scenarios(tmp_path, model_files, name, expected, capsys):
    scen = tmp_path / "scen"
    write_scenario(scenario_spec(name, 8), scen)
    assert cli.main(replay_args(scen, model_files, tmp_path / "out", "--series")) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert {k: summary[k] for k in expected} == expected
    assert f"EMERGENCY={expected['EMERGENCY']}" in capsys.readouterr().out
    series = (tmp_path / "out" / "series.csv").read_text().splitlines()
    assert series[0].startswith("t,p_fall,p_play")
    assert len(series) == summary["ticks"] + 1


def test_replay_all_static_has_no_alerts(tmp_path, model_files):
    spec = ScenarioSpec("still", (ScenarioSegment("static", 15.0, "static"),), 3)
    scen = tmp_path / "scen"
    write_scenario(spec, scen)
    assert cli.main(replay_args(scen, model_files, tmp_path / "out")) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["EMERGENCY"] == summary["REMINDER"] == summary["MISJUDGMENT"] == 0


def test_replay_file_equals_in_memory(tmp_path, model_files, trained):
    scen = tmp_path / "scen"
    imu, csi = write_scenario(scenario_spec("fall-recover", 6), scen)
    assert cli.main(replay_args(scen, model_files, tmp_path / "out")) == 0
    expected = verdict_lines(run_session(imu, csi, trained.mlp, trained.cnn), cli.CLASS_NAMES)
    assert (tmp_path / "out" / "verdicts.csv").read_text().splitlines() == expected
    pattern = re.compile(r"^\d+\.\d{6},[a-z_]+,\d\.\d{6},\d+,(NONE|REMINDER|EMERGENCY|MISJUDGMENT)$")
    assert expected[0] == "t,stage1_class,p_fall,votes,alert"
    assert all(pattern.match(line) for line in expected[1:])


def test_replay_insufficient_overlap_is_data_error(tmp_path, model_files):
    scen = tmp_path / "scen"
    imu, csi = write_scenario(scenario_spec("fall-static", 2), scen)
    # keep only the first 7 s of CSI so the stage-2 window is never covered
    lines = (scen / "csi.csv").read_text().splitlines()[:71]
    (scen / "csi.csv").write_text("\n".join(lines) + "\n")
    assert cli.main(replay_args(scen, model_files, tmp_path / "out")) == cli.EXIT_DATA


def test_bad_weight_file_is_data_error(tmp_path, model_files):
    scen = tmp_path / "scen"
    write_scenario(scenario_spec("daily", 2), scen)
    broken = tmp_path / "m"
    broken.mkdir()
    (broken / "mlp.fsw").write_bytes((model_files / "mlp.fsw").read_bytes()[:-9])
    (broken / "cnn.fsw").write_bytes((model_files / "cnn.fsw").read_bytes())
    assert cli.main(replay_args(scen, broken, tmp_path / "out")) == cli.EXIT_DATA
    # models swapped: the CNN file where the MLP is expected
    (broken / "mlp.fsw").write_bytes((model_files / "cnn.fsw").read_bytes())
    assert cli.main(replay_args(scen, broken, tmp_path / "out")) == cli.EXIT_DATA


def test_usage_errors():
    assert cli.main([]) == cli.EXIT_USAGE
    assert cli.main(["generate", "--scenario", "juggling", "--out", "x"]) == cli.EXIT_USAGE
    assert cli.main(["generate", "--classes", "fall=x", "--out", "x"]) == cli.EXIT_USAGE
    assert cli.main(["diag"]) == cli.EXIT_USAGE
    assert cli.main(["--version"]) == cli.EXIT_OK


def test_missing_input_is_data_error(tmp_path):
    assert cli.main(["train", "imu", "--dataset", str(tmp_path / "nope"),
                     "--out", str(tmp_path)]) == cli.EXIT_DATA


def test_internal_error_exit_code(monkeypatch, tmp_path):
    def boom(args):
        raise UninitializedGravity("forced")
    monkeypatch.setattr(cli, "cmd_diag", boom)
    assert cli.main(["diag", "--velocity", "1"]) == cli.EXIT_INTERNAL


def test_diag_outputs(tmp_path, capsys):
    assert cli.main(["diag", "--velocity", "1", "--angle", "0"]) == 0
    out = capsys.readouterr().out
    df = float(re.search(r"doppler_hz=([0-9.e+-]+)", out).group(1))
    assert df == pytest.approx(17.28, abs=0.01)
    scen = tmp_path / "scen"
    write_scenario(scenario_spec("throw", 1), scen)
    assert cli.main(["diag", "--csi", str(scen / "csi.csv")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t0,motion_statistic,mean_phase"
    assert len(lines) > 3
