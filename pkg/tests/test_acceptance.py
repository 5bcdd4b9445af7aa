import hashlib
import time

import numpy as np

from fallsense import cli
from fallsense.csi_pipeline import dwt_denoise
from fallsense.fusion import FusionConfig, Stage1Stream, VoteBuffer, run_session, summarize, vote_fired
from fallsense.imu_pipeline import WINDOW_SAMPLES, magnitude_streams
from fallsense.neural import CnnModel, MlpModel, gradient_check, save_weights
from fallsense.neural.cnn import IN_CHANNELS, IN_STEPS
from fallsense.synth import CLASS_ORDER, ActionClass, gen_imu, gen_scenario, random_rotation, scenario_spec

from conftest import make_imu_trace
from test_imu_pipeline import oracle_magnitudes


def test_ac01_parameter_counts(acceptance):
    t = time.perf_counter()
    mlp = MlpModel.create(11).param_counts()
    cnn = CnnModel.create().param_counts()
    elapsed = time.perf_counter() - t
    ok = (list(mlp.values()) == [2688, 8256, 2080, 363]
          and list(cnn.values()) == [10208, 32, 2112, 130] and elapsed < 1.0)
    acceptance(1, ok, f"mlp={list(mlp.values())} cnn={list(cnn.values())} {elapsed:.3f}s")
    assert ok


def test_ac02_gradient_check(acceptance):
    t = time.perf_counter()
    errors = []
    for seed in (1, 2, 3):
        rng = np.random.default_rng(seed)
        mlp = MlpModel.create(11, seed=seed)
        errors.append(gradient_check(mlp, rng.normal(size=20), int(rng.integers(11)), seed=seed))
        cnn = CnnModel.create(seed=seed)
        x = rng.normal(size=(IN_STEPS, IN_CHANNELS))
        errors.append(gradient_check(cnn, x, int(rng.integers(2)), seed=seed))
    elapsed = time.perf_counter() - t
    ok = max(errors) < 1e-4 and elapsed < 30.0
    acceptance(2, ok, f"max relative error {max(errors):.2e} {elapsed:.1f}s")
    assert ok


def test_ac03_recurrence_oracle(acceptance):
    t = time.perf_counter()
    exact = True
    for seed in range(10):
        rng = np.random.default_rng(seed)
        acc = rng.normal(scale=3.0, size=(1000, 3)) + [0.0, 0.0, 9.81]
        gyr = rng.normal(size=(1000, 3))
        trace = make_imu_trace(acc, gyr)
        rows = [(s.t, *s.acc, *s.gyr) for s in trace]
        oa, og = oracle_magnitudes(rows)
        a, g = magnitude_streams(trace)
        stream = Stage1Stream(WINDOW_SAMPLES)
        streamed = [stream.push(s) for s in trace]
        exact &= a.tolist() == oa and g.tolist() == og and streamed == oa
    elapsed = time.perf_counter() - t
    ok = exact and elapsed < 5.0
    acceptance(3, ok, f"bitwise equal on 10x1000 samples {elapsed:.2f}s")
    assert ok


def test_ac04_rotation_invariance(acceptance):
    t = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = 0.0
    for k in range(100):
        trace, _ = gen_imu(CLASS_ORDER[k % len(CLASS_ORDER)], k)
        arr = np.array([(*s.acc, *s.gyr) for s in trace])
        base_a, base_g = magnitude_streams(trace)
        r = random_rotation(rng)
        rot = make_imu_trace(arr[:, :3] @ r.T, arr[:, 3:] @ r.T)
        rot_a, rot_g = magnitude_streams(rot)
        worst = max(worst, np.max(np.abs(rot_a - base_a)), np.max(np.abs(rot_g - base_g)))
    elapsed = time.perf_counter() - t
    ok = worst < 1e-9 and elapsed < 5.0
    acceptance(4, ok, f"max deviation {worst:.2e} over 100 rotations {elapsed:.2f}s")
    assert ok


def test_ac05_dwt_round_trip(acceptance):
    t = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = max(np.max(np.abs(dwt_denoise(x, threshold=0.0) - x))
                for x in rng.normal(scale=100.0, size=(100, 30)))
    elapsed = time.perf_counter() - t
    ok = worst < 1e-9 and elapsed < 5.0
    acceptance(5, ok, f"max reconstruction error {worst:.2e} {elapsed:.2f}s")
    assert ok


def test_ac06_cnn_accuracy(trained, acceptance):
    acc = trained.csi_accuracy()
    n = len(trained.csi_test[1])
    ok = acc >= 0.99 and trained.csi_seconds < 300.0
    acceptance(6, ok, f"CNN test accuracy {acc:.4f} on {n} held-out windows, "
                      f"data+training {trained.csi_seconds:.1f}s")
    assert ok


def test_ac07_mlp_accuracy_and_fall_precision(trained, acceptance):
    x, y = trained.imu_test
    pred = trained.mlp.predict(x)
    acc = float(np.mean(pred == y))
    fall = ActionClass.FALL.index
    precision = float(np.mean(y[pred == fall] == fall))
    recall = float(np.mean(pred[y == fall] == fall))
    ok = acc >= 0.90 and precision >= 0.95 and trained.imu_seconds < 600.0
    acceptance(7, ok, f"MLP test accuracy {acc:.4f}, fall precision {precision:.4f} "
                      f"(recall {recall:.4f}), data+training {trained.imu_seconds:.1f}s")
    assert ok


SCENARIO_RULES = {
    "fall-static": lambda s: s["EMERGENCY"] == 1,
    "fall-recover": lambda s: s["REMINDER"] >= 1 and s["EMERGENCY"] == 0,
    "throw": lambda s: s["MISJUDGMENT"] >= 1 and s["EMERGENCY"] == 0,
    "daily": lambda s: s["EMERGENCY"] + s["REMINDER"] + s["MISJUDGMENT"] == 0,
}


def test_ac08_scenario_matrix(trained, acceptance):
    t = time.perf_counter()
    failures = []
    for name, rule in SCENARIO_RULES.items():
        for seed in range(50):
            imu, csi, _ = gen_scenario(scenario_spec(name, seed))
            s = summarize(run_session(imu, csi, trained.mlp, trained.cnn))
            if not rule(s):
                failures.append((name, seed, s))
    elapsed = time.perf_counter() - t
    ok = not failures and elapsed < 120.0
    acceptance(8, ok, f"{200 - len(failures)}/200 scenarios compliant {elapsed:.1f}s"
               + (f" first failure {failures[0]}" if failures else ""))
    assert ok


def test_ac09_vote_buffer_oracle_and_monotonicity(trained, acceptance):
    t = time.perf_counter()
    rng = np.random.default_rng(9)
    buffer, naive, matched = VoteBuffer(), [], True
    for p in rng.random(10_000) < rng.random():
        buffer.push(bool(p))
        naive = (naive + [bool(p)])[-20:]
        matched &= list(buffer.slots) == naive and buffer.fall_count == sum(naive)
        matched &= vote_fired(buffer) == (sum(naive) >= 3)

    monotone = True
    for name in ("fall-static", "fall-recover", "throw", "daily"):
        imu, csi, _ = gen_scenario(scenario_spec(name, 3))
        fires = [summarize(run_session(imu, csi, trained.mlp, trained.cnn,
                                       FusionConfig(vote_threshold=k)))["vote_fired"]
                 for k in range(1, 21)]
        monotone &= fires == sorted(fires, reverse=True)
    elapsed = time.perf_counter() - t
    ok = matched and monotone and elapsed < 10.0
    acceptance(9, ok, f"10^4 pushes match naive list: {matched}, "
                      f"monotone over thresholds 1..20: {monotone} {elapsed:.1f}s")
    assert ok


def test_ac10_tick_budget(trained, acceptance):
    traces = [gen_imu(CLASS_ORDER[k % len(CLASS_ORDER)], k)[0] for k in range(340)]
    samples = [s for tr in traces for s in tr][:10_000 + WINDOW_SAMPLES - 1]
    stream, buffer = Stage1Stream(WINDOW_SAMPLES), VoteBuffer()
    for s in samples[:WINDOW_SAMPLES - 1]:
        stream.push(s)
    durations = []
    for s in samples[WINDOW_SAMPLES - 1:]:
        t = time.perf_counter()
        stream.push(s)
        probs = trained.mlp.forward(stream.features())
        buffer.push(int(np.argmax(probs)) == ActionClass.FALL.index)
        vote_fired(buffer)
        durations.append(time.perf_counter() - t)
    p95 = float(np.percentile(durations, 95)) * 1e3
    ok = len(durations) == 10_000 and p95 < 10.0
    acceptance(10, ok, f"tick p95 {p95:.3f} ms over {len(durations)} ticks")
    assert ok


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_ac11_determinism(trained, tmp_path, acceptance):
    save_weights(trained.mlp, tmp_path / "mlp.fsw")
    save_weights(trained.cnn, tmp_path / "cnn.fsw")
    assert cli.main(["generate", "--scenario", "fall-recover", "--seed", "11",
                     "--out", str(tmp_path / "scen")]) == 0
    logs = []
    for run in ("a", "b"):
        assert cli.main(["replay", "--imu", str(tmp_path / "scen" / "imu.csv"),
                         "--csi", str(tmp_path / "scen" / "csi.csv"),
                         "--mlp", str(tmp_path / "mlp.fsw"), "--cnn", str(tmp_path / "cnn.fsw"),
                         "--out", str(tmp_path / run)]) == 0
        logs.append((tmp_path / run / "verdicts.csv").read_bytes())

    assert cli.main(["generate", "--classes", "fall=20,walk=20,static=20",
                     "--csi-counts", "static=10,motion=10", "--seed", "3",
                     "--out", str(tmp_path / "ds")]) == 0
    sums = {}
    for kind, name in (("imu", "mlp.fsw"), ("csi", "cnn.fsw")):
        for run in ("a", "b"):
            out = tmp_path / f"train_{kind}_{run}"
            assert cli.main(["train", kind, "--dataset", str(tmp_path / "ds"), "--epochs", "3",
                             "--seed", "4", "--out", str(out)]) == 0
            sums.setdefault(kind, set()).add(_sha(out / name))
    ok = logs[0] == logs[1] and len(logs[0]) > 0 and all(len(v) == 1 for v in sums.values())
    acceptance(11, ok, f"replay logs identical: {logs[0] == logs[1]}, "
                       f"weight checksums identical: {all(len(v) == 1 for v in sums.values())}")
    assert ok
