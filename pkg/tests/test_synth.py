import numpy as np
import pytest

from fallsense.csi_pipeline import MOTION_STAT_BOUNDARY, csi_tensor, motion_statistic
from fallsense.errors import DataError
from fallsense.imu_pipeline import magnitude_streams
from fallsense.synth import (
    CLASS_ORDER,
    SCENARIOS,
    TABLE1_COUNTS,
    ActionClass,
    MultipathModel,
    Path,
    gen_csi,
    gen_csi_dataset,
    gen_imu,
    gen_imu_dataset,
    gen_scenario,
    multipath_response,
    scenario_spec,
)


def test_table1_counts():
    assert sum(TABLE1_COUNTS.values()) == 8305
    assert TABLE1_COUNTS[ActionClass.FALL] == 820
    assert TABLE1_COUNTS[ActionClass.STATIC] == 896
    assert [c.index for c in CLASS_ORDER] == list(range(10))


def test_static_class_is_quiet():
    for seed in range(30):
        acc, _ = magnitude_streams(gen_imu(ActionClass.STATIC, seed)[0])
        assert acc.max() < 0.3


def test_fall_peak_in_first_two_seconds():
    for seed in range(100):
        trace, label = gen_imu(ActionClass.FALL, seed)
        acc, _ = magnitude_streams(trace)
        assert label == 0
        assert int(np.argmax(acc)) < 20


def test_fall_part1_busier_than_part2():
    for seed in range(200):
        acc, _ = magnitude_streams(gen_imu(ActionClass.FALL, seed)[0])
        assert acc[:20].mean() > acc[20:].mean()


@pytest.mark.parametrize("cls", list(ActionClass))
def test_imu_generator_is_pure(cls):
    a, la = gen_imu(cls, 12)
    b, lb = gen_imu(cls, 12)
    assert a.samples == b.samples and la == lb == cls.index
    assert len(a) == 30
    assert gen_imu(cls, 13)[0].samples != a.samples


def test_csi_static_and_motion_separate():
    static = [motion_statistic(csi_tensor(gen_csi(False, s))) for s in range(1000)]
    motion = [motion_statistic(csi_tensor(gen_csi(True, s))) for s in range(1000)]
    assert max(static) < MOTION_STAT_BOUNDARY
    assert min(motion) > 100.0


def test_csi_generator_is_pure():
    a = gen_csi(True, 5, onset=4)
    assert a.samples == gen_csi(True, 5, onset=4).samples
    with pytest.raises(DataError):
        gen_csi(True, 5, onset=29)


def test_single_path_amplitude_constant():
    model = MultipathModel((Path(120.0, 0.4, delay=50e-9),))
    t = np.arange(100) / 10
    h = multipath_response(model, t, np.linspace(-8e6, 8e6, 53))
    np.testing.assert_allclose(np.abs(h), 120.0, rtol=1e-12)


def test_two_paths_with_doppler_fluctuate():
    model = MultipathModel((Path(100.0, 0.0), Path(50.0, 0.0, doppler=1.0)))
    amp = np.abs(multipath_response(model, np.arange(20) / 10))[:, 0]
    assert amp.max() == pytest.approx(150.0, rel=1e-3)
    assert amp.min() == pytest.approx(50.0, rel=1e-3)


def test_multipath_validation():
    with pytest.raises(DataError):
        MultipathModel(())
    with pytest.raises(DataError):
        MultipathModel((Path(-1.0, 0.0),))


def test_dataset_minimal_counts_and_split_determinism():
    counts = {c.value: 1 for c in CLASS_ORDER}
    ds = gen_imu_dataset(counts, seed=3)
    assert ds.raw.shape == (10, 30, 7)
    assert ds.labels.tolist() == list(range(10))
    again = gen_imu_dataset(counts, seed=3)
    assert np.array_equal(ds.raw, again.raw)
    assert np.array_equal(ds.train_mask, again.train_mask)


def test_dataset_counts_respected():
    counts = {"fall": 7, "walk": 4}
    ds = gen_imu_dataset(counts, seed=0)
    assert np.bincount(ds.labels).tolist()[0] == 7
    assert int((ds.labels == ActionClass.WALK.index).sum()) == 4
    assert int(ds.train_mask.sum()) == round(0.7 * 7) + round(0.7 * 4)


def test_csi_dataset_layout():
    ds = gen_csi_dataset({"static": 3, "motion": 4}, seed=1)
    assert ds.raw.shape == (7, 30, 212) and ds.raw.dtype == np.float32
    assert ds.labels.tolist() == [0, 0, 0, 1, 1, 1, 1]
    assert len(ds.frames(0)) == 30


@pytest.mark.parametrize("name", SCENARIOS)
def test_scenario_traces_aligned(name):
    spec = scenario_spec(name, 2)
    imu, csi, impact = gen_scenario(spec)
    assert len(imu) == len(csi)
    assert np.array_equal(imu.times(), csi.times())
    assert sum(spec.expected.values()) == (0 if name == "daily" else 1)
    assert (impact is None) == (name == "daily")
    imu2, csi2, _ = gen_scenario(scenario_spec(name, 2))
    assert imu2.samples == imu.samples and csi2.samples == csi.samples


def test_unknown_scenario():
    with pytest.raises(DataError):
        scenario_spec("juggling", 0)
