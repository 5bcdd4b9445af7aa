import time

import numpy as np
import pytest

from fallsense.cli import csi_inputs, imu_inputs
from fallsense.neural import CnnModel, MlpModel, evaluate, train
from fallsense.neural.training import CSI_RECIPE, IMU_RECIPE, stratified_split
from fallsense.sensor_model import ImuSample, Trace
from fallsense.synth import CLASS_NAMES, gen_csi_dataset, gen_imu_dataset

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    def record(number: int, ok: bool, detail: str):
        line = f"AC{number:<2d} {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def make_imu_trace(acc, gyr=None, rate=10.0, t0=0.0):
    acc = np.asarray(acc, dtype=float)
    gyr = np.zeros_like(acc) if gyr is None else np.asarray(gyr, dtype=float)
    return Trace(tuple(ImuSample(t0 + i / rate, *map(float, a), *map(float, g))
                       for i, (a, g) in enumerate(zip(acc, gyr))), rate)


class Trained:
    """Both classifiers trained once per session on the full synthetic datasets."""

    def __init__(self):
        t = time.perf_counter()
        imu = gen_imu_dataset(seed=0)
        x = imu_inputs(imu.raw)
        y = imu.labels
        mask = stratified_split(y, IMU_RECIPE.train_fraction, IMU_RECIPE.seed)
        mlp = MlpModel.create(len(CLASS_NAMES), seed=IMU_RECIPE.seed).set_normalization(x[mask])
        self.mlp, _ = train(mlp, x[mask], y[mask], IMU_RECIPE)
        self.imu_test = (x[~mask], y[~mask])
        self.imu_seconds = time.perf_counter() - t

        t = time.perf_counter()
        csi = gen_csi_dataset(seed=0)
        xc = csi_inputs(csi.raw)
        yc = csi.labels
        mask = stratified_split(yc, CSI_RECIPE.train_fraction, CSI_RECIPE.seed)
        self.cnn, _ = train(CnnModel.create(seed=CSI_RECIPE.seed), xc[mask], yc[mask], CSI_RECIPE)
        self.csi_test = (xc[~mask], yc[~mask])
        self.csi_seconds = time.perf_counter() - t

    def imu_accuracy(self):
        return evaluate(self.mlp, *self.imu_test)[1]

    def csi_accuracy(self):
        return evaluate(self.cnn, *self.csi_test)[1]


@pytest.fixture(scope="session")
def trained():
    return Trained()
