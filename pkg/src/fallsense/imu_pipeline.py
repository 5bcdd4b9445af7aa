"""Stage-I preprocessing: gravity removal, magnitude synthesis and the 20 window features.

Gravity is tracked per axis with an exponentially weighted moving average::

    g_t = alpha * g_{t-1} + (1 - alpha) * acc_t        (alpha = 0.85)
    lacc_t = acc_t - g_t

The filter seeds from the first raw sample rather than zero. Gyroscope
channels go through the same magnitude synthesis but skip gravity removal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DataError, UninitializedGravity, WrongWindowLength
from .sensor_model import ImuSample, Trace

WINDOW_SAMPLES = 30
PART1_SAMPLES = 20  # offsets 0-2 s at 10 Hz; part 2 covers 2-3 s
KURTOSIS_VAR_FLOOR = 1e-12

STAT_NAMES = ("max", "mean", "median", "kurtosis", "variance")
FEATURE_NAMES = tuple(
    f"{chan}_part{part}_{stat}"
    for chan in ("acc", "gyr")
    for part in (1, 2)
    for stat in STAT_NAMES
)


@dataclass(frozen=True)
class FilterConfig:
    alpha: float = 0.85

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DataError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class GravityState:
    g_x: float = 0.0
    g_y: float = 0.0
    g_z: float = 0.0
    initialized: bool = False


@dataclass(frozen=True)
class LinearAccelSample:
    t: float
    lacc_x: float
    lacc_y: float
    lacc_z: float


def gravity_update(state: GravityState, sample: ImuSample,
                   cfg: FilterConfig = FilterConfig()) -> GravityState:
    if not state.initialized:
        return GravityState(sample.acc_x, sample.acc_y, sample.acc_z, True)
    a = cfg.alpha
    b = 1.0 - a
    return GravityState(
        a * state.g_x + b * sample.acc_x,
        a * state.g_y + b * sample.acc_y,
        a * state.g_z + b * sample.acc_z,
        True,
    )


def linear_acceleration(sample: ImuSample, state: GravityState) -> LinearAccelSample:
    if not state.initialized:
        raise UninitializedGravity("gravity state has not seen a sample yet")
    return LinearAccelSample(
        sample.t,
        sample.acc_x - state.g_x,
        sample.acc_y - state.g_y,
        sample.acc_z - state.g_z,
    )


def magnitude3(x: float, y: float, z: float) -> float:
    return math.sqrt(x * x + y * y + z * z)


def stream_linear_acceleration(samples: Iterable[ImuSample], cfg: FilterConfig = FilterConfig(),
                               state: GravityState | None = None):
    """Yield ``LinearAccelSample`` per input, updating gravity before subtraction.

    Returns the final gravity state through ``StopIteration.value``; most callers
    just iterate.
    """
    state = state or GravityState()
    for s in samples:
        state = gravity_update(state, s, cfg)
        yield linear_acceleration(s, state)
    return state


def magnitude_streams(trace: Trace, cfg: FilterConfig = FilterConfig(),
                      state: GravityState | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Linear-acceleration and angular-rate magnitude per sample of ``trace``."""
    acc = np.empty(len(trace))
    gyr = np.empty(len(trace))
    for i, (s, la) in enumerate(zip(trace, stream_linear_acceleration(trace, cfg, state))):
        acc[i] = magnitude3(la.lacc_x, la.lacc_y, la.lacc_z)
        gyr[i] = magnitude3(s.gyr_x, s.gyr_y, s.gyr_z)
    return acc, gyr


def split_window(window) -> tuple[np.ndarray, np.ndarray]:
    """Split a 30-sample window into the first 2 s (20 samples) and the last second."""
    w = np.asarray(window, dtype=np.float64)
    if w.shape != (WINDOW_SAMPLES,):
        raise WrongWindowLength(f"expected {WINDOW_SAMPLES} samples, got {w.shape}")
    return w[:PART1_SAMPLES], w[PART1_SAMPLES:]


def _stats(part: np.ndarray) -> list[float]:
    n = part.size
    mean = part.sum() / n
    dev = part - mean
    var = float((dev * dev).sum() / n)
    if var < KURTOSIS_VAR_FLOOR:
        kurt = 0.0
    else:
        m4 = float((dev ** 4).sum() / n)
        kurt = m4 / (var * var) - 3.0
    return [float(part.max()), float(mean), float(np.median(part)), kurt, var]


def extract_features(acc_mag_window, gyr_mag_window) -> np.ndarray:
    """The ordered 20-vector: (acc, gyr) x (part1, part2) x (max, mean, median, kurtosis, variance)."""
    feats: list[float] = []
    for window in (acc_mag_window, gyr_mag_window):
        for part in split_window(window):
            feats.extend(_stats(part))
    return np.array(feats, dtype=np.float64)


def window_features(trace: Trace, cfg: FilterConfig = FilterConfig()) -> np.ndarray:
    """Features of a standalone 30-sample trace, gravity seeded from its first sample."""
    acc, gyr = magnitude_streams(trace, cfg)
    return extract_features(acc, gyr)
