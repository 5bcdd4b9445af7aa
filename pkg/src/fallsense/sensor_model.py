"""Timestamped sensor records, trace containers and window slicing.

Every record carries its own timestamp so jittery captures and perfectly
regular synthetic traces go through the same code. Windows are half-open,
``[t0, t0 + duration)``, so adjacent windows never share a sample.

CSI antenna ordering: antenna index 0 is the first column block of the
capture layout (real parts of antenna 0, then antenna 1, then the imaginary
parts in the same order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Generic, Sequence, TypeVar

import numpy as np

from .errors import DataError, EmptyTrace, EmptyWindow, RateMismatch

N_ANTENNAS = 2
N_SUBCARRIERS = 53
N_CHANNELS = N_ANTENNAS * N_SUBCARRIERS  # 106 amplitude columns
N_RAW_COLUMNS = 2 * N_CHANNELS  # 212 real/imag columns

DEFAULT_RATE_HZ = 10.0
DEFAULT_RATE_TOL = 0.05


@dataclass(frozen=True)
class ImuSample:
    """One 6-axis reading: gravity-inclusive acceleration (m/s^2), angular rate (rad/s)."""

    t: float
    acc_x: float
    acc_y: float
    acc_z: float
    gyr_x: float
    gyr_y: float
    gyr_z: float

    def __post_init__(self):
        vals = (self.acc_x, self.acc_y, self.acc_z, self.gyr_x, self.gyr_y, self.gyr_z)
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"non-finite IMU channel at t={self.t}")
        if not (math.isfinite(self.t) and self.t >= 0):
            raise DataError(f"invalid IMU timestamp {self.t}")

    @property
    def acc(self) -> tuple[float, float, float]:
        return (self.acc_x, self.acc_y, self.acc_z)

    @property
    def gyr(self) -> tuple[float, float, float]:
        return (self.gyr_x, self.gyr_y, self.gyr_z)


@dataclass(frozen=True, eq=False)
class CsiFrame:
    """One CSI report: real and imaginary parts, each (antennas, subcarriers)."""

    t: float
    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.array(self.re, dtype=np.float64)
        im = np.array(self.im, dtype=np.float64)
        shape = (N_ANTENNAS, N_SUBCARRIERS)
        if re.shape != shape or im.shape != shape:
            raise DataError(f"CSI frame must be {shape}, got {re.shape} / {im.shape}")
        if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
            raise DataError(f"non-finite CSI entry at t={self.t}")
        re.setflags(write=False)
        im.setflags(write=False)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    def __eq__(self, other):
        if not isinstance(other, CsiFrame):
            return NotImplemented
        return (
            self.t == other.t
            and np.array_equal(self.re, other.re)
            and np.array_equal(self.im, other.im)
        )

    __hash__ = None

    def raw_row(self) -> np.ndarray:
        """The 212 columns: re(ant0), re(ant1), im(ant0), im(ant1)."""
        return np.concatenate([self.re.ravel(), self.im.ravel()])

    @classmethod
    def from_raw_row(cls, t: float, row: Sequence[float]) -> "CsiFrame":
        row = np.asarray(row, dtype=np.float64)
        if row.shape != (N_RAW_COLUMNS,):
            raise DataError(f"expected {N_RAW_COLUMNS} raw CSI columns, got {row.shape}")
        re = row[:N_CHANNELS].reshape(N_ANTENNAS, N_SUBCARRIERS)
        im = row[N_CHANNELS:].reshape(N_ANTENNAS, N_SUBCARRIERS)
        return cls(t, re, im)


S = TypeVar("S")


@dataclass(frozen=True)
class Trace(Generic[S]):
    """Ordered samples with strictly increasing timestamps."""

    samples: tuple
    nominal_rate: float = DEFAULT_RATE_HZ

    def __post_init__(self):
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        if not self.nominal_rate > 0:
            raise DataError(f"nominal_rate must be positive, got {self.nominal_rate}")
        for prev, cur in zip(samples, samples[1:]):
            if not cur.t > prev.t:
                raise DataError(f"timestamps not strictly increasing at t={cur.t}")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, idx):
        return self.samples[idx]

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples], dtype=np.float64)

    @property
    def start(self) -> float:
        return self.samples[0].t

    @property
    def end(self) -> float:
        return self.samples[-1].t


@dataclass(frozen=True)
class CsiGeometry:
    n_antennas: int = N_ANTENNAS
    n_subcarriers: int = N_SUBCARRIERS
    symbol_duration: float = 3.2e-6
    carrier_frequency: float = 5.18e9
    speed_of_light: float = 299_792_458.0

    def __post_init__(self):
        for name in ("n_antennas", "n_subcarriers", "symbol_duration",
                     "carrier_frequency", "speed_of_light"):
            if not getattr(self, name) > 0:
                raise DataError(f"CsiGeometry.{name} must be positive")

    @property
    def raw_columns(self) -> int:
        return self.n_antennas * self.n_subcarriers * 2


def imu_array(trace: Trace) -> np.ndarray:
    """(n, 7) array of t, acc_xyz, gyr_xyz."""
    return np.array(
        [(s.t, s.acc_x, s.acc_y, s.acc_z, s.gyr_x, s.gyr_y, s.gyr_z) for s in trace],
        dtype=np.float64,
    ).reshape(-1, 7)


def imu_trace_from_array(arr: np.ndarray, rate: float = DEFAULT_RATE_HZ) -> Trace:
    return Trace(tuple(ImuSample(*map(float, row)) for row in np.asarray(arr)), rate)


def check_rate(trace: Trace, expected_hz: float = DEFAULT_RATE_HZ,
               rel_tol: float = DEFAULT_RATE_TOL) -> Trace:
    """Return ``trace`` unchanged if its median sample interval matches ``expected_hz``."""
    if len(trace) == 0:
        raise EmptyTrace("cannot check the rate of an empty trace")
    if len(trace) == 1:
        return trace
    interval = float(np.median(np.diff(trace.times())))
    nominal = 1.0 / expected_hz
    if abs(interval - nominal) > rel_tol * nominal:
        raise RateMismatch(
            f"median interval {interval:.6g} s, expected {nominal:.6g} s (+/-{rel_tol:.0%})"
        )
    return trace


def slice_window(trace: Trace, t0: float, duration: float) -> Trace:
    """All samples with ``t0 <= t < t0 + duration``, order preserved."""
    if not duration > 0:
        raise DataError(f"duration must be positive, got {duration}")
    if len(trace) == 0:
        raise EmptyTrace("cannot slice an empty trace")
    if t0 < trace.start:
        raise DataError(f"t0={t0} precedes the first timestamp {trace.start}")
    t1 = t0 + duration
    times = trace.times()
    lo = int(np.searchsorted(times, t0, side="left"))
    hi = int(np.searchsorted(times, t1, side="left"))
    if hi <= lo:
        raise EmptyWindow(f"no samples in [{t0}, {t1})")
    return Trace(trace.samples[lo:hi], trace.nominal_rate)
