"""Seeded synthetic IMU and CSI traces.

Nothing here reconstructs real recordings. The IMU side uses piecewise-analytic
templates (raised-cosine bumps, sinusoidal gait) expressed as world-frame
linear acceleration and angular rate, then rotated into a random phone
orientation and offset by gravity. The CSI side superposes static and moving
propagation paths::

    s(t) = sum_i A_i exp(j(omega t + phi_i))

with a per-subcarrier delay term and Doppler drift on moving paths.

Every generator is a pure function of its arguments and seed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .csi_pipeline import DopplerParams, doppler_shift
from .errors import DataError
from .neural.training import stratified_split
from .sensor_model import (
    DEFAULT_RATE_HZ,
    N_ANTENNAS,
    N_SUBCARRIERS,
    CsiFrame,
    CsiGeometry,
    ImuSample,
    Trace,
)

GRAVITY = 9.81
ACC_NOISE = 0.03
GYR_NOISE = 0.01
CSI_NOISE = 1.0
SUBCARRIER_SPACING = 312.5e3


class ActionClass(str, enum.Enum):
    FALL = "fall"
    PLAY = "play"
    PICKPUT = "pickput"
    SIT = "sit"
    SQUAT = "squat"
    STATIC = "static"
    WALK = "walk"
    UP_DOWN = "up_down"
    TOWARD_DOWN = "toward_down"
    THROWING = "throwing"

    @property
    def index(self) -> int:
        return CLASS_ORDER.index(self)


CLASS_ORDER = tuple(ActionClass)
CLASS_NAMES = tuple(c.value for c in CLASS_ORDER)
FALL_INDEX = CLASS_ORDER.index(ActionClass.FALL)

TABLE1_COUNTS = {
    ActionClass.FALL: 820,
    ActionClass.PLAY: 748,
    ActionClass.PICKPUT: 870,
    ActionClass.SIT: 876,
    ActionClass.SQUAT: 818,
    ActionClass.STATIC: 896,
    ActionClass.WALK: 759,
    ActionClass.UP_DOWN: 832,
    ActionClass.TOWARD_DOWN: 866,
    ActionClass.THROWING: 820,
}
CSI_COUNTS = {"static": 820, "motion": 800}
CSI_LABELS = {"static": 0, "motion": 1}
MOTION_LABEL = 1

DAILY_CLASSES = (ActionClass.PLAY, ActionClass.PICKPUT, ActionClass.SIT,
                 ActionClass.SQUAT, ActionClass.STATIC, ActionClass.WALK)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, (list, tuple)):
        return np.random.default_rng([int(s) for s in seed])
    return np.random.default_rng(int(seed))


# ---------------------------------------------------------------------------
# IMU templates


def _bump(tt, center, width, amp):
    """Raised-cosine pulse of full width ``width`` seconds."""
    x = (tt - center) / width
    return np.where(np.abs(x) < 0.5, amp * 0.5 * (1.0 + np.cos(2.0 * np.pi * x)), 0.0)


def _unit(rng, vertical_bias: float = 0.0) -> np.ndarray:
    v = rng.normal(size=3)
    v[2] += vertical_bias
    return v / np.linalg.norm(v)


def _smooth_noise(rng, n, scale, corr=3):
    kernel = np.hanning(2 * corr + 3)[1:-1]
    kernel /= np.sqrt(np.sum(kernel ** 2))
    raw = rng.normal(size=(n + len(kernel) - 1, 3))
    out = np.stack([np.convolve(raw[:, i], kernel, mode="valid") for i in range(3)], axis=1)
    return out * scale


@dataclass
class _Segment:
    lin: np.ndarray   # (n, 3) world-frame linear acceleration, m/s^2
    gyr: np.ndarray   # (n, 3) angular rate, rad/s
    tilt: np.ndarray  # (n,) additional tilt accumulated inside the segment, rad
    impact: float | None = None  # seconds from segment start


def _walk(tt, rng, amp=None):
    f = rng.uniform(1.6, 2.2)
    a = rng.uniform(2.0, 4.0) if amp is None else amp
    ph = rng.uniform(0, 2 * np.pi)
    lat = rng.uniform(0.5, 1.5)
    lin = np.stack([
        lat * np.sin(np.pi * f * tt + ph),
        0.4 * lat * np.cos(2 * np.pi * f * tt + ph),
        a * np.sin(2 * np.pi * f * tt + ph),
    ], axis=1)
    g = rng.uniform(0.5, 1.5)
    gyr = np.stack([g * np.sin(np.pi * f * tt + ph), 0.3 * g * np.cos(np.pi * f * tt), 0.2 * g * np.sin(2 * np.pi * f * tt)], axis=1)
    return lin, gyr


def _pulses(tt, rng, events, gyr_amp):
    """events: list of (center, width, amp). Each gets its own direction."""
    lin = np.zeros((len(tt), 3))
    gyr = np.zeros((len(tt), 3))
    for c, w, a in events:
        lin += _bump(tt, c, w, a)[:, None] * _unit(rng)
        gyr += _bump(tt, c, w * 1.2, gyr_amp * rng.uniform(0.7, 1.0))[:, None] * _unit(rng)
    return lin, gyr


def _impact_event(tt, rng, t_imp, pre_activity=True):
    """Descent, impact, rebound, then stillness. Shared by falls and fall-like phone drops."""
    n = len(tt)
    descent = rng.uniform(0.5, 0.8)
    t_d = t_imp - descent
    lin = np.zeros((n, 3))
    gyr = np.zeros((n, 3))
    if pre_activity and rng.random() < 0.5:
        wl, wg = _walk(tt, rng, amp=rng.uniform(0.5, 2.0))
        pre = (tt < t_d - 0.1)[:, None]
        lin += wl * pre
        gyr += wg * pre
    k = rng.uniform(0.4, 0.8)
    drop = _bump(tt, t_d + descent / 2, descent, k * GRAVITY)
    lin[:, 2] -= drop
    lin[:, :2] += drop[:, None] * rng.normal(scale=0.15, size=2)
    lin += _bump(tt, t_imp, rng.uniform(0.2, 0.3), rng.uniform(15.0, 28.0))[:, None] * _unit(rng, 2.0)
    lin += _bump(tt, t_imp + 0.25, 0.2, rng.uniform(2.0, 5.0))[:, None] * _unit(rng)
    gyr += _bump(tt, t_d + descent / 2, descent, rng.uniform(2.0, 4.0))[:, None] * _unit(rng)
    gyr += _bump(tt, t_imp, 0.25, rng.uniform(2.0, 5.0))[:, None] * _unit(rng)
    beta = math.radians(rng.uniform(20.0, 50.0))
    ramp = np.clip((tt - t_d) / descent, 0.0, 1.0)
    tilt = beta * (0.5 - 0.5 * np.cos(np.pi * ramp))
    return _Segment(lin, gyr, tilt, impact=t_imp)


def _throw_event(tt, rng, t_imp):
    """Phone tossed onto a nearby cushion: wrist turn during the swing, short arc, soft stop.

    The phone is already in its final orientation when it leaves the hand
    and the cushion stops it within one sample with no rebound, so the
    gravity estimate settles soon after the landing.
    """
    n = len(tt)
    flight = rng.uniform(0.4, 0.6)
    t_r = t_imp - flight
    lin = np.zeros((n, 3))
    gyr = np.zeros((n, 3))
    if rng.random() < 0.5:
        wl, wg = _walk(tt, rng, amp=rng.uniform(0.5, 2.0))
        pre = (tt < t_r - 0.6)[:, None]
        lin += wl * pre
        gyr += wg * pre
    lin += _bump(tt, t_r - 0.2, 0.4, rng.uniform(3.0, 6.0))[:, None] * _unit(rng)
    gyr += _bump(tt, t_r - 0.2, 0.4, rng.uniform(2.0, 4.0))[:, None] * _unit(rng)
    drop = _bump(tt, t_r + flight / 2, flight, rng.uniform(0.3, 0.6) * GRAVITY)
    lin[:, 2] -= drop
    lin += _bump(tt, t_imp, 0.2, rng.uniform(12.0, 18.0))[:, None] * _unit(rng, 5.0)
    gyr += _bump(tt, t_imp, 0.2, rng.uniform(2.0, 4.0))[:, None] * _unit(rng)
    beta = math.radians(rng.uniform(20.0, 50.0))
    ramp = np.clip((tt - (t_r - 0.4)) / 0.4, 0.0, 1.0)
    tilt = beta * (0.5 - 0.5 * np.cos(np.pi * ramp))
    return _Segment(lin, gyr, tilt, impact=t_imp)


def _template(cls: ActionClass, tt: np.ndarray, rng: np.random.Generator, **kw) -> _Segment:
    n = len(tt)
    dur = n / kw.get("rate", DEFAULT_RATE_HZ)
    zero = np.zeros(n)
    if cls is ActionClass.STATIC:
        return _Segment(np.zeros((n, 3)), np.zeros((n, 3)), zero)
    if cls is ActionClass.WALK:
        return _Segment(*_walk(tt, rng), zero)
    if cls is ActionClass.PLAY:
        lin = _smooth_noise(rng, n, rng.uniform(0.2, 0.6))
        gyr = _smooth_noise(rng, n, rng.uniform(0.3, 1.0))
        return _Segment(lin, gyr, zero)
    if cls is ActionClass.FALL:
        t_imp = kw.get("t_imp")
        if t_imp is None:
            t_imp = rng.uniform(0.5, 1.2)
        return _impact_event(tt, rng, t_imp, kw.get("pre_activity", True))
    if cls is ActionClass.SIT:
        c = rng.uniform(0.6, dur - 0.6)
        lin, gyr = _pulses(tt, rng, [(c, rng.uniform(0.8, 1.2), rng.uniform(2.0, 4.0))],
                           rng.uniform(1.0, 2.0))
        return _Segment(lin, gyr, zero)
    if cls is ActionClass.SQUAT:
        gap = rng.uniform(0.8, 1.4)
        c = rng.uniform(0.3, max(0.31, dur - gap - 0.3))
        events = [(c, rng.uniform(0.5, 0.7), rng.uniform(3.0, 5.0)),
                  (c + gap, rng.uniform(0.5, 0.7), rng.uniform(3.0, 5.0))]
        lin, gyr = _pulses(tt, rng, events, rng.uniform(0.3, 0.8))
        return _Segment(lin, gyr, zero)
    if cls is ActionClass.PICKPUT:
        gap = rng.uniform(1.0, 1.8)
        c = rng.uniform(0.3, max(0.31, dur - gap - 0.3))
        events = [(c, rng.uniform(0.5, 0.8), rng.uniform(1.5, 3.0)),
                  (c + gap, rng.uniform(0.5, 0.8), rng.uniform(1.5, 3.0))]
        lin, gyr = _pulses(tt, rng, events, rng.uniform(2.0, 3.5))
        return _Segment(lin, gyr, zero)
    if cls is ActionClass.UP_DOWN:
        gap = rng.uniform(0.4, 0.9)
        c = rng.uniform(0.2, max(0.21, dur - gap - 0.2))
        events = [(c, 0.3, rng.uniform(4.0, 8.0)), (c + gap, 0.3, rng.uniform(4.0, 8.0))]
        lin, gyr = _pulses(tt, rng, events, rng.uniform(1.0, 3.0))
        return _Segment(lin, gyr, zero)
    if cls is ActionClass.TOWARD_DOWN:
        c = rng.uniform(0.3, dur - 0.5)
        sep = rng.uniform(0.2, 0.35)
        events = [(c, 0.3, rng.uniform(8.0, 15.0)), (c + sep, 0.3, rng.uniform(8.0, 15.0))]
        lin, gyr = _pulses(tt, rng, events, rng.uniform(4.0, 8.0))
        lin += _smooth_noise(rng, n, rng.uniform(0.2, 0.5))
        return _Segment(lin, gyr, zero)
    if cls is ActionClass.THROWING:
        c = rng.uniform(0.4, dur - 0.9)
        flight = rng.uniform(0.3, 0.5)
        lin = np.zeros((n, 3))
        lin += _bump(tt, c, rng.uniform(0.4, 0.6), rng.uniform(6.0, 11.0))[:, None] * _unit(rng)
        in_flight = (tt > c + 0.2) & (tt <= c + 0.2 + flight)
        lin[in_flight, 2] -= GRAVITY
        land = c + 0.2 + flight + 0.05
        lin += _bump(tt, land, 0.2, rng.uniform(3.0, 7.0))[:, None] * _unit(rng)
        gyr = _bump(tt, c + 0.2 + flight / 2, flight + 0.3, rng.uniform(6.0, 12.0))[:, None] * _unit(rng)
        tilt = np.where(tt > land, math.radians(rng.uniform(30.0, 90.0)), 0.0)
        return _Segment(lin, gyr, tilt)
    raise DataError(f"unknown action class {cls!r}")


def _rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation matrix (via a random unit quaternion)."""
    q = rng.normal(size=4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def _render_imu(segments: Sequence[_Segment], rng: np.random.Generator,
                rate: float, t_start: float = 0.0) -> Trace:
    lin = np.concatenate([s.lin for s in segments])
    gyr = np.concatenate([s.gyr for s in segments])
    tilt = []
    offset = 0.0
    for s in segments:
        tilt.append(s.tilt + offset)
        offset += s.tilt[-1] if len(s.tilt) else 0.0
    tilt = np.concatenate(tilt)
    n = len(lin)
    base = random_rotation(rng)
    tilt_axis = np.array([*rng.normal(size=2), 0.0])
    acc_noise = rng.normal(scale=ACC_NOISE, size=(n, 3))
    gyr_noise = rng.normal(scale=GYR_NOISE, size=(n, 3))
    g_up = np.array([0.0, 0.0, GRAVITY])
    samples = []
    for i in range(n):
        world_to_phone = (base @ _rotation_matrix(tilt_axis, tilt[i])).T
        acc = world_to_phone @ (lin[i] + g_up) + acc_noise[i]
        w = world_to_phone @ gyr[i] + gyr_noise[i]
        samples.append(ImuSample(t_start + i / rate, *map(float, acc), *map(float, w)))
    return Trace(tuple(samples), rate)


def gen_imu(cls, seed, rate: float = DEFAULT_RATE_HZ, duration: float = 3.0) -> tuple[Trace, int]:
    """One labelled raw IMU trace of ``duration`` seconds for an action class."""
    cls = ActionClass(cls)
    n = int(round(duration * rate))
    rng = _rng(seed)
    tt = np.arange(n) / rate
    seg = _template(cls, tt, rng, rate=rate)
    return _render_imu([seg], rng, rate), cls.index


# ---------------------------------------------------------------------------
# CSI


@dataclass(frozen=True)
class Path:
    amplitude: float
    phase: float
    delay: float = 0.0      # seconds; sets the per-subcarrier phase slope
    doppler: float = 0.0    # Hz; phase drift of a moving reflector


@dataclass(frozen=True)
class MultipathModel:
    paths: tuple
    omega: float = 0.0  # baseband after down-conversion

    def __post_init__(self):
        if len(self.paths) < 1:
            raise DataError("a multipath model needs at least one path")
        if any(p.amplitude < 0 for p in self.paths):
            raise DataError("path amplitudes must be non-negative")

    @property
    def n_paths(self) -> int:
        return len(self.paths)


def multipath_response(model: MultipathModel, t, freq_offsets=(0.0,)) -> np.ndarray:
    """Complex received signal, shape (len(t), len(freq_offsets)).

    Each path contributes ``A_i exp(j(omega t + phi_i + 2 pi f_D t - 2 pi f tau_i))``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))[:, None]
    f = np.asarray(freq_offsets, dtype=np.float64)[None, :]
    out = np.zeros((t.shape[0], f.shape[1]), dtype=np.complex128)
    for p in model.paths:
        ph = model.omega * t + p.phase + 2 * np.pi * p.doppler * t - 2 * np.pi * f * p.delay
        out += p.amplitude * np.exp(1j * ph)
    return out


def _subcarrier_offsets() -> np.ndarray:
    return (np.arange(N_SUBCARRIERS) - (N_SUBCARRIERS - 1) / 2) * SUBCARRIER_SPACING


def _static_channel(rng) -> list[MultipathModel]:
    """One static model per antenna sharing path delays but not phases."""
    n = int(rng.integers(4, 7))
    amps = np.concatenate([[rng.uniform(250, 450)], rng.uniform(40, 200, size=n - 1)])
    delays = np.sort(rng.uniform(5e-9, 80e-9, size=n))
    return [
        MultipathModel(tuple(Path(float(a), float(rng.uniform(0, 2 * np.pi)), float(d))
                             for a, d in zip(amps, delays)))
        for _ in range(N_ANTENNAS)
    ]


def _moving_paths(rng, geometry: CsiGeometry) -> list[tuple[float, float, float, float, float]]:
    """Human reflections: (amplitude, phase, delay, doppler, envelope phase)."""
    out = []
    for _ in range(int(rng.integers(2, 4))):
        # body motion mostly tangential to the link: pick the Doppler in the
        # band human activity occupies, then the angle that produces it
        v = rng.uniform(0.3, 1.5)
        target = rng.uniform(0.8, 2.5)
        theta = math.acos(target * geometry.speed_of_light / (v * geometry.carrier_frequency))
        fd = doppler_shift(DopplerParams(v, theta, geometry)) * rng.choice([-1.0, 1.0])
        out.append((rng.uniform(120, 250), rng.uniform(0, 2 * np.pi),
                    rng.uniform(10e-9, 60e-9), fd, rng.uniform(0, 2 * np.pi)))
    return out


def _render_csi(active: np.ndarray, rng: np.random.Generator, rate: float,
                t_start: float = 0.0, geometry: CsiGeometry = CsiGeometry()) -> Trace:
    """CSI frames for a per-frame activity mask. Moving paths are redrawn per active run."""
    n = len(active)
    tt = np.arange(n) / rate
    f = _subcarrier_offsets()
    static = _static_channel(rng)
    h = np.stack([multipath_response(m, tt, f) for m in static], axis=1)  # (n, ant, sc)

    # contiguous active runs
    edges = np.flatnonzero(np.diff(np.concatenate([[0], active.astype(int), [0]])))
    for start, stop in zip(edges[::2], edges[1::2]):
        for amp, ph, delay, fd, env_ph in _moving_paths(rng, geometry):
            env = 1.0 + 0.5 * np.sin(2 * np.pi * 0.7 * tt + env_ph)
            gate = np.zeros(n)
            gate[start:stop] = 1.0
            for a in range(N_ANTENNAS):
                ant_ph = rng.uniform(0, 2 * np.pi)
                model = MultipathModel((Path(amp, ph + ant_ph, delay, fd),))
                h[:, a, :] += (gate * env)[:, None] * multipath_response(model, tt, f)
        # a body crossing the line of sight attenuates the dominant path
        c = rng.uniform(tt[start], tt[stop - 1] + 1e-9)
        block = 1.0 - _bump(tt, c, rng.uniform(0.6, 1.0), rng.uniform(0.3, 0.6))
        block[:start] = 1.0
        block[stop:] = 1.0
        for a in range(N_ANTENNAS):
            los = static[a].paths[0]
            los_only = multipath_response(MultipathModel((los,)), tt, f)
            h[:, a, :] += (block - 1.0)[:, None] * los_only

    noise = rng.normal(scale=CSI_NOISE, size=(n, 2, N_ANTENNAS, N_SUBCARRIERS))
    frames = tuple(
        CsiFrame(t_start + i / rate, h[i].real + noise[i, 0], h[i].imag + noise[i, 1])
        for i in range(n)
    )
    return Trace(frames, rate)


def gen_csi(motion: bool, seed, frames: int = 30, onset: int = 0,
            rate: float = DEFAULT_RATE_HZ) -> Trace:
    """Static scene, or human activity from frame ``onset`` to the end."""
    if frames < 2:
        raise DataError("need at least two CSI frames")
    active = np.zeros(frames, dtype=bool)
    if motion:
        if not 0 <= onset < frames - 1:
            raise DataError(f"onset {onset} leaves no active frames")
        active[onset:] = True
    return _render_csi(active, _rng(seed), rate)


# ---------------------------------------------------------------------------
# datasets


@dataclass
class ImuDataset:
    raw: np.ndarray      # (N, 30, 7): t, acc xyz, gyr xyz
    labels: np.ndarray   # (N,)
    train_mask: np.ndarray

    def traces(self):
        for arr in self.raw:
            yield Trace(tuple(ImuSample(*map(float, r)) for r in arr), DEFAULT_RATE_HZ)


@dataclass
class CsiDataset:
    raw: np.ndarray      # (N, 30, 212) float32, raw CSI column layout
    labels: np.ndarray   # 0 static, 1 motion
    train_mask: np.ndarray

    def frames(self, i: int):
        return [CsiFrame.from_raw_row(j / DEFAULT_RATE_HZ, row) for j, row in enumerate(self.raw[i])]


def _resolve_counts(counts) -> dict:
    if counts in (None, "table1"):
        return dict(TABLE1_COUNTS)
    out = {ActionClass(k): int(v) for k, v in dict(counts).items()}
    if any(v < 1 for v in out.values()):
        raise DataError("class counts must be >= 1")
    return out


def gen_imu_dataset(counts=None, seed: int = 0, train_fraction: float = 0.7) -> ImuDataset:
    counts = _resolve_counts(counts)
    raw, labels = [], []
    for cls in CLASS_ORDER:
        for i in range(counts.get(cls, 0)):
            trace, label = gen_imu(cls, (seed, cls.index, i))
            raw.append([(s.t, *s.acc, *s.gyr) for s in trace])
            labels.append(label)
    labels = np.array(labels, dtype=np.int64)
    return ImuDataset(np.array(raw, dtype=np.float64), labels,
                      stratified_split(labels, train_fraction, seed))


def gen_csi_dataset(counts=None, seed: int = 0, train_fraction: float = 0.7,
                    max_onset: int = 15) -> CsiDataset:
    """Static and motion windows. Motion windows start their activity at a random frame <= max_onset."""
    counts = dict(CSI_COUNTS if counts is None else counts)
    raw, labels = [], []
    for name in ("static", "motion"):
        label = CSI_LABELS[name]
        for i in range(int(counts.get(name, 0))):
            rng = _rng((seed, 100 + label, i))
            onset = int(rng.integers(0, max_onset + 1)) if label else 0
            trace = gen_csi(bool(label), (seed, 100 + label, i, 1), onset=onset)
            raw.append([f.raw_row() for f in trace])
            labels.append(label)
    labels = np.array(labels, dtype=np.int64)
    return CsiDataset(np.array(raw, dtype=np.float32), labels,
                      stratified_split(labels, train_fraction, seed + 1))


def gen_dataset(counts=None, seed: int = 0, csi_counts=None, train_fraction: float = 0.7):
    return (gen_imu_dataset(counts, seed, train_fraction),
            gen_csi_dataset(csi_counts, seed, train_fraction))


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class ScenarioSegment:
    action: str           # an ActionClass value, or "toss" for a phone tossed onto a cushion
    duration: float
    csi: str = "active"   # "active" | "static" | "until_impact"


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    segments: tuple
    seed: int = 0
    expected: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(s.duration <= 0 for s in self.segments):
            raise DataError("segment durations must be positive")


SCENARIOS = ("fall-static", "fall-recover", "throw", "daily")


def scenario_spec(name: str, seed: int) -> ScenarioSpec:
    """Labelled scenario timelines.

    fall-static   walk, fall, lie still (room static)          -> one EMERGENCY
    fall-recover  walk, fall, brief stillness, get up and walk  -> REMINDER
    throw         walk, phone tossed onto a sofa, phone still but
                  the person keeps moving                       -> MISJUDGMENT
    daily         ordinary activities only                      -> no alerts
    """
    rng = _rng((seed, 7777))
    walk = ScenarioSegment("walk", round(rng.uniform(3.0, 5.0), 1))
    impact = ScenarioSegment("fall", 1.5, "until_impact")
    if name == "fall-static":
        segs = (walk, impact, ScenarioSegment("static", 8.0, "static"))
        expected = {"EMERGENCY": 1, "REMINDER": 0, "MISJUDGMENT": 0}
    elif name == "fall-recover":
        still = round(rng.uniform(2.0, 2.5), 1)
        segs = (walk, impact, ScenarioSegment("static", still, "static"),
                ScenarioSegment("getup", 1.5), ScenarioSegment("walk", 6.0))
        expected = {"EMERGENCY": 0, "REMINDER": 1, "MISJUDGMENT": 0}
    elif name == "throw":
        segs = (walk, ScenarioSegment("toss", 1.5),
                ScenarioSegment("static", 8.0, "active"))
        expected = {"EMERGENCY": 0, "REMINDER": 0, "MISJUDGMENT": 1}
    elif name == "daily":
        parts = []
        for _ in range(int(rng.integers(4, 7))):
            cls = DAILY_CLASSES[int(rng.integers(len(DAILY_CLASSES)))]
            parts.append(ScenarioSegment(cls.value, round(rng.uniform(3.0, 6.0), 1),
                                         "static" if cls is ActionClass.STATIC else "active"))
        segs = tuple(parts)
        expected = {"EMERGENCY": 0, "REMINDER": 0, "MISJUDGMENT": 0}
    else:
        raise DataError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
    return ScenarioSpec(name, segs, seed, expected)


def _segment_profile(seg: ScenarioSegment, tt: np.ndarray, rng, rate) -> _Segment:
    if seg.action == "fall":
        return _impact_event(tt, rng, t_imp=tt[-1] - 0.2)
    if seg.action == "toss":
        return _throw_event(tt, rng, t_imp=tt[-1] - 0.2)
    if seg.action == "getup":
        lin, gyr = _pulses(tt, rng, [(0.7, 1.0, rng.uniform(3.0, 5.0))], rng.uniform(1.0, 2.0))
        return _Segment(lin, gyr, np.zeros(len(tt)))
    return _template(ActionClass(seg.action), tt, rng, rate=rate)


def gen_scenario(spec: ScenarioSpec, rate: float = DEFAULT_RATE_HZ):
    """Render a scenario into time-aligned (IMU trace, CSI trace, impact time or None)."""
    rng = _rng((spec.seed, 4242))
    segments, masks = [], []
    impact_time = None
    offset = 0
    for seg in spec.segments:
        n = int(round(seg.duration * rate))
        tt = np.arange(n) / rate
        prof = _segment_profile(seg, tt, rng, rate)
        segments.append(prof)
        if seg.csi == "static":
            mask = np.zeros(n, dtype=bool)
        elif seg.csi == "until_impact":
            mask = tt < (prof.impact if prof.impact is not None else seg.duration)
        else:
            mask = np.ones(n, dtype=bool)
        if prof.impact is not None and impact_time is None:
            impact_time = (offset + int(round(prof.impact * rate))) / rate
        masks.append(mask)
        offset += n
    imu = _render_imu(segments, rng, rate)
    csi = _render_csi(np.concatenate(masks), rng, rate)
    return imu, csi, impact_time
