"""Real-time two-stage decision engine.

Every ``step`` seconds a causal 3 s IMU window ending at the current sample
is classified and its fall/not-fall result pushed into a 20-slot vote
buffer. When at least ``vote_threshold`` slots vote fall, Stage I suspends
and Stage II looks at the next ``stage2_window`` seconds, starting at the
firing tick: the CSI rate-of-change tensor goes through the CNN, and the
phone's own linear-acceleration magnitude decides between a misjudgment and
a reminder when the room is active.

==========  =====================================================
alert       condition
==========  =====================================================
EMERGENCY   room static after the vote
REMINDER    room active and the phone moved afterwards
MISJUDGMENT room active but the phone stayed still (thrown phone)
NONE        no vote fired on this tick
==========  =====================================================

The firing verdict can only be issued once the Stage II window has been
observed, so it is emitted together with the suspended ticks that followed
it; the output stream stays chronological.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .csi_pipeline import CSI_WINDOW, DwtConfig, csi_tensor
from .errors import DataError, InsufficientOverlap, ShapeMismatch
from .imu_pipeline import (
    FilterConfig,
    GravityState,
    extract_features,
    gravity_update,
    magnitude3,
)
from .neural.cnn import CnnModel
from .neural.mlp import MlpModel
from .sensor_model import CsiFrame, ImuSample, Trace

BUFFER_CAPACITY = 20


class Alert(str, enum.Enum):
    NONE = "NONE"
    REMINDER = "REMINDER"
    EMERGENCY = "EMERGENCY"
    MISJUDGMENT = "MISJUDGMENT"


@dataclass(frozen=True)
class FusionConfig:
    step: float = 0.1
    window: float = 3.0
    vote_threshold: int = 3
    stage2_window: float = 3.0
    motion_class_index: int = 1
    fall_class_index: int = 0
    imu_quiet_threshold: float = 0.5
    buffer_capacity: int = BUFFER_CAPACITY
    filter: FilterConfig = field(default_factory=FilterConfig)
    dwt: DwtConfig = field(default_factory=DwtConfig)

    def __post_init__(self):
        if not 0 < self.step <= self.window:
            raise DataError("need 0 < step <= window")
        if not 1 <= self.vote_threshold <= self.buffer_capacity:
            raise DataError(f"vote_threshold must lie in [1, {self.buffer_capacity}]")
        if not self.stage2_window > 0:
            raise DataError("stage2_window must be positive")


class VoteBuffer:
    """FIFO of the most recent fall/not-fall decisions."""

    def __init__(self, capacity: int = BUFFER_CAPACITY, slots=()):
        self.capacity = capacity
        self.slots: deque[bool] = deque(maxlen=capacity)
        self._falls = 0
        for s in slots:
            self.push(s)

    def push(self, is_fall: bool) -> "VoteBuffer":
        if len(self.slots) == self.capacity:
            self._falls -= self.slots[0]
        self.slots.append(bool(is_fall))
        self._falls += bool(is_fall)
        return self

    @property
    def fill(self) -> int:
        return len(self.slots)

    @property
    def fall_count(self) -> int:
        return self._falls

    def clear(self):
        self.slots.clear()
        self._falls = 0

    def copy(self) -> "VoteBuffer":
        return VoteBuffer(self.capacity, self.slots)


def push_vote(buffer: VoteBuffer, is_fall: bool) -> VoteBuffer:
    """Functional push: returns a new buffer, ``buffer`` is left untouched."""
    return buffer.copy().push(is_fall)


def vote_fired(buffer: VoteBuffer, cfg: FusionConfig = FusionConfig()) -> bool:
    return buffer.fall_count >= cfg.vote_threshold


@dataclass(frozen=True)
class DetectionVerdict:
    t: float
    stage1_class: int
    stage1_probs: tuple
    votes: int
    vote_fired: bool = False
    stage2_motion: bool | None = None
    alert: Alert = Alert.NONE
    suspended: bool = False

    @property
    def p_fall(self) -> float:
        return self.stage1_probs[0]


def stage2_decide(tensor, cnn: CnnModel, post_imu, cfg: FusionConfig = FusionConfig()):
    """Return (room_motion, alert) for a CSI tensor and the post-vote IMU magnitudes."""
    tensor = np.asarray(tensor, dtype=np.float64)
    if tensor.shape != CnnModel.INPUT_SHAPE:
        raise ShapeMismatch(f"CSI tensor must be {CnnModel.INPUT_SHAPE}, got {tensor.shape}")
    post_imu = np.asarray(post_imu, dtype=np.float64)
    if post_imu.size == 0:
        raise ShapeMismatch("post-vote IMU window is empty")
    probs = cnn.forward(tensor)
    motion = int(np.argmax(probs)) == cfg.motion_class_index
    if not motion:
        return False, Alert.EMERGENCY
    if float(np.max(post_imu)) < cfg.imu_quiet_threshold:
        return True, Alert.MISJUDGMENT
    return True, Alert.REMINDER


class Stage1Stream:
    """Incremental gravity removal and magnitude windows for one IMU stream."""

    def __init__(self, n_window: int, cfg: FilterConfig = FilterConfig()):
        self.cfg = cfg
        self.state = GravityState()
        self.acc = deque(maxlen=n_window)
        self.gyr = deque(maxlen=n_window)
        self.n_window = n_window

    def push(self, s: ImuSample) -> float:
        """Consume one sample; return its linear-acceleration magnitude."""
        st = gravity_update(self.state, s, self.cfg)
        self.state = st
        lacc = magnitude3(s.acc_x - st.g_x, s.acc_y - st.g_y, s.acc_z - st.g_z)
        self.acc.append(lacc)
        self.gyr.append(magnitude3(s.gyr_x, s.gyr_y, s.gyr_z))
        return lacc

    @property
    def full(self) -> bool:
        return len(self.acc) == self.n_window

    def features(self) -> np.ndarray:
        return extract_features(np.fromiter(self.acc, float, self.n_window),
                                np.fromiter(self.gyr, float, self.n_window))


@dataclass
class _Pending:
    t_fire: float
    stage1_class: int
    stage1_probs: tuple
    votes: int
    post_imu: list = field(default_factory=list)
    held: list = field(default_factory=list)


class FusionSession:
    """Single-owner state machine for one person's streams.

    Feed samples in timestamp order with :meth:`push_csi` and
    :meth:`push_imu`; each call to ``push_imu`` returns the verdicts that
    became final.
    """

    def __init__(self, mlp: MlpModel, cnn: CnnModel, cfg: FusionConfig = FusionConfig(),
                 imu_rate: float = 10.0, csi_rate: float = 10.0):
        self.mlp = mlp
        self.cnn = cnn
        self.cfg = cfg
        self.imu_rate = imu_rate
        self.csi_rate = csi_rate
        self.n_window = int(round(cfg.window * imu_rate))
        self.stride = max(1, int(round(cfg.step * imu_rate)))
        self.n_post = int(round(cfg.stage2_window * imu_rate))
        self.n_csi = int(round(cfg.stage2_window * csi_rate))
        if self.n_csi != CSI_WINDOW:
            raise DataError(f"stage-2 window must span {CSI_WINDOW} CSI frames, got {self.n_csi}")
        self.stream = Stage1Stream(self.n_window, cfg.filter)
        self.buffer = VoteBuffer(cfg.buffer_capacity)
        self.csi: deque[CsiFrame] = deque(maxlen=4 * CSI_WINDOW)
        self.pending: _Pending | None = None
        self.n_seen = 0
        self.stage2_runs = 0

    def push_csi(self, frame: CsiFrame):
        self.csi.append(frame)

    def _classify(self):
        probs = self.mlp.forward(self.stream.features())
        return int(np.argmax(probs)), tuple(float(p) for p in probs)

    def push_imu(self, sample: ImuSample) -> list[DetectionVerdict]:
        lacc = self.stream.push(sample)
        self.n_seen += 1
        is_tick = self.stream.full and (self.n_seen - self.n_window) % self.stride == 0
        pending = self.pending
        if pending is not None:
            if len(pending.post_imu) < self.n_post:
                pending.post_imu.append(lacc)
            if is_tick:
                cls, probs = self._classify()
                pending.held.append(DetectionVerdict(sample.t, cls, probs, self.buffer.fall_count,
                                                     suspended=True))
            return self._try_finish()
        if not is_tick:
            return []
        cls, probs = self._classify()
        self.buffer.push(cls == self.cfg.fall_class_index)
        votes = self.buffer.fall_count
        if vote_fired(self.buffer, self.cfg):
            self.pending = _Pending(sample.t, cls, probs, votes, [lacc])
            return self._try_finish()
        return [DetectionVerdict(sample.t, cls, probs, votes)]

    def _stage2_frames(self, t_fire: float):
        half = 0.5 / self.csi_rate
        frames = [f for f in self.csi if f.t >= t_fire - half]
        return frames[:self.n_csi] if len(frames) >= self.n_csi else None

    def _try_finish(self) -> list[DetectionVerdict]:
        p = self.pending
        if p is None or len(p.post_imu) < self.n_post:
            return []
        frames = self._stage2_frames(p.t_fire)
        if frames is None:
            return []
        tensor = csi_tensor(frames, self.cfg.dwt)
        motion, alert = stage2_decide(tensor, self.cnn, p.post_imu, self.cfg)
        self.stage2_runs += 1
        fired = DetectionVerdict(p.t_fire, p.stage1_class, p.stage1_probs, p.votes,
                                 True, motion, alert)
        self.pending = None
        self.buffer.clear()
        return [fired, *p.held]

    def close(self):
        if self.pending is not None:
            raise InsufficientOverlap(
                f"stream ended before the stage-2 window after t={self.pending.t_fire} was observed"
            )


def run_session(imu: Trace, csi: Trace, mlp: MlpModel, cnn: CnnModel,
                cfg: FusionConfig = FusionConfig()) -> list[DetectionVerdict]:
    """Replay two recorded traces through a fresh :class:`FusionSession`."""
    if len(imu) == 0 or len(csi) == 0:
        raise InsufficientOverlap("both traces must be non-empty")
    overlap = min(imu.end, csi.end) - max(imu.start, csi.start)
    if overlap < cfg.window - 1.0 / imu.nominal_rate:
        raise InsufficientOverlap(f"IMU and CSI traces overlap by only {overlap:.3f} s")
    session = FusionSession(mlp, cnn, cfg, imu.nominal_rate, csi.nominal_rate)
    verdicts: list[DetectionVerdict] = []
    # CSI first on equal timestamps so a tick sees the frame recorded with it
    events = heapq.merge(((f.t, 0, f) for f in csi), ((s.t, 1, s) for s in imu),
                         key=lambda e: (e[0], e[1]))
    for _, kind, item in events:
        if kind == 0:
            session.push_csi(item)
        else:
            verdicts.extend(session.push_imu(item))
    session.close()
    return verdicts


def summarize(verdicts) -> dict[str, int]:
    counts = {a.value: 0 for a in Alert if a is not Alert.NONE}
    for v in verdicts:
        if v.alert is not Alert.NONE:
            counts[v.alert.value] += 1
    counts["vote_fired"] = sum(v.vote_fired for v in verdicts)
    counts["ticks"] = len(verdicts)
    return counts
