"""Stage-II preprocessing: CSI amplitude/phase, wavelet denoising and the rate-of-change tensor.

Amplitude columns are flattened antenna-major (antenna 0 subcarriers 0..52,
then antenna 1). Each column is denoised independently with a Daubechies-4
transform at two levels, symmetric boundary extension and a soft universal
threshold, then first-differenced per sample (not per second).

Phase and Doppler helpers are diagnostics only; the classifier consumes
amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pywt

from .errors import DataError, ShapeMismatch, SignalTooShort
from .sensor_model import N_CHANNELS, CsiFrame, CsiGeometry

CSI_WINDOW = 30
TENSOR_ROWS = CSI_WINDOW - 1
MAD_SCALE = 0.6745
MOTION_STAT_BOUNDARY = 50.0


@dataclass(frozen=True)
class DwtConfig:
    wavelet: str = "db4"
    levels: int = 2
    threshold_rule: str = "universal-soft"

    def __post_init__(self):
        if self.levels < 1:
            raise DataError("DWT levels must be >= 1")
        if self.threshold_rule != "universal-soft":
            raise DataError(f"unsupported threshold rule {self.threshold_rule!r}")
        pywt.Wavelet(self.wavelet)  # raises on unknown names


@dataclass(frozen=True)
class DopplerParams:
    v: float
    theta: float
    geometry: CsiGeometry = field(default_factory=CsiGeometry)

    def __post_init__(self):
        if self.v < 0:
            raise DataError("relative speed must be non-negative")


def amplitude(frame: CsiFrame) -> np.ndarray:
    return np.hypot(frame.re, frame.im).ravel()


def phase(frame: CsiFrame) -> np.ndarray:
    # arctan2(0, 0) is 0 and arctan2 never returns -pi for im == +0.0;
    # fold a signed-zero -pi onto +pi to keep the range (-pi, pi].
    ph = np.arctan2(frame.im, frame.re).ravel()
    ph[ph == -math.pi] = math.pi
    return ph


def amplitude_matrix(frames) -> np.ndarray:
    return np.stack([amplitude(f) for f in frames])


def _dwt_threshold(coeffs: list[np.ndarray], n: int) -> np.ndarray:
    """Universal threshold per column from the finest detail band."""
    finest = coeffs[-1]
    sigma = np.median(np.abs(finest), axis=0) / MAD_SCALE
    return sigma * math.sqrt(2.0 * math.log(n))


def dwt_denoise(series, cfg: DwtConfig = DwtConfig(), threshold=None) -> np.ndarray:
    """Soft-threshold wavelet denoising along axis 0.

    ``series`` is a 1-D signal or a (time, columns) matrix whose columns are
    processed independently. ``threshold`` overrides the universal rule
    (scalar or one value per column); pass 0 for a plain round trip.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim not in (1, 2):
        raise ShapeMismatch(f"expected a 1-D or 2-D signal, got {x.ndim}-D")
    if not np.all(np.isfinite(x)):
        raise DataError("signal contains non-finite values")
    n = x.shape[0]
    if n < 2 ** cfg.levels:
        raise SignalTooShort(f"{n} samples cannot support {cfg.levels} DWT levels")
    coeffs = pywt.wavedec(x, cfg.wavelet, mode="symmetric", level=cfg.levels, axis=0)
    lam = _dwt_threshold(coeffs, n) if threshold is None else np.asarray(threshold, dtype=np.float64)
    den = [coeffs[0]]
    for d in coeffs[1:]:
        den.append(np.sign(d) * np.maximum(np.abs(d) - lam, 0.0))
    out = pywt.waverec(den, cfg.wavelet, mode="symmetric", axis=0)[:n]
    # a constant column is a fixed point; skip the transform's rounding residue
    flat = np.ptp(x, axis=0) == 0
    if x.ndim == 1:
        return x.copy() if flat else out
    out[:, flat] = x[:, flat]
    return out


def rate_of_change(amp, cfg: DwtConfig = DwtConfig()) -> np.ndarray:
    """Denoise each amplitude column, then take per-sample first differences (30x106 -> 29x106)."""
    a = np.asarray(amp, dtype=np.float64)
    if a.shape != (CSI_WINDOW, N_CHANNELS):
        raise ShapeMismatch(f"amplitude matrix must be {(CSI_WINDOW, N_CHANNELS)}, got {a.shape}")
    if np.any(a < 0):
        raise DataError("amplitudes must be non-negative")
    return np.diff(dwt_denoise(a, cfg), axis=0)


def csi_tensor(frames, cfg: DwtConfig = DwtConfig()) -> np.ndarray:
    """Rate-of-change tensor from 30 consecutive frames (a list or a Trace)."""
    frames = list(frames)
    if len(frames) != CSI_WINDOW:
        raise ShapeMismatch(f"need {CSI_WINDOW} CSI frames, got {len(frames)}")
    return rate_of_change(amplitude_matrix(frames), cfg)


def motion_statistic(tensor) -> float:
    """Max absolute denoised rate of change; static scenes stay below ~50."""
    return float(np.max(np.abs(tensor)))


def doppler_shift(p: DopplerParams) -> float:
    g = p.geometry
    return p.v / g.speed_of_light * g.carrier_frequency * math.cos(p.theta)


def doppler_phase_shift(delta_f: float, geometry: CsiGeometry = CsiGeometry()) -> float:
    return 2.0 * math.pi * delta_f * geometry.symbol_duration / geometry.n_subcarriers
