"""Deterministic signal processing for force/torque streams.

Covers the two consumer layouts: causal fixed-rate windows for a
convolutional encoder, and per-channel short-time Fourier magnitude
spectrograms. The default spectrogram knobs (one-second window resampled
to 496 samples, 32-sample Hann frames, hop 16) yield a 6 x 30 x 17
tensor; they are shape-derived defaults, all configurable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .episode_io import WrenchTrack
from .errors import InsufficientData


def resample_wrench(track: WrenchTrack, target_rate: float,
                    t_start: float | None = None, t_end: float | None = None) -> WrenchTrack:
    """Uniform-rate resampling via per-component linear interpolation.

    The output covers [t_start, t_end] (track extent by default) with
    round(duration * target_rate) samples.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be > 0, got {target_rate}")
    t0 = float(track.t[0]) if t_start is None else float(t_start)
    t1 = float(track.t[-1]) if t_end is None else float(t_end)
    if t0 < track.t[0] - 1e-12 or t1 > track.t[-1] + 1e-12:
        raise InsufficientData(
            f"track [{track.t[0]}, {track.t[-1]}] does not cover [{t0}, {t1}]"
        )
    duration = t1 - t0
    count = int(round(duration * target_rate))
    if count < 1:
        raise InsufficientData(f"interval [{t0}, {t1}] too short at {target_rate} Hz")
    times = t0 + np.arange(count) / target_rate
    out = np.column_stack([np.interp(times, track.t, track.wrench[:, k]) for k in range(6)])
    return WrenchTrack(times, out)


def causal_window(track: WrenchTrack, t_now: float, frames: int = 32,
                  rate: float = 250.0) -> np.ndarray:
    """Last `frames` uniformly spaced samples ending at t_now, shape (frames, 6).

    Strictly causal: no sample time exceeds t_now, and samples after t_now
    in the source track cannot influence the result.
    """
    span = (frames - 1) / rate
    t0 = t_now - span
    if t0 < track.t[0] - 1e-12 or t_now > track.t[-1] + 1e-12:
        raise InsufficientData(
            f"track [{track.t[0]}, {track.t[-1]}] does not cover [{t0}, {t_now}]"
        )
    mask = track.t <= t_now + 1e-12
    t = track.t[mask]
    w = track.wrench[mask]
    times = t0 + np.arange(frames) / rate
    return np.column_stack([np.interp(times, t, w[:, k]) for k in range(6)])


@dataclass(frozen=True)
class SpectrogramConfig:
    """STFT knobs; defaults reproduce the 6 x 30 x 17 tensor shape."""

    window_seconds: float = 1.0
    samples: int = 496          # 32 + 29 * 16
    frame: int = 32
    hop: int = 16
    log_magnitude: bool = False

    @property
    def n_frames(self) -> int:
        return 1 + (self.samples - self.frame) // self.hop

    @property
    def n_bins(self) -> int:
        return self.frame // 2 + 1


@dataclass(frozen=True)
class SpectrogramTensor:
    """Magnitude spectrogram per wrench channel with axis metadata."""

    data: np.ndarray            # (6, n_frames, n_bins), nonnegative
    frame_times: np.ndarray     # (n_frames,) frame start times [s]
    freqs: np.ndarray           # (n_bins,) bin centers [Hz]
    config: SpectrogramConfig = field(default_factory=SpectrogramConfig)

    def __post_init__(self):
        if not np.isfinite(self.data).all() or (self.data < 0).any():
            raise ValueError("spectrogram magnitudes must be finite and nonnegative")


def _hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def spectrogram(track: WrenchTrack, t_now: float,
                config: SpectrogramConfig = SpectrogramConfig()) -> SpectrogramTensor:
    """Per-channel STFT magnitudes of the window_seconds ending at t_now.

    Each channel is resampled to config.samples points, cut into
    Hann-windowed frames of length config.frame every config.hop samples,
    and reduced to one-sided FFT magnitudes (bin 0 carries the windowed
    mean). With log_magnitude, magnitudes map through log1p.
    """
    t0 = t_now - config.window_seconds
    if t0 < track.t[0] - 1e-12 or t_now > track.t[-1] + 1e-12:
        raise InsufficientData(
            f"track [{track.t[0]}, {track.t[-1]}] does not cover [{t0}, {t_now}]"
        )
    eff_rate = config.samples / config.window_seconds
    times = t0 + np.arange(config.samples) / eff_rate
    signal = np.column_stack([np.interp(times, track.t, track.wrench[:, k]) for k in range(6)])

    win = _hann_periodic(config.frame)
    n_frames, n_bins = config.n_frames, config.n_bins
    data = np.empty((6, n_frames, n_bins))
    frame_times = np.empty(n_frames)
    for j in range(n_frames):
        start = j * config.hop
        frame_times[j] = times[start]
        chunk = signal[start:start + config.frame] * win[:, None]
        data[:, j, :] = np.abs(np.fft.rfft(chunk, axis=0)).T
    if config.log_magnitude:
        data = np.log1p(data)
    freqs = np.arange(n_bins) * (eff_rate / config.frame)
    return SpectrogramTensor(data, frame_times, freqs, config)


def frame_parseval_residual(tensor: SpectrogramTensor, track: WrenchTrack,
                            t_now: float) -> np.ndarray:
    """Relative Parseval mismatch per (channel, frame); diagnostics for tests.

    One-sided magnitudes with doubling for the interior bins must carry
    frame_length times the windowed-signal energy.
    """
    cfg = tensor.config
    if cfg.log_magnitude:
        raise ValueError("Parseval check needs linear magnitudes")
    t0 = t_now - cfg.window_seconds
    eff_rate = cfg.samples / cfg.window_seconds
    times = t0 + np.arange(cfg.samples) / eff_rate
    signal = np.column_stack([np.interp(times, track.t, track.wrench[:, k]) for k in range(6)])
    win = _hann_periodic(cfg.frame)
    res = np.empty((6, cfg.n_frames))
    weights = np.full(cfg.n_bins, 2.0)
    weights[0] = 1.0
    if cfg.frame % 2 == 0:
        weights[-1] = 1.0
    for j in range(cfg.n_frames):
        chunk = signal[j * cfg.hop:j * cfg.hop + cfg.frame] * win[:, None]
        energy = cfg.frame * np.sum(chunk * chunk, axis=0)
        spectral = (tensor.data[:, j, :] ** 2) @ weights
        res[:, j] = np.abs(spectral - energy) / np.maximum(energy, 1e-30)
    return res
