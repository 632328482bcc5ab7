"""Channel selection and separation quality for meeting audio.

Two independent tools:

* Envelope-variance channel ranking: score each channel by the variance
  of its mel-band magnitude envelopes (mean-normalized per band,
  cube-root compressed).  Channels dominated by noise or reverberation
  have flatter envelopes and score lower; :func:`ev_select` keeps the
  top 80 percent by default.
* Projection SDR: signal-to-distortion ratio of an estimate against the
  least-squares projection of the reference through an FIR filter
  (default 4096 taps), maximized over nine coarse alignment offsets so
  bulk delays of several thousand samples do not mask the score.  Each
  offset trims both signals to their overlapping span before the fit,
  so a pure delay on the offset grid scores the same as an exact copy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft
from scipy.io import wavfile
from scipy.linalg import solve_toeplitz
from scipy.signal import fftconvolve

__all__ = [
    "AudioBuffer",
    "SdrConfig",
    "SdrStats",
    "read_wav",
    "ev_rank",
    "ev_select",
    "projection_sdr",
    "channel_sdr_sweep",
    "utterance_sdr_stats",
]


@dataclass(frozen=True)
class AudioBuffer:
    """Multichannel audio: shape (channels, samples), float64 in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[np.newaxis, :]
        if samples.ndim != 2:
            raise ValueError(f"samples must be 1-D or 2-D, got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate


_PCM_SCALES = {
    np.dtype(np.int16): 2.0 ** 15,
    np.dtype(np.int32): 2.0 ** 31,
}


def read_wav(path) -> AudioBuffer:
    """Load a WAV file; integer PCM is scaled to [-1, 1]."""
    rate, data = wavfile.read(path)
    if data.ndim == 2:
        data = data.T  # wavfile gives (samples, channels)
    if data.dtype in _PCM_SCALES:
        samples = data.astype(np.float64) / _PCM_SCALES[data.dtype]
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        samples = data.astype(np.float64)
    return AudioBuffer(samples, int(rate))


def _mel_filterbank(n_bands: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filterbank, (n_bands, n_fft // 2 + 1)."""

    def to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)

    def from_mel(m):
        return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)

    n_bins = n_fft // 2 + 1
    freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    edges = from_mel(np.linspace(to_mel(0.0), to_mel(sample_rate / 2.0), n_bands + 2))
    bank = np.zeros((n_bands, n_bins), dtype=np.float64)
    for b in range(n_bands):
        lo, mid, hi = edges[b], edges[b + 1], edges[b + 2]
        rising = (freqs - lo) / max(mid - lo, 1e-12)
        falling = (hi - freqs) / max(hi - mid, 1e-12)
        bank[b] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def _frame(signal: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    if signal.shape[0] < frame_len:
        raise ValueError("signal shorter than one analysis frame")
    n_frames = 1 + (signal.shape[0] - frame_len) // hop
    view = np.lib.stride_tricks.sliding_window_view(signal, frame_len)[::hop]
    return view[:n_frames]


def ev_rank(
    audio: AudioBuffer,
    *,
    frame_seconds: float = 0.025,
    hop_seconds: float = 0.010,
    n_bands: int = 40,
    compression: float = 1.0 / 3.0,
) -> list[tuple[int, float]]:
    """Rank channels by mel envelope variance, best first.

    Returns (channel index, score) pairs sorted by descending score, ties
    broken by channel index.  A silent channel scores exactly 0 and sorts
    last.  Requires at least one second of audio.
    """
    if audio.duration < 1.0:
        raise ValueError("envelope-variance ranking needs at least 1 s of audio")
    frame_len = int(round(frame_seconds * audio.sample_rate))
    hop = max(1, int(round(hop_seconds * audio.sample_rate)))
    window = np.hanning(frame_len)
    bank = _mel_filterbank(n_bands, frame_len, audio.sample_rate)
    scores: list[tuple[int, float]] = []
    for channel in range(audio.n_channels):
        signal = audio.samples[channel]
        if not np.any(signal):
            scores.append((channel, 0.0))
            continue
        frames = _frame(signal, frame_len, hop) * window
        magnitude = np.abs(np.fft.rfft(frames, axis=1))
        envelope = bank @ magnitude.T  # (bands, frames)
        band_mean = envelope.mean(axis=1, keepdims=True)
        normalized = np.divide(
            envelope, band_mean, out=np.zeros_like(envelope), where=band_mean > 0
        )
        compressed = normalized ** compression
        scores.append((channel, float(np.mean(np.var(compressed, axis=1)))))
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores


def ev_select(audio: AudioBuffer, retain: float = 0.8) -> list[int]:
    """Indices of the top ``ceil(retain * n_channels)`` channels, best first."""
    if not 0 < retain <= 1:
        raise ValueError(f"retain must be in (0, 1], got {retain}")
    keep = int(np.ceil(retain * audio.n_channels))
    return [channel for channel, _ in ev_rank(audio)[:keep]]


@dataclass(frozen=True)
class SdrConfig:
    filter_taps: int = 4096
    offsets: tuple[int, ...] = (-8192, -6144, -4096, -2048, 0, 2048, 4096, 6144, 8192)
    cap_db: float = 60.0
    diagonal_load: float = 1e-10

    def __post_init__(self) -> None:
        if self.filter_taps < 1:
            raise ValueError("filter_taps must be >= 1")
        if not self.offsets:
            raise ValueError("offsets must be non-empty")


@dataclass(frozen=True)
class SdrStats:
    minimum: float
    maximum: float
    mean: float


def _slice_bounds(
    n_est: int, n_ref: int, offset: int, taps: int
) -> tuple[int, int] | None:
    """Overlap window ``[a, b)`` of the estimate for one alignment offset.

    The shifted reference ``ref[t + offset]`` exists for
    ``t in [-offset, n_ref - offset)``; the window is that range
    intersected with the estimate's support, and must hold at least
    ``taps`` samples for the filter fit to be determined.
    """
    a = max(0, -offset)
    b = min(n_est, n_ref - offset)
    if b - a < taps:
        return None
    return a, b


def _sdr_from_energies(projected: float, est_energy: float, cap_db: float) -> float:
    if projected <= 0:
        return -cap_db
    residual = est_energy - projected
    if residual <= 0 or projected / residual >= 10 ** (cap_db / 10):
        return cap_db
    return max(float(10.0 * np.log10(projected / residual)), -cap_db)


def _solve_loaded(
    gram_col: np.ndarray, rhs: np.ndarray, diagonal_load: float
) -> np.ndarray:
    col = gram_col.copy()
    col[0] *= 1.0 + diagonal_load
    try:
        return solve_toeplitz(col, rhs)
    except np.linalg.LinAlgError:
        # near-singular window; a stronger zero-lag load keeps the
        # Levinson recursion stable at negligible cost in accuracy
        col[0] = gram_col[0] * (1.0 + 1e-6)
        return solve_toeplitz(col, rhs)


def _check_sdr_lengths(n_ref: int, n_est: int, config: SdrConfig) -> None:
    if n_ref < config.filter_taps:
        raise ValueError(
            f"reference has {n_ref} samples, fewer than "
            f"filter_taps={config.filter_taps}"
        )
    if n_est < config.filter_taps:
        raise ValueError(
            f"estimate has {n_est} samples, fewer than "
            f"filter_taps={config.filter_taps}"
        )


def _aligned_sdr(est_o: np.ndarray, ref_o: np.ndarray, config: SdrConfig) -> float:
    """SDR of one overlap-aligned pair; both slices are >= taps long."""
    taps = config.filter_taps
    centre = ref_o.shape[0] - 1
    gram_col = fftconvolve(ref_o, ref_o[::-1])[centre:centre + taps]
    if gram_col[0] <= 0:
        return -config.cap_db
    rhs = fftconvolve(est_o, ref_o[::-1])[centre:centre + taps]
    weights = _solve_loaded(gram_col, rhs, config.diagonal_load)
    projected = float(weights @ rhs)
    return _sdr_from_energies(projected, float(est_o @ est_o), config.cap_db)


def projection_sdr(
    reference: np.ndarray, estimate: np.ndarray, config: SdrConfig = SdrConfig()
) -> float:
    """Best projection SDR of ``estimate`` against ``reference`` in dB.

    Each offset ``o`` aligns the pair on the overlapping span of the
    estimate and the shifted reference ``ref[t + o]`` (an estimate
    delayed by 2048 samples aligns at offset -2048).  Both signals are
    trimmed to that span and an FIR filter of ``filter_taps`` taps is
    fit by exact least squares through Toeplitz normal equations on the
    trimmed pair; trimming rather than zero-padding means a pure bulk
    delay on the offset grid scores the same as an exact copy.  The
    best offset's SDR is returned, capped at ``+cap_db`` and floored
    at ``-cap_db``.
    """
    ref = np.asarray(reference, dtype=np.float64).ravel()
    est = np.asarray(estimate, dtype=np.float64).ravel()
    _check_sdr_lengths(ref.shape[0], est.shape[0], config)
    if not np.any(ref):
        raise ValueError("reference is silent")
    if not np.any(est):
        raise ValueError("estimate is silent")
    best: float | None = None
    for offset in config.offsets:
        bounds = _slice_bounds(est.shape[0], ref.shape[0], offset, config.filter_taps)
        if bounds is None:
            continue
        a, b = bounds
        sdr = _aligned_sdr(est[a:b], ref[a + offset:b + offset], config)
        best = sdr if best is None else max(best, sdr)
    if best is None:
        raise ValueError("no offset leaves an overlap of filter_taps samples")
    return best


def _gram_head_correction(ref: np.ndarray, p: int, taps: int) -> np.ndarray:
    """``sum_{x < p} ref[x] ref[x + d]`` for lags ``d in [0, taps)``."""
    reach = ref[:min(p + taps - 1, ref.shape[0])]
    conv = fftconvolve(reach, ref[:p][::-1])
    return conv[p - 1:p - 1 + taps]


def _gram_tail_correction(ref: np.ndarray, q: int, taps: int) -> np.ndarray:
    """``sum_{y >= q} ref[y] ref[y - d]`` for lags ``d in [0, taps)``."""
    context = ref[max(0, q - taps + 1):]
    conv = fftconvolve(ref[q:], context[::-1])
    base = ref.shape[0] - 1 - q
    return conv[base:base + taps]


def _rhs_head_correction(
    channel: np.ndarray, ref: np.ndarray, offset: int, taps: int
) -> np.ndarray:
    """``sum_{t < tau} est[t] ref[t + offset - tau]`` for ``tau in [1, taps)``."""
    conv = fftconvolve(channel[:taps], ref[:offset][::-1])
    return conv[:taps - 1]


def _rhs_tail_correction(
    channel: np.ndarray, ref: np.ndarray, b: int, taps: int
) -> np.ndarray:
    """``sum_{t >= b} est[t] ref[t + offset - tau]`` for ``tau in [1, taps)``.

    Only called when the window is cut short by the reference's end,
    where ``b + offset == len(ref)`` makes the sum offset-independent.
    """
    est_tail = channel[b:min(channel.shape[0], b + taps - 1)]
    ref_tail = ref[ref.shape[0] - (taps - 1):]
    conv = fftconvolve(est_tail, ref_tail[::-1])
    return conv[:taps - 1]


class _SweepPlan:
    """Per-reference work shared by every channel of an SDR sweep.

    Holds the padded reference spectrum and, per offset, the overlap
    window and the Gram column of the trimmed reference.  Trimmed-window
    Gram columns and right-hand sides are derived from full-length
    correlations plus short edge corrections, so each channel costs two
    long FFTs instead of two per offset.
    """

    def __init__(self, ref: np.ndarray, n_est: int, config: SdrConfig) -> None:
        _check_sdr_lengths(ref.shape[0], n_est, config)
        self.config = config
        self.ref = ref
        self.n_est = n_est
        taps = config.filter_taps
        n_ref = ref.shape[0]
        # large enough that every accessed correlation lag is linear,
        # not circularly aliased
        self.size = next_fast_len(max(n_est + n_ref + taps, 2 * n_ref))
        self.ref_spec = rfft(ref, self.size)
        autocorr = irfft(self.ref_spec * np.conj(self.ref_spec), self.size)
        self.windows = [
            _slice_bounds(n_est, n_ref, offset, taps) for offset in config.offsets
        ]
        self.grams: list[np.ndarray | None] = []
        for offset, bounds in zip(config.offsets, self.windows):
            if bounds is None:
                self.grams.append(None)
                continue
            a, b = bounds
            p, q = a + offset, b + offset
            col = autocorr[:taps].copy()
            if p > 0:
                col -= _gram_head_correction(ref, p, taps)
            if q < n_ref:
                col -= _gram_tail_correction(ref, q, taps)
            self.grams.append(col)

    def cross_correlation(self, channel: np.ndarray) -> np.ndarray:
        """Circular ``c[d] = sum_t est[t] ref[t + d]`` with lag d wrapped."""
        spec = rfft(channel, self.size)
        return irfft(np.conj(spec) * self.ref_spec, self.size)

    def rhs_column(self, channel: np.ndarray, cc: np.ndarray, k: int) -> np.ndarray:
        offset = self.config.offsets[k]
        taps = self.config.filter_taps
        rhs = cc[(offset - np.arange(taps)) % self.size]
        if taps > 1:
            if offset > 0:
                rhs[1:] -= _rhs_head_correction(channel, self.ref, offset, taps)
            a, b = self.windows[k]
            if b < self.n_est:
                rhs[1:] -= _rhs_tail_correction(channel, self.ref, b, taps)
        return rhs


def channel_sdr_sweep(
    reference: np.ndarray,
    estimates: np.ndarray | Iterable[np.ndarray],
    config: SdrConfig = SdrConfig(),
) -> list[float]:
    """Projection SDR of every estimate channel against one reference.

    Same convention and results as calling :func:`projection_sdr` once
    per channel, but the reference spectrum, per-offset Gram columns,
    and Toeplitz solves are shared, so long multichannel sweeps run in
    a fraction of the per-pair time.  ``estimates`` is a
    ``(channels, samples)`` array or an iterable of equal-length 1-D
    channel arrays; an iterable is consumed lazily, holding one
    channel's spectra in memory at a time.
    """
    ref = np.asarray(reference, dtype=np.float64).ravel()
    if not np.any(ref):
        raise ValueError("reference is silent")
    channel_iter: Iterator[np.ndarray]
    if isinstance(estimates, np.ndarray):
        if estimates.ndim > 2:
            raise ValueError("estimates must be at most 2-D")
        channel_iter = iter(np.atleast_2d(estimates))
    else:
        channel_iter = iter(estimates)

    plan: _SweepPlan | None = None
    rhs_by_offset: list[list[np.ndarray]] = []
    energies: list[list[float]] = []
    for index, raw in enumerate(channel_iter):
        channel = np.asarray(raw, dtype=np.float64).ravel()
        if plan is None:
            plan = _SweepPlan(ref, channel.shape[0], config)
            rhs_by_offset = [[] for _ in config.offsets]
        elif channel.shape[0] != plan.n_est:
            raise ValueError(
                f"channel {index} has {channel.shape[0]} samples, "
                f"expected {plan.n_est}"
            )
        if not np.any(channel):
            raise ValueError(f"estimate channel {index} is silent")
        cc = plan.cross_correlation(channel)
        row: list[float] = []
        for k, bounds in enumerate(plan.windows):
            if bounds is None:
                row.append(0.0)
                continue
            a, b = bounds
            rhs_by_offset[k].append(plan.rhs_column(channel, cc, k))
            row.append(float(channel[a:b] @ channel[a:b]))
        energies.append(row)
    if plan is None:
        raise ValueError("no estimate channels")
    if all(bounds is None for bounds in plan.windows):
        raise ValueError("no offset leaves an overlap of filter_taps samples")

    n_channels = len(energies)
    best = [-config.cap_db] * n_channels
    seen = [False] * n_channels
    for k, bounds in enumerate(plan.windows):
        if bounds is None:
            continue
        gram_col = plan.grams[k]
        assert gram_col is not None
        if gram_col[0] <= 0:
            # silent reference window: nothing to project onto
            candidates = [-config.cap_db] * n_channels
        else:
            rhs = np.stack(rhs_by_offset[k], axis=1)
            weights = _solve_loaded(gram_col, rhs, config.diagonal_load)
            projected = np.einsum("ij,ij->j", weights, rhs)
            candidates = [
                _sdr_from_energies(float(projected[ch]), energies[ch][k], config.cap_db)
                for ch in range(n_channels)
            ]
        for ch in range(n_channels):
            best[ch] = candidates[ch] if not seen[ch] else max(best[ch], candidates[ch])
            seen[ch] = True
    return best


def utterance_sdr_stats(values: Iterable[float]) -> SdrStats:
    """Min / max / mean over per-utterance or per-channel SDR values."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no SDR values to aggregate")
    return SdrStats(float(arr.min()), float(arr.max()), float(arr.mean()))
