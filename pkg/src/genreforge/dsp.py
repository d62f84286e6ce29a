"""Framing, windowing, spectra, mel filterbank and DCT-II.

Every function works on the last axis, so a single frame (1-D) and a stack of
frames (``(n_frames, W)``) go through the same code path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from genreforge.errors import DegenerateFilter, SignalTooShort


def seconds_to_samples(seconds: float, sample_rate: int) -> int:
    # round half up, not numpy's round-half-even
    return int(math.floor(seconds * sample_rate + 0.5))


def frame_signal(samples, sample_rate: int, window_s: float, step_s: float) -> np.ndarray:
    """Cut ``samples`` into frames of ``round(window_s*sr)`` samples taken every
    ``round(step_s*sr)`` samples.  Frames running past the end are dropped.

    Returns an array of shape ``(n_frames, W)``.
    """
    if not 0 < step_s <= window_s:
        raise ValueError(f"need 0 < step_s <= window_s, got step={step_s}, window={window_s}")
    samples = np.asarray(samples, dtype=np.float64)
    win = seconds_to_samples(window_s, sample_rate)
    step = max(1, seconds_to_samples(step_s, sample_rate))
    if win < 1 or len(samples) < win:
        raise SignalTooShort(f"{len(samples)} samples is shorter than one {win}-sample window")
    return np.lib.stride_tricks.sliding_window_view(samples, win)[::step].copy()


def hamming_window(length: int) -> np.ndarray:
    if length == 1:
        return np.ones(1)
    n = np.arange(length)
    w = 0.54 - 0.46 * np.cos(2 * np.pi * n / (length - 1))
    # exact symmetry regardless of cos rounding
    return (w + w[::-1]) / 2.0


def hamming(frames) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    return frames * hamming_window(frames.shape[-1])


def fft_length(window: int) -> int:
    """Next power of two >= ``window``; fixed per run so bin spacing is too."""
    return 1 << max(0, (window - 1).bit_length())


def magnitude_spectrum(frames, n_fft: int | None = None) -> np.ndarray:
    """``|DFT|`` of (already windowed) frames, bins ``0 .. n_fft//2 - 1``.

    Frames are zero-padded to ``n_fft`` (default: next power of two), so bin
    ``k`` sits at ``k * sample_rate / n_fft`` Hz.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if n_fft is None:
        n_fft = fft_length(frames.shape[-1])
    spec = np.abs(np.fft.rfft(frames, n=n_fft, axis=-1))
    return spec[..., : n_fft // 2]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray       # (n_filters, n_bins)
    centers_hz: np.ndarray    # (n_filters,)

    @property
    def n_bins(self) -> int:
        return self.weights.shape[1]


def mel_filterbank(n_filters: int, n_bins: int, sample_rate: int) -> MelFilterbank:
    """Triangular filters with centers evenly spaced in mel between 0 Hz and
    Nyquist.  Filter ``i`` rises from center ``i-1`` to center ``i`` and falls
    to center ``i+1`` (the outer edges are 0 Hz and Nyquist).

    ``n_bins`` spectrum bins are assumed to cover ``[0, sr/2)`` uniformly.
    """
    if n_filters < 1 or n_bins < n_filters:
        raise ValueError(f"need 1 <= n_filters <= n_bins, got {n_filters}, {n_bins}")
    nyquist = sample_rate / 2.0
    bin_hz = nyquist / n_bins
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(nyquist), n_filters + 2))
    centers = edges[1:-1]

    center_bins = np.round(centers / bin_hz).astype(int)
    if np.any(np.diff(center_bins) == 0):
        i = int(np.flatnonzero(np.diff(center_bins) == 0)[0])
        raise DegenerateFilter(
            f"filters {i} and {i + 1} both center on bin {center_bins[i]}; "
            f"use fewer filters or a finer spectrum"
        )

    freqs = np.arange(n_bins) * bin_hz
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    weights = np.clip(np.minimum(rising, falling), 0.0, None)
    empty = np.flatnonzero(weights.sum(axis=1) <= 0.0)
    if empty.size:
        raise DegenerateFilter(f"filter {int(empty[0])} covers no spectrum bin")
    return MelFilterbank(weights, centers)


def dct_basis(n_in: int, n_out: int) -> np.ndarray:
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    basis = np.cos(np.pi * k * (2 * n + 1) / (2 * n_in))
    scale = np.full((n_out, 1), math.sqrt(2.0 / n_in))
    scale[0] = math.sqrt(1.0 / n_in)
    return basis * scale


def dct_ii(v, n_out: int | None = None) -> np.ndarray:
    """Orthonormal DCT-II along the last axis, truncated to ``n_out`` terms."""
    v = np.asarray(v, dtype=np.float64)
    n_in = v.shape[-1]
    if n_out is None:
        n_out = n_in
    if not 0 < n_out <= n_in:
        raise ValueError(f"n_out must be in 1..{n_in}, got {n_out}")
    return v @ dct_basis(n_in, n_out).T
