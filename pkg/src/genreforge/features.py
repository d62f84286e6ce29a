"""Short-term audio features and the 138-column per-file feature vector.

Per frame, 34 base features are computed (8 time/spectral descriptors, 13
MFCCs, 12 chroma bins and the chroma spread), followed by their first
differences.  The 68 series are summarized by mean and population std over
mid-term windows, and two tempo features close the vector:

    [<68 names>_mean, <68 names>_std, beat, beat_conf]
"""
from __future__ import annotations

import csv
import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from genreforge.audio_io import AudioClip, DatasetManifest, load_wav
from genreforge.dsp import (
    MelFilterbank,
    dct_ii,
    fft_length,
    frame_signal,
    hamming,
    magnitude_spectrum,
    mel_filterbank,
    seconds_to_samples,
)
from genreforge.errors import BinCountMismatch, DataError, MissingFile, SignalTooShort
from genreforge.preprocess import Dataset

EPS = 1e-10

BASE_NAMES = (
    ["zcr", "energy", "energy_entropy", "spectral_centroid", "spectral_spread",
     "spectral_entropy", "spectral_flux", "spectral_rolloff"]
    + [f"mfcc_{i}" for i in range(1, 14)]
    + [f"chroma_{i}" for i in range(1, 13)]
    + ["chroma_std"]
)
SHORT_TERM_NAMES = BASE_NAMES + [f"delta_{name}" for name in BASE_NAMES]
FEATURE_NAMES = (
    [f"{name}_mean" for name in SHORT_TERM_NAMES]
    + [f"{name}_std" for name in SHORT_TERM_NAMES]
    + ["beat", "beat_conf"]
)
assert len(BASE_NAMES) == 34 and len(FEATURE_NAMES) == 138

# features unchanged by a positive gain on the signal
SCALE_INVARIANT = (
    ["zcr", "energy_entropy", "spectral_centroid", "spectral_spread",
     "spectral_entropy", "spectral_flux", "spectral_rolloff"]
    + [f"chroma_{i}" for i in range(1, 13)]
)


@dataclass(frozen=True)
class FeatureConfig:
    window_s: float = 0.050
    step_s: float = 0.025
    mt_window_s: float = 1.0
    mt_step_s: float = 1.0
    n_mel_filters: int = 26
    n_mfcc: int = 13
    n_entropy_blocks: int = 10
    rolloff_fraction: float = 0.90

    def __post_init__(self):
        if self.n_mfcc != 13:
            # the canonical 138-name layout is built around 13 coefficients
            raise ValueError("n_mfcc must be 13 to keep the 138-feature layout")


# --- per-frame features (last axis = samples or spectrum bins) --------------

def zero_crossing_rate(frames) -> np.ndarray:
    x = np.asarray(frames, dtype=np.float64)
    w = x.shape[-1]
    if w < 2:
        raise SignalTooShort("zero-crossing rate needs at least 2 samples")
    signs = np.where(x >= 0, 1.0, -1.0)
    return np.abs(np.diff(signs, axis=-1)).sum(axis=-1) / (2.0 * (w - 1))


def short_term_energy(frames) -> np.ndarray:
    x = np.asarray(frames, dtype=np.float64)
    return np.mean(x * x, axis=-1)


def _block_entropy(power, n_blocks: int) -> np.ndarray:
    """Entropy (bits) of the share of ``power`` falling in each of
    ``n_blocks`` equal consecutive blocks; the remainder is truncated."""
    power = np.asarray(power, dtype=np.float64)
    length = power.shape[-1] // n_blocks
    if length < 1:
        raise SignalTooShort(f"{power.shape[-1]} values cannot form {n_blocks} blocks")
    blocks = power[..., : length * n_blocks].reshape(*power.shape[:-1], n_blocks, length)
    energy = blocks.sum(axis=-1)
    total = energy.sum(axis=-1, keepdims=True)
    share = np.divide(energy, total, out=np.zeros_like(energy), where=total > 0)
    return -np.sum(share * np.log2(share + EPS), axis=-1)


def energy_entropy(frames, n_blocks: int = 10) -> np.ndarray:
    x = np.asarray(frames, dtype=np.float64)
    return _block_entropy(x * x, n_blocks)


def spectral_centroid_spread(spec):
    """Centroid and spread of a magnitude spectrum, with bin ``k`` placed at
    normalized position ``(k+1)/K``.  Returns ``(0, 0)`` for a zero spectrum."""
    spec = np.asarray(spec, dtype=np.float64)
    n_bins = spec.shape[-1]
    pos = np.arange(1, n_bins + 1) / n_bins
    total = spec.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)
    centroid = np.where(total > 0, (spec * pos).sum(axis=-1) / safe, 0.0)
    var = (spec * (pos - centroid[..., None]) ** 2).sum(axis=-1) / safe
    spread = np.where(total > 0, np.sqrt(np.maximum(var, 0.0)), 0.0)
    return centroid, spread


def spectral_entropy(spec, n_blocks: int = 10) -> np.ndarray:
    spec = np.asarray(spec, dtype=np.float64)
    return _block_entropy(spec * spec, n_blocks)


def _sum_normalize(spec):
    total = spec.sum(axis=-1, keepdims=True)
    return np.divide(spec, total, out=np.zeros_like(spec), where=total > 0)


def spectral_flux(spec, prev) -> np.ndarray:
    spec = np.asarray(spec, dtype=np.float64)
    prev = np.asarray(prev, dtype=np.float64)
    if spec.shape[-1] != prev.shape[-1]:
        raise BinCountMismatch(f"{spec.shape[-1]} bins vs {prev.shape[-1]} bins")
    diff = _sum_normalize(spec) - _sum_normalize(prev)
    return np.sum(diff * diff, axis=-1)


def spectral_rolloff(spec, c: float = 0.90) -> np.ndarray:
    """Smallest bin ``m`` holding fraction ``c`` of the power, as ``m / K``."""
    if not 0 < c < 1:
        raise ValueError(f"rolloff fraction must be in (0, 1), got {c}")
    spec = np.asarray(spec, dtype=np.float64)
    n_bins = spec.shape[-1]
    cumulative = np.cumsum(spec * spec, axis=-1)
    total = cumulative[..., -1:]
    reached = cumulative >= c * total
    m = np.argmax(reached, axis=-1)
    return np.where(total[..., 0] > 0, m / n_bins, 0.0)


def mfcc(spec, fb: MelFilterbank, n_coeffs: int = 13) -> np.ndarray:
    spec = np.asarray(spec, dtype=np.float64)
    if spec.shape[-1] != fb.n_bins:
        raise BinCountMismatch(f"spectrum has {spec.shape[-1]} bins, filterbank expects {fb.n_bins}")
    mel_energy = (spec * spec) @ fb.weights.T
    return dct_ii(np.log(mel_energy + EPS), n_coeffs)


@functools.lru_cache(maxsize=16)
def _chroma_classes(n_bins: int, sample_rate: int) -> np.ndarray:
    bin_hz = sample_rate / (2.0 * n_bins)
    freqs = np.arange(1, n_bins) * bin_hz
    return np.mod(np.round(12.0 * np.log2(freqs / 440.0)).astype(int), 12)


def chroma(spec, sample_rate: int):
    """Fold spectral power onto 12 pitch classes (class 0 = A).

    The DC bin is skipped and the vector is normalized by the power of the
    remaining bins; a spectrum with no power outside DC gives all zeros.
    Returns ``(chroma[..., 12], chroma_std)``.
    """
    spec = np.asarray(spec, dtype=np.float64)
    classes = _chroma_classes(spec.shape[-1], sample_rate)
    power = spec[..., 1:] ** 2
    lead = power.shape[:-1]
    flat = power.reshape(-1, power.shape[-1])
    folded = np.zeros((flat.shape[0], 12))
    for p in range(12):
        folded[:, p] = flat[:, classes == p].sum(axis=-1)
    folded = _sum_normalize(folded).reshape(*lead, 12)
    return folded, folded.std(axis=-1)


# --- per-file pipeline ------------------------------------------------------

@dataclass(frozen=True)
class ShortTermMatrix:
    values: np.ndarray   # (68, n_frames)
    window: int          # samples
    step: int            # samples
    sample_rate: int
    step_s: float        # configured step, used for mid-term grouping

    names = SHORT_TERM_NAMES

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    @property
    def frame_step_s(self) -> float:
        """Actual hop in seconds after rounding to whole samples."""
        return self.step / self.sample_rate

    def row(self, name: str) -> np.ndarray:
        return self.values[SHORT_TERM_NAMES.index(name)]


@functools.lru_cache(maxsize=16)
def _filterbank(n_filters: int, n_bins: int, sample_rate: int) -> MelFilterbank:
    return mel_filterbank(n_filters, n_bins, sample_rate)


def short_term_features(clip: AudioClip, config: FeatureConfig = FeatureConfig()) -> ShortTermMatrix:
    sr = clip.sample_rate
    frames = frame_signal(clip.samples, sr, config.window_s, config.step_s)
    if frames.shape[0] < 2:
        raise SignalTooShort(f"{clip.source_path or 'clip'}: need at least 2 frames")
    n_fft = fft_length(frames.shape[1])
    spec = magnitude_spectrum(hamming(frames), n_fft)
    fb = _filterbank(config.n_mel_filters, spec.shape[1], sr)

    prev = np.vstack([spec[:1], spec[:-1]])
    centroid, spread = spectral_centroid_spread(spec)
    chroma_vec, chroma_spread = chroma(spec, sr)
    base = np.vstack([
        zero_crossing_rate(frames),
        short_term_energy(frames),
        energy_entropy(frames, config.n_entropy_blocks),
        centroid,
        spread,
        spectral_entropy(spec, config.n_entropy_blocks),
        spectral_flux(spec, prev),
        spectral_rolloff(spec, config.rolloff_fraction),
        mfcc(spec, fb, config.n_mfcc).T,
        chroma_vec.T,
        chroma_spread,
    ])
    delta = np.zeros_like(base)
    delta[:, 1:] = np.diff(base, axis=1)
    return ShortTermMatrix(
        np.vstack([base, delta]),
        window=frames.shape[1],
        step=seconds_to_samples(config.step_s, sr),
        sample_rate=sr,
        step_s=config.step_s,
    )


def mid_term_stats(st: ShortTermMatrix, mt_window_s: float = 1.0, mt_step_s: float = 1.0) -> np.ndarray:
    """Mean and population std of every short-term row inside each complete
    mid-term window, averaged over windows: 68 means followed by 68 stds."""
    win = max(1, int(math.floor(mt_window_s / st.step_s + 0.5)))
    step = max(1, int(math.floor(mt_step_s / st.step_s + 0.5)))
    n_frames = st.n_frames
    if n_frames < win:
        raise SignalTooShort(f"{n_frames} frames do not fill one {win}-frame mid-term window")
    starts = range(0, n_frames - win + 1, step)
    means = np.array([st.values[:, s:s + win].mean(axis=1) for s in starts])
    stds = np.array([st.values[:, s:s + win].std(axis=1) for s in starts])
    return np.concatenate([means.mean(axis=0), stds.mean(axis=0)])


def beat_features(st: ShortTermMatrix, frame_step_s: float | None = None,
                  min_bpm: float = 60.0, max_bpm: float = 200.0):
    """Tempo from the autocorrelation of an onset envelope.

    The envelope is the positive part of ``delta_spectral_flux +
    delta_energy``.  Returns ``(bpm, confidence)`` where confidence is the
    autocorrelation peak over the zero-lag value, in ``[0, 1]``.
    """
    if frame_step_s is None:
        frame_step_s = st.frame_step_s
    if st.n_frames < 64:
        raise SignalTooShort(f"beat estimation needs 64 frames, got {st.n_frames}")
    env = np.maximum(st.row("delta_spectral_flux") + st.row("delta_energy"), 0.0)
    r0 = float(np.dot(env, env))
    if r0 <= 0.0:
        return 0.0, 0.0

    lag_min = max(1, math.ceil(60.0 / (max_bpm * frame_step_s)))
    lag_max = min(len(env) - 1, math.floor(60.0 / (min_bpm * frame_step_s)))
    if lag_max < lag_min:
        return 0.0, 0.0
    lags = np.arange(lag_min, lag_max + 1)
    acf = np.array([np.dot(env[:-lag], env[lag:]) for lag in lags])
    best = int(np.argmax(acf))
    bpm = 60.0 / (lags[best] * frame_step_s)
    conf = min(1.0, max(0.0, acf[best] / r0))
    return float(bpm), float(conf)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple = tuple(FEATURE_NAMES)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])


def extract_file_features(clip: AudioClip, config: FeatureConfig = FeatureConfig()) -> FeatureVector:
    st = short_term_features(clip, config)
    stats = mid_term_stats(st, config.mt_window_s, config.mt_step_s)
    beat, conf = beat_features(st)
    values = np.concatenate([stats, [beat, conf]])
    if not np.all(np.isfinite(values)):
        bad = [FEATURE_NAMES[i] for i in np.flatnonzero(~np.isfinite(values))]
        raise DataError(f"{clip.source_path}: non-finite features {bad[:5]}")
    return FeatureVector(values)


# --- dataset level ----------------------------------------------------------

def thread_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("GENREFORGE_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, threads)


def extract_manifest(manifest: DatasetManifest, config: FeatureConfig = FeatureConfig(),
                     threads: int | None = None) -> Dataset:
    """Extract one feature row per manifest entry, in manifest order.

    Files are independent, so they are processed on up to ``threads`` worker
    threads (default: ``GENREFORGE_THREADS`` or the CPU count); results do
    not depend on the thread count.
    """
    def one(entry):
        path, _ = entry
        return extract_file_features(load_wav(manifest.resolve(path)), config).values

    n_workers = thread_count(threads)
    if n_workers == 1:
        rows = [one(e) for e in manifest.entries]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(one, manifest.entries))
    class_names = list(manifest.class_names)
    return Dataset(
        X=np.array(rows),
        y=np.array([class_names.index(label) for _, label in manifest.entries]),
        class_names=class_names,
        feature_names=list(FEATURE_NAMES),
        paths=[p for p, _ in manifest.entries],
    )


def write_feature_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "label", *ds.feature_names])
        for i in range(ds.n_samples):
            writer.writerow([ds.paths[i], ds.class_names[ds.y[i]],
                             *(f"{v:.9g}" for v in ds.X[i])])


def read_feature_csv(path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"no such feature file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["path", "label"]:
        raise DataError(f"{path}: header must start with 'path,label'")
    feature_names = rows[0][2:]
    body = [r for r in rows[1:] if r]
    if not body:
        raise DataError(f"{path}: no data rows")
    if any(len(r) != len(rows[0]) for r in body):
        raise DataError(f"{path}: ragged rows")
    labels = [r[1] for r in body]
    class_names = sorted(set(labels))
    try:
        X = np.array([[float(v) for v in r[2:]] for r in body])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return Dataset(
        X=X,
        y=np.array([class_names.index(label) for label in labels]),
        class_names=class_names,
        feature_names=feature_names,
        paths=[r[0] for r in body],
    )
