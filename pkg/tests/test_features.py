import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import SR, clip_of, tone
from genreforge.dsp import mel_filterbank
from genreforge.errors import BinCountMismatch, SignalTooShort
from genreforge.features import (
    BASE_NAMES,
    FEATURE_NAMES,
    SCALE_INVARIANT,
    SHORT_TERM_NAMES,
    ShortTermMatrix,
    beat_features,
    chroma,
    energy_entropy,
    extract_file_features,
    extract_manifest,
    mfcc,
    mid_term_stats,
    read_feature_csv,
    short_term_energy,
    short_term_features,
    spectral_centroid_spread,
    spectral_entropy,
    spectral_flux,
    spectral_rolloff,
    write_feature_csv,
    zero_crossing_rate,
)

LOG2_10 = math.log2(10)


# --- per-frame features -----------------------------------------------------

def test_zcr_extremes():
    assert zero_crossing_rate(np.full(50, 0.3)) == 0.0
    assert zero_crossing_rate(np.zeros(50)) == 0.0
    assert zero_crossing_rate(np.tile([1.0, -1.0], 25)) == 1.0


def test_zcr_of_440hz_second():
    x = tone(440.0, 1.0)
    signs = np.where(x >= 0, 1, -1)
    crossings = np.count_nonzero(signs[1:] != signs[:-1])
    assert zero_crossing_rate(x) == pytest.approx(crossings / (len(x) - 1))
    assert zero_crossing_rate(x) == pytest.approx(0.0399, abs=1e-3)


def test_energy():
    assert short_term_energy(np.zeros(8)) == 0.0
    assert short_term_energy(np.array([1.0, -1.0, 1.0, -1.0])) == 1.0
    assert short_term_energy(np.array([1.0, 2.0, 3.0, 4.0])) == 7.5


def test_energy_entropy_cases():
    assert energy_entropy(np.ones(100)) == pytest.approx(LOG2_10, abs=1e-6)
    burst = np.zeros(100)
    burst[:10] = 1.0
    assert energy_entropy(burst) == pytest.approx(0.0, abs=1e-8)
    half = np.r_[np.ones(50), np.zeros(50)]
    assert energy_entropy(half) == pytest.approx(math.log2(5), abs=1e-6)
    assert energy_entropy(np.zeros(100)) == 0.0


def test_centroid_spread():
    K = 16
    for k in (0, 3, 15):
        spec = np.zeros(K)
        spec[k] = 2.5
        c, s = spectral_centroid_spread(spec)
        assert c == (k + 1) / K and s == 0.0
    assert spectral_centroid_spread(np.zeros(K)) == (0.0, 0.0)
    c, s = spectral_centroid_spread(np.ones(4))
    assert c == pytest.approx(0.625)
    pos = np.arange(1, 5) / 4
    assert s == pytest.approx(math.sqrt(np.mean((pos - 0.625) ** 2)))


def test_spectral_entropy_cases():
    assert spectral_entropy(np.ones(200)) == pytest.approx(LOG2_10, abs=1e-6)
    single = np.zeros(200)
    single[:20] = 1.0
    assert spectral_entropy(single) == pytest.approx(0.0, abs=1e-8)
    half = np.r_[np.ones(100), np.zeros(100)]
    assert spectral_entropy(half) == pytest.approx(math.log2(5), abs=1e-6)


def test_spectral_flux_cases():
    p = np.array([1.0, 2.0, 3.0])
    assert spectral_flux(p, p) == 0.0
    assert spectral_flux(3 * p, p) == pytest.approx(0.0, abs=1e-15)
    assert spectral_flux(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 2.0
    with pytest.raises(BinCountMismatch):
        spectral_flux(np.ones(3), np.ones(4))


def test_rolloff_cases():
    spec = np.zeros(10)
    spec[6] = 1.0
    assert spectral_rolloff(spec) == 0.6
    # cumulative power of a flat spectrum: 1/10, 2/10, ... first >= 0.9 is index 8
    cumulative = np.cumsum(np.ones(10)) / 10
    m = int(np.argmax(cumulative >= 0.9))
    assert m == 8
    assert spectral_rolloff(np.ones(10), 0.90) == m / 10
    assert spectral_rolloff(np.zeros(10)) == 0.0


def test_mfcc_zero_spectrum():
    fb = mel_filterbank(26, 1024, SR)
    c = mfcc(np.zeros(1024), fb)
    assert c.shape == (13,)
    assert c[0] == pytest.approx(math.sqrt(1 / 26) * 26 * math.log(1e-10), abs=1e-9)
    assert np.allclose(c[1:], 0.0, atol=1e-9)
    with pytest.raises(BinCountMismatch):
        mfcc(np.zeros(512), fb)


def test_mfcc_gain_only_moves_first_coefficient():
    x = np.random.default_rng(3).normal(0, 0.3, 2 * SR)
    a = short_term_features(clip_of(x))
    b = short_term_features(clip_of(0.1 * x))
    rows = [SHORT_TERM_NAMES.index(f"mfcc_{i}") for i in range(1, 14)]
    ma, mb = a.values[rows], b.values[rows]
    assert np.allclose(ma[1:], mb[1:], atol=1e-6)
    shift = math.sqrt(26) * 2 * math.log(0.1)
    assert np.allclose(mb[0] - ma[0], shift, atol=1e-6)


def test_chroma_of_a440():
    fv = extract_file_features(clip_of(tone(440.0, 3.0)))
    values = np.array([fv[f"chroma_{i}_mean"] for i in range(1, 13)])
    assert np.argmax(values) == 0
    assert values[0] >= 0.5


def test_chroma_zero_spectrum():
    vec, spread = chroma(np.zeros(1024), SR)
    assert not vec.any() and spread == 0.0


@settings(max_examples=50)
@given(arrays(np.float64, 256, elements=st.floats(0.0, 10.0)))
def test_chroma_normalized(spec):
    vec, spread = chroma(spec, SR)
    if np.any(spec[1:] ** 2 > 0):
        assert vec.sum() == pytest.approx(1.0, abs=1e-9)
    assert spread == pytest.approx(np.std(vec))
    assert np.all((vec >= 0) & (vec <= 1))


# --- short-term matrix, mid-term stats, beat --------------------------------

def test_short_term_layout():
    st_ = short_term_features(clip_of(tone(300.0, 1.0)))
    assert st_.values.shape == (68, 39)
    assert list(st_.names) == SHORT_TERM_NAMES
    assert SHORT_TERM_NAMES[:8] == ["zcr", "energy", "energy_entropy", "spectral_centroid",
                                    "spectral_spread", "spectral_entropy", "spectral_flux",
                                    "spectral_rolloff"]
    assert np.all(st_.values[34:, 0] == 0)
    assert st_.row("spectral_flux")[0] == 0.0


def test_delta_of_constant_rows_is_zero():
    st_ = short_term_features(clip_of(np.zeros(SR)))
    assert not st_.values[34:].any()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_delta_rows_telescope(seed):
    x = np.random.default_rng(seed).normal(0, 0.2, SR)
    v = short_term_features(clip_of(x)).values
    assert np.allclose(v[34:].sum(axis=1), v[:34, -1] - v[:34, 0], atol=1e-9)


def _fake_st(values, step_s=0.025):
    return ShortTermMatrix(np.asarray(values, dtype=float), window=1103, step=551,
                           sample_rate=SR, step_s=step_s)


def test_mid_term_single_window_is_plain_mean_std():
    v = np.random.default_rng(1).normal(size=(68, 40))
    out = mid_term_stats(_fake_st(v))
    assert out.shape == (136,)
    assert np.allclose(out[:68], v.mean(axis=1), atol=1e-15)
    assert np.allclose(out[68:], v.std(axis=1), atol=1e-15)


def test_mid_term_constant_row():
    v = np.random.default_rng(2).normal(size=(68, 80))
    v[5] = 4.25
    out = mid_term_stats(_fake_st(v))
    assert out[5] == pytest.approx(4.25, abs=1e-15) and out[68 + 5] == 0.0


def test_mid_term_two_windows_average_window_means():
    v = np.random.default_rng(4).normal(size=(68, 80))
    out = mid_term_stats(_fake_st(v))
    means = (v[:, :40].mean(axis=1) + v[:, 40:].mean(axis=1)) / 2
    stds = (v[:, :40].std(axis=1) + v[:, 40:].std(axis=1)) / 2
    assert np.allclose(out[:68], means, atol=1e-12)
    assert np.allclose(out[68:], stds, atol=1e-12)


def test_mid_term_drops_incomplete_window():
    v = np.random.default_rng(5).normal(size=(68, 60))
    assert np.allclose(mid_term_stats(_fake_st(v))[:68], v[:, :40].mean(axis=1))
    with pytest.raises(SignalTooShort):
        mid_term_stats(_fake_st(v[:, :39]))


def test_beat_of_silence():
    assert beat_features(short_term_features(clip_of(np.zeros(3 * SR)))) == (0.0, 0.0)


def test_beat_of_click_track():
    x = np.zeros(10 * SR)
    x[:: SR // 2] = 1.0
    bpm, conf = beat_features(short_term_features(clip_of(x)))
    assert bpm == pytest.approx(120.0, abs=3.0)
    assert 0.0 <= conf <= 1.0


def test_beat_needs_64_frames():
    with pytest.raises(SignalTooShort):
        beat_features(short_term_features(clip_of(np.zeros(SR))))


# --- per-file vector --------------------------------------------------------

def test_feature_names():
    assert len(FEATURE_NAMES) == 138 and len(set(FEATURE_NAMES)) == 138
    assert FEATURE_NAMES[3] == "spectral_centroid_mean"
    assert FEATURE_NAMES[2] == "energy_entropy_mean"
    assert FEATURE_NAMES[68] == "zcr_std"
    assert FEATURE_NAMES[67] == "delta_chroma_std_mean"
    assert FEATURE_NAMES[136:] == ["beat", "beat_conf"]
    assert len(BASE_NAMES) == 34 and len(SCALE_INVARIANT) == 19


def test_extract_file_features_is_deterministic():
    x = np.random.default_rng(9).normal(0, 0.2, 3 * SR)
    a = extract_file_features(clip_of(x))
    b = extract_file_features(clip_of(x.copy()))
    assert a.values.shape == (138,)
    assert np.array_equal(a.values, b.values)
    assert np.all(np.isfinite(a.values))


def test_silence_is_finite():
    fv = extract_file_features(clip_of(np.zeros(3 * SR)))
    assert np.all(np.isfinite(fv.values))


signals = st.builds(
    lambda seed, f, noise: np.clip(
        tone(f, 2.0, 0.4) + np.random.default_rng(seed).normal(0, noise, 2 * SR), -1, 1),
    st.integers(0, 2**31), st.floats(60.0, 4000.0), st.floats(0.0, 0.3),
)


@settings(max_examples=10, deadline=None)
@given(signals, st.floats(0.05, 0.95))
def test_ratio_features_ignore_gain(x, gain):
    a = short_term_features(clip_of(x)).values
    b = short_term_features(clip_of(gain * x)).values
    for name in SCALE_INVARIANT:
        i = SHORT_TERM_NAMES.index(name)
        assert np.allclose(a[i], b[i], rtol=1e-6, atol=1e-12), name


@settings(max_examples=10, deadline=None)
@given(signals)
def test_feature_ranges(x):
    st_ = short_term_features(clip_of(x))
    for name in ("zcr", "spectral_rolloff", "spectral_centroid", "spectral_spread",
                 *[f"chroma_{i}" for i in range(1, 13)]):
        row = st_.row(name)
        assert np.all((row >= 0) & (row <= 1)), name
    for name in ("energy_entropy", "spectral_entropy"):
        row = st_.row(name)
        assert np.all((row >= -1e-9) & (row <= LOG2_10 + 1e-9)), name
    assert 0.0 <= beat_features(st_)[1] <= 1.0


# --- dataset level ----------------------------------------------------------

def test_corpus_dataset_shape(corpus_features):
    ds = corpus_features
    assert ds.X.shape == (20, 138)
    assert ds.feature_names == FEATURE_NAMES
    assert ds.class_names == ["classical", "metal"]
    assert np.all(np.isfinite(ds.X))


def test_feature_csv_round_trip(tmp_path, corpus_features):
    path = tmp_path / "f.csv"
    write_feature_csv(corpus_features, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header[:2] == ["path", "label"] and header[2:] == FEATURE_NAMES
    back = read_feature_csv(path)
    assert back.paths == corpus_features.paths
    assert np.array_equal(back.y, corpus_features.y)
    assert np.allclose(back.X, corpus_features.X, rtol=1e-8, atol=0)


def test_parallel_extraction_matches_serial(tmp_path, corpus, corpus_features):
    _, manifest = corpus
    parallel = extract_manifest(manifest, threads=4)
    assert np.array_equal(parallel.X, corpus_features.X)
    write_feature_csv(parallel, tmp_path / "p.csv")
    write_feature_csv(corpus_features, tmp_path / "s.csv")
    assert (tmp_path / "p.csv").read_bytes() == (tmp_path / "s.csv").read_bytes()
