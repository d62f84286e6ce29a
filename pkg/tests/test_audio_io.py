import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import SR, tone
from genreforge.audio_io import (
    encode_wav,
    load_manifest,
    load_wav,
    parse_manifest,
    synthesize_corpus,
    write_wav,
)
from genreforge.errors import (
    DataError,
    DuplicatePath,
    EmptyAudio,
    EmptyManifest,
    MalformedHeader,
    MissingFile,
    UnsupportedEncoding,
)


def _raw_wav(tmp_path, fmt_tag, channels, bits, payload, name="x.wav"):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", fmt_tag, channels, SR, SR * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    path = tmp_path / name
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    return path


def test_pcm16_full_scale_positive(tmp_path):
    path = _raw_wav(tmp_path, 1, 1, 16, struct.pack("<h", 32767))
    clip = load_wav(path)
    assert clip.samples.tolist() == [32767 / 32768]
    assert clip.sample_rate == SR


def test_stereo_is_averaged(tmp_path):
    path = tmp_path / "s.wav"
    write_wav(path, np.array([[0.5, -0.5], [0.25, 0.75]]), SR, encoding="float32")
    assert load_wav(path).samples.tolist() == [0.0, 0.5]


def test_sine_round_trip(tmp_path):
    x = tone(440.0, 1.0, amp=0.8)
    write_wav(tmp_path / "t.wav", x, SR)
    clip = load_wav(tmp_path / "t.wav")
    assert len(clip.samples) == 22050
    assert abs(np.max(np.abs(clip.samples)) - 0.8) < 1e-3


def test_float32_decode(tmp_path):
    x = np.array([0.1, -0.7, 1.0, -1.0])
    write_wav(tmp_path / "f.wav", x, 8000, encoding="float32")
    clip = load_wav(tmp_path / "f.wav")
    assert np.allclose(clip.samples, x, atol=1e-7)
    assert clip.sample_rate == 8000


def test_skips_unknown_chunks(tmp_path):
    data = encode_wav([0.5, -0.5], SR)
    extra = b"LIST" + struct.pack("<I", 3) + b"abc\x00"
    data = data[:12] + extra + data[12:]
    data = b"RIFF" + struct.pack("<I", len(data) - 8) + data[8:]
    (tmp_path / "l.wav").write_bytes(data)
    assert load_wav(tmp_path / "l.wav").samples.tolist() == [0.5, -0.5]


def test_not_riff(tmp_path):
    (tmp_path / "bad.wav").write_bytes(b"ID3\x03" + b"\x00" * 40)
    with pytest.raises(MalformedHeader):
        load_wav(tmp_path / "bad.wav")


@pytest.mark.parametrize("fmt_tag,bits", [(1, 24), (1, 8), (2, 16), (0x55, 16)])
def test_unsupported_encodings(tmp_path, fmt_tag, bits):
    path = _raw_wav(tmp_path, fmt_tag, 1, bits, b"\x00" * (bits // 8) * 4)
    with pytest.raises(UnsupportedEncoding):
        load_wav(path)


def test_empty_data(tmp_path):
    with pytest.raises(EmptyAudio):
        load_wav(_raw_wav(tmp_path, 1, 1, 16, b""))


def test_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        load_wav(tmp_path / "nope.wav")


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 300), elements=st.floats(-1.0, 1.0)))
def test_pcm16_round_trip_within_one_lsb(tmp_path_factory, x):
    path = tmp_path_factory.mktemp("rt") / "x.wav"
    write_wav(path, x, SR)
    y = load_wav(path).samples
    assert np.all(np.abs(y - x) <= 1 / 32768)
    assert np.all((y >= -1.0) & (y <= 1.0))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.integers(1, 200), elements=st.floats(-1.0, 1.0)))
def test_mixdown_of_identical_channels_is_identity(tmp_path_factory, x):
    d = tmp_path_factory.mktemp("mix")
    write_wav(d / "mono.wav", x, SR)
    write_wav(d / "stereo.wav", np.c_[x, x], SR)
    assert np.array_equal(load_wav(d / "mono.wav").samples, load_wav(d / "stereo.wav").samples)


def _manifest_text(rows):
    return "path,label\n" + "".join(f"{p},{lab}\n" for p, lab in rows)


def test_manifest_twenty_rows(tmp_path):
    rows = [(f"c{i}.wav", "classical") for i in range(10)] + [(f"m{i}.wav", "metal") for i in range(10)]
    (tmp_path / "m.csv").write_text(_manifest_text(rows))
    m = load_manifest(tmp_path / "m.csv")
    assert m.class_names == ("classical", "metal")
    assert len(m.entries) == 20
    assert list(m.entries) == rows
    assert m.resolve("c0.wav") == tmp_path / "c0.wav"


def test_manifest_single_row_is_valid():
    m = parse_manifest(_manifest_text([("a.wav", "metal")]))
    assert m.class_names == ("metal",)


def test_manifest_errors(tmp_path):
    with pytest.raises(DuplicatePath):
        parse_manifest(_manifest_text([("a.wav", "x"), ("a.wav", "y")]))
    with pytest.raises(EmptyManifest):
        parse_manifest("path,label\n")
    with pytest.raises(EmptyManifest):
        parse_manifest("")
    with pytest.raises(MissingFile):
        load_manifest(tmp_path / "absent.csv")
    with pytest.raises(DataError):
        parse_manifest('path,label\n"a,b.wav",x\n')
    with pytest.raises(DataError):
        parse_manifest("file,genre\na.wav,x\n")


@given(st.lists(st.tuples(st.from_regex(r"[a-z0-9_/]{1,12}\.wav", fullmatch=True),
                          st.sampled_from(["classical", "metal", "jazz"])),
                min_size=1, max_size=15, unique_by=lambda r: r[0]))
def test_manifest_serialize_is_idempotent(rows):
    text = parse_manifest(_manifest_text(rows)).to_csv()
    assert parse_manifest(text).to_csv() == text


def test_synthesize_corpus_is_deterministic(tmp_path):
    a = synthesize_corpus(tmp_path / "a", seed=7, n_per_class=2, duration=2.0)
    b = synthesize_corpus(tmp_path / "b", seed=7, n_per_class=2, duration=2.0)
    assert a.entries == b.entries
    for path, _ in a.entries:
        assert (tmp_path / "a" / path).read_bytes() == (tmp_path / "b" / path).read_bytes()
    c = synthesize_corpus(tmp_path / "c", seed=8, n_per_class=2, duration=2.0)
    assert (tmp_path / "a" / "metal_00.wav").read_bytes() != (tmp_path / "c" / "metal_00.wav").read_bytes()


def test_synthesized_corpus_layout(corpus):
    out, manifest = corpus
    assert manifest.labels.count("classical") == 10 and manifest.labels.count("metal") == 10
    assert load_manifest(out / "manifest.csv").entries == manifest.entries
    clip = load_wav(out / manifest.entries[0][0])
    assert clip.sample_rate == 22050 and len(clip.samples) == 220500


def test_synthesized_groups_differ_in_centroid(corpus_features):
    ds = corpus_features
    j = ds.feature_names.index("spectral_centroid_mean")
    gap = abs(ds.X[ds.y == 1, j].mean() - ds.X[ds.y == 0, j].mean())
    assert gap > 0.05
