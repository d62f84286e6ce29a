"""WAV decoding, dataset manifests and the synthetic stand-in corpus.

Only uncompressed RIFF/WAVE is handled: format code 1 (integer PCM, 16 or
32 bit) and format code 3 (IEEE float, 32 or 64 bit).  Samples are returned
as float64 in [-1, 1], stereo folded to mono by averaging the channels.
"""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from genreforge.errors import (
    DataError,
    DuplicatePath,
    EmptyAudio,
    EmptyManifest,
    MalformedHeader,
    MissingFile,
    UnsupportedEncoding,
)

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003

_PCM_DTYPES = {16: ("<i2", 32768.0), 32: ("<i4", 2147483648.0)}
_FLOAT_DTYPES = {32: "<f4", 64: "<f8"}


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int
    source_path: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DataError(f"AudioClip samples must be 1-D, got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise DataError(f"sample_rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def _iter_chunks(data: bytes, start: int):
    pos = start
    while pos + 8 <= len(data):
        chunk_id, size = struct.unpack_from("<4sI", data, pos)
        body = pos + 8
        yield chunk_id, body, size
        # chunks are word-aligned
        pos = body + size + (size & 1)


def load_wav(path) -> AudioClip:
    """Decode a RIFF/WAVE file into a mono :class:`AudioClip`.

    Raises
    ------
    MissingFile, MalformedHeader, UnsupportedEncoding, EmptyAudio
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise MissingFile(f"no such audio file: {path}") from exc

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedHeader(f"{path}: not a RIFF/WAVE file")

    fmt = None
    pcm = None
    for chunk_id, body, size in _iter_chunks(data, 12):
        if chunk_id == b"fmt ":
            if size < 16:
                raise MalformedHeader(f"{path}: fmt chunk too short ({size} bytes)")
            fmt = struct.unpack_from("<HHIIHH", data, body)
        elif chunk_id == b"data":
            pcm = data[body:body + size]
            break
    if fmt is None:
        raise MalformedHeader(f"{path}: missing fmt chunk")
    if pcm is None:
        raise MalformedHeader(f"{path}: missing data chunk")

    format_tag, channels, sample_rate, _byte_rate, block_align, bits = fmt
    if format_tag == WAVE_FORMAT_PCM and bits in _PCM_DTYPES:
        dtype, divisor = _PCM_DTYPES[bits]
    elif format_tag == WAVE_FORMAT_IEEE_FLOAT and bits in _FLOAT_DTYPES:
        dtype, divisor = _FLOAT_DTYPES[bits], None
    else:
        raise UnsupportedEncoding(
            f"{path}: format code {format_tag:#06x} with {bits} bits per sample"
        )
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{path}: {channels} channels (only 1 or 2 supported)")
    if sample_rate <= 0:
        raise MalformedHeader(f"{path}: sample rate {sample_rate}")
    frame_bytes = channels * bits // 8
    if block_align != frame_bytes:
        raise MalformedHeader(f"{path}: block_align {block_align} != {frame_bytes}")

    n_frames = len(pcm) // frame_bytes
    if n_frames == 0:
        raise EmptyAudio(f"{path}: no audio frames")

    raw = np.frombuffer(pcm, dtype=dtype, count=n_frames * channels).astype(np.float64)
    if divisor is not None:
        raw /= divisor
    else:
        np.clip(raw, -1.0, 1.0, out=raw)
    raw = raw.reshape(n_frames, channels)
    samples = raw[:, 0] if channels == 1 else (raw[:, 0] + raw[:, 1]) / 2.0
    return AudioClip(samples, int(sample_rate), str(path))


def encode_wav(samples, sample_rate: int, encoding: str = "pcm16") -> bytes:
    """Serialize samples to WAV bytes.

    ``samples`` is 1-D (mono) or shape ``(n_frames, channels)``.
    ``encoding`` is ``"pcm16"`` or ``"float32"``.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    n_frames, channels = samples.shape
    if encoding == "pcm16":
        quantized = np.clip(np.round(samples * 32768.0), -32768, 32767)
        payload = quantized.astype("<i2").tobytes()
        format_tag, bits = WAVE_FORMAT_PCM, 16
    elif encoding == "float32":
        payload = samples.astype("<f4").tobytes()
        format_tag, bits = WAVE_FORMAT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    block_align = channels * bits // 8
    fmt = struct.pack(
        "<HHIIHH", format_tag, channels, sample_rate,
        sample_rate * block_align, block_align, bits,
    )
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


def write_wav(path, samples, sample_rate: int, encoding: str = "pcm16") -> None:
    Path(path).write_bytes(encode_wav(samples, sample_rate, encoding))


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered (path, label) entries; paths are kept as written in the CSV
    and resolved against ``root`` on demand."""

    entries: tuple
    class_names: tuple
    root: Path = field(default_factory=Path)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.root / p

    @property
    def labels(self) -> list:
        return [label for _, label in self.entries]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["path", "label"])
        writer.writerows(self.entries)
        return buf.getvalue()


def parse_manifest(text: str, root=Path(".")) -> DatasetManifest:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyManifest("manifest is empty") from None
    if [h.strip() for h in header] != ["path", "label"]:
        raise DataError(f"manifest header must be 'path,label', got {','.join(header)!r}")

    entries = []
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise DataError(f"manifest line {lineno}: expected 2 fields, got {len(row)}")
        path, label = row[0].strip(), row[1].strip()
        if not path or not label:
            raise DataError(f"manifest line {lineno}: empty path or label")
        if "," in path:
            raise DataError(f"manifest line {lineno}: paths containing commas are not supported")
        if path in seen:
            raise DuplicatePath(f"manifest line {lineno}: {path!r} listed twice")
        seen.add(path)
        entries.append((path, label))
    if not entries:
        raise EmptyManifest("manifest has a header but no entries")
    class_names = tuple(sorted({label for _, label in entries}))
    return DatasetManifest(tuple(entries), class_names, Path(root))


def load_manifest(path) -> DatasetManifest:
    """Read a ``path,label`` CSV.  Relative audio paths resolve against the
    manifest's own directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise MissingFile(f"no such manifest: {path}") from exc
    return parse_manifest(text, root=path.parent)


def write_manifest(manifest: DatasetManifest, path) -> None:
    Path(path).write_text(manifest.to_csv(), encoding="utf-8")


# --- synthetic corpus -------------------------------------------------------

def _classical_clip(rng: np.random.Generator, sr: int, duration: float) -> np.ndarray:
    n = int(round(sr * duration))
    t = np.arange(n) / sr
    # a slow melody: one note every 1-2 s drawn from a diatonic set
    base = rng.uniform(130.0, 330.0)
    scale = np.array([0, 2, 4, 5, 7, 9, 11, 12])
    note_len = rng.uniform(1.0, 2.0)
    note_idx = (t // note_len).astype(int)
    steps = rng.choice(scale, size=note_idx.max() + 1)
    f0 = base * 2.0 ** (steps[note_idx] / 12.0)
    phase = 2 * np.pi * np.cumsum(f0) / sr

    n_harm = int(rng.integers(3, 6))
    signal = np.zeros(n)
    for h in range(1, n_harm + 1):
        signal += rng.uniform(0.5, 1.0) / h ** 1.5 * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    envelope = 0.75 + 0.25 * np.sin(2 * np.pi * rng.uniform(0.1, 0.4) * t + rng.uniform(0, 2 * np.pi))
    signal *= envelope
    signal += rng.normal(0.0, 0.003, n)
    return 0.5 * signal / np.max(np.abs(signal))


def _metal_clip(rng: np.random.Generator, sr: int, duration: float) -> np.ndarray:
    n = int(round(sr * duration))
    t = np.arange(n) / sr
    f0 = rng.uniform(70.0, 140.0)
    riff_len = 60.0 / rng.uniform(140.0, 200.0) / 2
    riff = rng.choice([1.0, 1.5, 2.0, 4 / 3], size=int(duration / riff_len) + 2)
    freq = f0 * riff[(t // riff_len).astype(int)]
    phase = 2 * np.pi * np.cumsum(freq) / sr
    square = np.sign(np.sin(phase)) + 0.5 * np.sign(np.sin(1.5 * phase))
    guitar = np.tanh(rng.uniform(3.0, 6.0) * square)

    noise = rng.normal(0.0, 1.0, n)
    # first difference tilts the noise toward the high end (cymbal wash)
    wash = np.diff(noise, prepend=0.0)

    beat_period = 60.0 / rng.uniform(150.0, 200.0)
    hit_phase = (t % beat_period) / beat_period
    hits = np.exp(-hit_phase * rng.uniform(25.0, 40.0)) * rng.normal(0.0, 1.0, n)

    signal = 0.6 * guitar + rng.uniform(0.3, 0.5) * wash + 0.8 * hits
    return 0.9 * signal / np.max(np.abs(signal))


def synthesize_corpus(out_dir, seed: int = 42, n_per_class: int = 10,
                      duration: float = 10.0, sample_rate: int = 22050) -> DatasetManifest:
    """Write a deterministic two-genre stand-in corpus plus ``manifest.csv``.

    "classical" clips are a few low harmonics with a slow envelope and a
    faint noise floor; "metal" clips are distorted square-wave riffs over
    bright noise with percussive bursts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for label, maker in (("classical", _classical_clip), ("metal", _metal_clip)):
        for i in range(n_per_class):
            rng = np.random.default_rng([seed, 0 if label == "classical" else 1, i])
            name = f"{label}_{i:02d}.wav"
            write_wav(out_dir / name, maker(rng, sample_rate, duration), sample_rate)
            entries.append((name, label))
    manifest = DatasetManifest(tuple(entries), ("classical", "metal"), out_dir)
    write_manifest(manifest, out_dir / "manifest.csv")
    return manifest
