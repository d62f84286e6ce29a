import numpy as np
import pytest

from genreforge.audio_io import AudioClip, synthesize_corpus
from genreforge.features import extract_manifest

SR = 22050


def tone(freq=440.0, seconds=1.0, amp=0.5, sr=SR):
    t = np.arange(int(round(seconds * sr))) / sr
    return amp * np.sin(2 * np.pi * freq * t)


def clip_of(samples, sr=SR):
    return AudioClip(np.asarray(samples, dtype=float), sr)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    manifest = synthesize_corpus(out, seed=42)
    return out, manifest


@pytest.fixture(scope="session")
def corpus_features(corpus):
    _, manifest = corpus
    return extract_manifest(manifest, threads=1)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
