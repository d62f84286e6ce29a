"""Two-genre audio classification: WAV decoding, 138-dim feature extraction,
LDA / feature-selection front ends and nine from-scratch classifiers."""

from genreforge.audio_io import AudioClip, DatasetManifest, load_manifest, load_wav
from genreforge.features import FEATURE_NAMES, FeatureConfig, extract_file_features
from genreforge.preprocess import Dataset

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "Dataset",
    "DatasetManifest",
    "FEATURE_NAMES",
    "FeatureConfig",
    "extract_file_features",
    "load_manifest",
    "load_wav",
]
