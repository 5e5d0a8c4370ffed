"""Weather-condition image classification from 20 hand-crafted features.

Four classes (clear, haze, low_light, rain), a one-vs-rest linear SVM, and
tools to synthesise training corpora from clear images.
"""

from .errors import (
    CsvFormatError,
    DecodeError,
    DimensionError,
    FileIOError,
    ParameterError,
    SchemaError,
    WeatherClfError,
)
from .features import FEATURE_NAMES, ExtractionConfig, extract_features
from .svm import CLASSES, LabeledDataset, WeatherModel, load_model, save_model, train_ovr

__version__ = "0.1.0"

__all__ = [
    "CLASSES",
    "FEATURE_NAMES",
    "CsvFormatError",
    "DecodeError",
    "DimensionError",
    "ExtractionConfig",
    "FileIOError",
    "LabeledDataset",
    "ParameterError",
    "SchemaError",
    "WeatherClfError",
    "WeatherModel",
    "extract_features",
    "load_model",
    "save_model",
    "train_ovr",
]
