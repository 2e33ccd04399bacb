"""Per-format token tagger: hashed lexical embeddings, windowed maxout
layers, softmax output; plus training, serialization, and span decoding."""

from hiliter.labeler.model import (
    LABELS,
    LabelerConfig,
    LabelerModel,
    PredictedSpan,
    Prediction,
    decode_spans,
    labels_to_indices,
    token_attributes,
    word_shape,
)
from hiliter.labeler.serialization import LoadError, load_model, read_model_info, save_model
from hiliter.labeler.training import TrainError, TrainingLog, TrainingParams, train
from hiliter.labeler.gradcheck import gradient_check

__all__ = [
    "LABELS",
    "LabelerConfig",
    "LabelerModel",
    "PredictedSpan",
    "Prediction",
    "decode_spans",
    "labels_to_indices",
    "token_attributes",
    "word_shape",
    "LoadError",
    "load_model",
    "read_model_info",
    "save_model",
    "TrainError",
    "TrainingLog",
    "TrainingParams",
    "train",
    "gradient_check",
]
