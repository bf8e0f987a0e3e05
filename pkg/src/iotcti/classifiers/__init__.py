"""The six text classifiers behind one train/predict contract."""
from .model import (
    FORMAT_VERSION,
    TrainedModel,
    as_label_array,
    dumps_model,
    loads_model,
    model_from_dict,
    model_to_dict,
    predict_label,
    predict_labels,
    predict_score,
    predict_scores,
    train_model,
)
from .spec import (
    DEFAULTS,
    KINDS,
    ConvergenceError,
    DegenerateLabelsError,
    DimensionError,
    ModelSpec,
    VocabularyBindingError,
    default_spec,
)

__all__ = [
    "DEFAULTS",
    "FORMAT_VERSION",
    "KINDS",
    "ConvergenceError",
    "DegenerateLabelsError",
    "DimensionError",
    "ModelSpec",
    "TrainedModel",
    "VocabularyBindingError",
    "as_label_array",
    "default_spec",
    "dumps_model",
    "loads_model",
    "model_from_dict",
    "model_to_dict",
    "predict_label",
    "predict_labels",
    "predict_score",
    "predict_scores",
    "train_model",
]
