from .builder import FeatureSet, build_features, load_feature_set, save_feature_set
from .interpreter import InterpreterModel, extract_features, interpreter_logits, train_interpreter
from .pred_features import encode_predictions, one_hot_concat, projection_matrix
from .schemas import FeatureMeta, InterpreterConfig, PredFeatureConfig, TfidfConfig
from .storage import FeatureMatrix, load_feature_matrix, save_feature_matrix
from .tfidf import TfidfModel, encode, encode_batch, fit_tfidf

__all__ = [
    "FeatureMatrix",
    "FeatureMeta",
    "FeatureSet",
    "InterpreterConfig",
    "InterpreterModel",
    "PredFeatureConfig",
    "TfidfConfig",
    "TfidfModel",
    "build_features",
    "encode",
    "encode_batch",
    "encode_predictions",
    "extract_features",
    "fit_tfidf",
    "interpreter_logits",
    "load_feature_matrix",
    "load_feature_set",
    "one_hot_concat",
    "projection_matrix",
    "save_feature_matrix",
    "save_feature_set",
    "train_interpreter",
]
