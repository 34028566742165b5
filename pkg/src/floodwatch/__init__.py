"""Relevance classification of flood-event social posts.

Text (bag-of-words or external embeddings) and precomputed image features
feed three classifier families whose posteriors are combined by weighted
late fusion.  See the README for the run presets and file formats.
"""

from .balance import SyntheticSample, rebalance, smote
from .config import ConfigError, RunConfig, load_config, validate_config
from .corpus import (
    Dataset,
    DatasetError,
    ParseError,
    TweetRecord,
    ValidationError,
    load_dataset,
    save_dataset,
    stratified_split,
)
from .evaluation import EvalReport, format_report, macro_f1, report_line, score_binary
from .features import (
    FeatureMatrix,
    Vocabulary,
    align_features,
    bow_matrix,
    bow_vectorize,
    build_vocabulary,
    hash_embed,
    load_feature_file,
    save_feature_file,
)
from .fusion import FusionSpec, decide, fuse, fuse_multimodal
from .models import (
    LRModel,
    NBModel,
    PosteriorPair,
    SVMModel,
    load_model,
    lr_gradient,
    lr_predict,
    lr_train,
    nb_predict,
    nb_train,
    platt_fit,
    save_model,
    svm_margin,
    svm_predict,
    svm_train,
)
from .runs import RunResult, execute_run
from .textprep import load_stopwords, preprocess

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Dataset",
    "DatasetError",
    "EvalReport",
    "FeatureMatrix",
    "FusionSpec",
    "LRModel",
    "NBModel",
    "ParseError",
    "PosteriorPair",
    "RunConfig",
    "RunResult",
    "SVMModel",
    "SyntheticSample",
    "TweetRecord",
    "ValidationError",
    "Vocabulary",
    "align_features",
    "bow_matrix",
    "bow_vectorize",
    "build_vocabulary",
    "decide",
    "execute_run",
    "format_report",
    "fuse",
    "fuse_multimodal",
    "hash_embed",
    "load_config",
    "load_dataset",
    "load_feature_file",
    "load_model",
    "load_stopwords",
    "lr_gradient",
    "lr_predict",
    "lr_train",
    "macro_f1",
    "nb_predict",
    "nb_train",
    "platt_fit",
    "preprocess",
    "rebalance",
    "report_line",
    "save_dataset",
    "save_feature_file",
    "save_model",
    "score_binary",
    "smote",
    "stratified_split",
    "svm_margin",
    "svm_predict",
    "svm_train",
    "validate_config",
]
