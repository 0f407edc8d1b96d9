"""Open-set recognition on top of a frozen closed-set classifier.

Workflow: extract intermediate-activation feature files (GMF format)
elsewhere, then here fit one shallow generative scorer per known class
on correctly predicted training rows, score new samples through their
predicted class's model, pick a rejection cutoff, and evaluate with
open-set metrics.  Everything is deterministic given a seed.
"""

from __future__ import annotations

from gemos.bank import (
    ModelBank,
    ScoreRecord,
    classify_open_set,
    comparison_scores,
    default_min_class_samples,
    fit_bank,
    load_bank,
    read_scores_csv,
    save_bank,
    score_dataset,
    write_scores_csv,
)
from gemos.dataset import (
    UNKNOWN_LABEL,
    FeatureDataset,
    ManifestInfo,
    SampleRecord,
    read_dataset,
    validate,
    write_dataset,
)
from gemos.errors import DataFormatError, FitError, GemosError, ValidationError
from gemos.metrics import (
    EvalReport,
    binary_auc,
    evaluate,
    micro_f1,
    open_set_f1,
    roc_points,
)
from gemos.models import (
    GmmModel,
    IsolationForestModel,
    LofModel,
    PcaModel,
    ScorerConfig,
    fit_model,
    gmm_fit,
    gmm_score,
    iforest_fit,
    iforest_score,
    load_model,
    lof_fit,
    lof_score,
    pca_fit,
    pca_score,
    save_model,
    score_many,
)
from gemos.threshold import (
    ThresholdPolicy,
    ThresholdSearchReport,
    cross_validate_threshold,
    grid_search_threshold,
    load_policy,
    policy_from_report,
    quantile_threshold,
    save_policy,
)

__version__ = "0.1.0"

__all__ = [
    "DataFormatError",
    "EvalReport",
    "FeatureDataset",
    "FitError",
    "GemosError",
    "GmmModel",
    "IsolationForestModel",
    "LofModel",
    "ManifestInfo",
    "ModelBank",
    "PcaModel",
    "SampleRecord",
    "ScoreRecord",
    "ScorerConfig",
    "ThresholdPolicy",
    "ThresholdSearchReport",
    "UNKNOWN_LABEL",
    "ValidationError",
    "binary_auc",
    "classify_open_set",
    "comparison_scores",
    "cross_validate_threshold",
    "default_min_class_samples",
    "evaluate",
    "fit_bank",
    "fit_model",
    "gmm_fit",
    "gmm_score",
    "grid_search_threshold",
    "iforest_fit",
    "iforest_score",
    "load_bank",
    "load_model",
    "load_policy",
    "lof_fit",
    "lof_score",
    "micro_f1",
    "open_set_f1",
    "pca_fit",
    "pca_score",
    "policy_from_report",
    "quantile_threshold",
    "read_dataset",
    "read_scores_csv",
    "roc_points",
    "save_bank",
    "save_model",
    "save_policy",
    "score_dataset",
    "score_many",
    "validate",
    "write_dataset",
    "write_scores_csv",
    "__version__",
]
