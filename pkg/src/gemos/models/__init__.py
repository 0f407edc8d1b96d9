"""Shallow generative scorers: GMM, PCA, isolation forest, LOF.

Every scorer follows the same convention: ``*_fit`` consumes an (n, D)
training matrix, ``*_score`` maps a D-vector to a real score where higher
means more in-distribution. Fitted models are immutable and safe to score
from many threads.
"""

from gemos.models.config import ScorerConfig, SCORER_KINDS
from gemos.models.gmm import (
    GmmModel,
    VARIANCE_FLOOR,
    gmm_fit,
    gmm_responsibilities,
    gmm_score,
    gmm_score_many,
)
from gemos.models.pca import PcaModel, pca_fit, pca_score, pca_score_many
from gemos.models.iforest import (
    IsolationForestModel,
    IsoLeaf,
    IsoSplit,
    average_path_length,
    iforest_fit,
    iforest_score,
    iforest_score_many,
)
from gemos.models.lof import LofModel, lof_fit, lof_score, lof_score_many
from gemos.models.serialize import (
    dumps_deterministic,
    fit_model,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    score_many,
)

__all__ = [
    "SCORER_KINDS",
    "ScorerConfig",
    "GmmModel",
    "VARIANCE_FLOOR",
    "gmm_fit",
    "gmm_responsibilities",
    "gmm_score",
    "gmm_score_many",
    "PcaModel",
    "pca_fit",
    "pca_score",
    "pca_score_many",
    "IsolationForestModel",
    "IsoLeaf",
    "IsoSplit",
    "average_path_length",
    "iforest_fit",
    "iforest_score",
    "iforest_score_many",
    "LofModel",
    "lof_fit",
    "lof_score",
    "lof_score_many",
    "dumps_deterministic",
    "fit_model",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "score_many",
]
