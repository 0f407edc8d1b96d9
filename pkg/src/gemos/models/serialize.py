"""Fit dispatch and deterministic JSON persistence for all scorer kinds.

Serialized form: ``{"kind": ..., "config": ..., "params": ...}`` with
kind-specific parameter arrays.  Floats are printed with 17 significant
digits so a dump -> load -> dump cycle is byte identical, and key order
is fixed by construction, so equal models always serialize to equal
bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from gemos.errors import DataFormatError, ValidationError
from gemos.models.config import ScorerConfig
from gemos.models.gmm import GmmModel, gmm_fit, gmm_score_many
from gemos.models.iforest import (
    IsoLeaf,
    IsolationForestModel,
    IsoNode,
    IsoSplit,
    iforest_fit,
    iforest_score_many,
)
from gemos.models.lof import LofModel, lof_fit, lof_score_many
from gemos.models.pca import PcaModel, pca_fit, pca_score_many

AnyModel = GmmModel | PcaModel | IsolationForestModel | LofModel


def _format_float(x: float) -> str:
    if x != x:
        return "NaN"
    if x == float("inf"):
        return "Infinity"
    if x == float("-inf"):
        return "-Infinity"
    text = format(x, ".17g")
    # keep floats typed as floats through a json.loads round trip
    if not any(c in text for c in ".eE"):
        text += ".0"
    return text


def _emit(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out)
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _emit(value, out)
        out.append("}")
    else:
        raise ValidationError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_deterministic(obj: Any) -> str:
    """JSON text with 17-significant-digit floats and stable key order.

    Output is parseable by ``json.loads`` (non-finite floats use the
    Infinity/NaN literals it accepts by default).
    """
    out: list[str] = []
    _emit(obj, out)
    return "".join(out)


def _tree_to_obj(node: IsoNode) -> dict:
    if isinstance(node, IsoLeaf):
        return {"type": "leaf", "count": int(node.count)}
    return {
        "type": "split",
        "dim": int(node.dim),
        "value": float(node.value),
        "left": _tree_to_obj(node.left),
        "right": _tree_to_obj(node.right),
    }


def _tree_from_obj(obj: dict) -> IsoNode:
    if obj["type"] == "leaf":
        return IsoLeaf(count=int(obj["count"]))
    return IsoSplit(
        dim=int(obj["dim"]),
        value=float(obj["value"]),
        left=_tree_from_obj(obj["left"]),
        right=_tree_from_obj(obj["right"]),
    )


def _float_list(a: np.ndarray) -> list:
    return np.asarray(a, dtype=np.float64).tolist()


def model_to_dict(model: AnyModel, cfg: ScorerConfig) -> dict:
    """Self-describing dict: kind tag, config echo, and parameter arrays."""
    if isinstance(model, GmmModel):
        params = {
            "num_components": int(model.num_components),
            "weights": _float_list(model.weights),
            "means": _float_list(model.means),
            "variances": _float_list(model.variances),
        }
        kind = "gmm"
    elif isinstance(model, PcaModel):
        params = {
            "num_components": int(model.num_components),
            "mean": _float_list(model.mean),
            "components": _float_list(model.components),
        }
        kind = "pca"
    elif isinstance(model, IsolationForestModel):
        params = {
            "num_trees": int(model.num_trees),
            "effective_subsample": int(model.effective_subsample),
            "dim": int(model.dim),
            "trees": [_tree_to_obj(t) for t in model.trees],
        }
        kind = "iforest"
    elif isinstance(model, LofModel):
        params = {
            "k_neighbors": int(model.k_neighbors),
            "points": _float_list(model.points),
            "k_distances": _float_list(model.k_distances),
            "lrd": _float_list(model.lrd),
        }
        kind = "lof"
    else:
        raise ValidationError(f"cannot serialize model of type {type(model).__name__}")
    return {"kind": kind, "config": cfg.to_dict(), "params": params}


def model_from_dict(d: dict) -> tuple[AnyModel, ScorerConfig]:
    """Inverse of ``model_to_dict``.

    Raises:
        DataFormatError: missing fields or an unknown kind tag.
    """
    try:
        kind = d["kind"]
        cfg = ScorerConfig.from_dict(d["config"])
        params = d["params"]
        if kind == "gmm":
            model: AnyModel = GmmModel(
                num_components=int(params["num_components"]),
                weights=np.asarray(params["weights"], dtype=np.float64),
                means=np.asarray(params["means"], dtype=np.float64),
                variances=np.asarray(params["variances"], dtype=np.float64),
            )
        elif kind == "pca":
            model = PcaModel(
                mean=np.asarray(params["mean"], dtype=np.float64),
                components=np.asarray(params["components"], dtype=np.float64),
                num_components=int(params["num_components"]),
            )
        elif kind == "iforest":
            model = IsolationForestModel(
                trees=[_tree_from_obj(t) for t in params["trees"]],
                num_trees=int(params["num_trees"]),
                effective_subsample=int(params["effective_subsample"]),
                dim=int(params["dim"]),
            )
        elif kind == "lof":
            model = LofModel(
                points=np.asarray(params["points"], dtype=np.float64),
                k_neighbors=int(params["k_neighbors"]),
                k_distances=np.asarray(params["k_distances"], dtype=np.float64),
                lrd=np.asarray(params["lrd"], dtype=np.float64),
            )
        else:
            raise DataFormatError(f"unknown model kind tag {kind!r}")
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"malformed model record: {exc}") from exc
    return model, cfg


def save_model(model: AnyModel, cfg: ScorerConfig, path: str | Path) -> None:
    Path(path).write_text(dumps_deterministic(model_to_dict(model, cfg)) + "\n")


def load_model(path: str | Path) -> tuple[AnyModel, ScorerConfig]:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc
    return model_from_dict(d)


def fit_model(X: np.ndarray, cfg: ScorerConfig) -> AnyModel:
    """Fit the scorer named by ``cfg.kind`` on the rows of X."""
    cfg = cfg.validated()
    if cfg.kind == "gmm":
        return gmm_fit(X, cfg.num_components, cfg)
    if cfg.kind == "pca":
        return pca_fit(X, cfg.num_components)
    if cfg.kind == "iforest":
        return iforest_fit(X, cfg)
    if cfg.kind == "lof":
        return lof_fit(X, cfg.k_neighbors)
    raise ValidationError(f"unsupported model kind {cfg.kind!r}")


def score_many(model: AnyModel, X: np.ndarray) -> np.ndarray:
    """Score every row of X under a fitted model of any kind."""
    if isinstance(model, GmmModel):
        return gmm_score_many(model, X)
    if isinstance(model, PcaModel):
        return pca_score_many(model, X)
    if isinstance(model, IsolationForestModel):
        return iforest_score_many(model, X)
    if isinstance(model, LofModel):
        return lof_score_many(model, X)
    raise ValidationError(f"cannot score with model of type {type(model).__name__}")
