"""Versioned text serialization for fitted models.

JSON with full-precision floats (Python's shortest round-trip repr), so a
save/load cycle reproduces every parameter bit-exactly.
"""
from __future__ import annotations

import json

import numpy as np

from .classify import BoostedPairClassifier, SoftmaxClassifier
from .features import Standardizer
from .mapping import RepresentationMapper
from .representation import ClusterRepresentation

__all__ = ["model_to_json", "model_from_json", "save_model", "load_model"]

MODEL_FORMAT_VERSION = 1


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_to_json(model) -> str:
    if isinstance(model, Standardizer):
        payload = {
            "kind": "standardizer",
            "mean": _arr(model.mean_),
            "scale": _arr(model.scale_),
            "eps": model.eps,
        }
    elif isinstance(model, ClusterRepresentation):
        payload = {
            "kind": "representation",
            "k_per_sensor": model.k_per_sensor,
            "encoding_mode": model.encoding_mode,
            "seed": model.seed,
            "groups": {s: list(r) for s, r in model.groups_.items()},
            "centroids": {s: _arr(c) for s, c in model.centroids_.items()},
        }
    elif isinstance(model, RepresentationMapper):
        payload = {
            "kind": "mapping",
            "mapping_kind": model.kind,
            "lam": model._effective_lam(),
            "n_inputs": model.n_inputs_,
            "input_sensor_ids": (list(model.input_sensor_ids_)
                                 if model.input_sensor_ids_ else None),
            "weights": _arr(model.weights_),
            "intercepts": _arr(model.intercepts_),
        }
    elif isinstance(model, SoftmaxClassifier):
        payload = {
            "kind": "classifier",
            "c_inv": model.c_inv,
            "classes": list(model.classes_),
            "coef": _arr(model.coef_),
            "intercept": _arr(model.intercept_),
        }
    elif isinstance(model, BoostedPairClassifier):
        payload = {
            "kind": "boosted",
            "classes": list(model.classes_),
            "alphas": list(model.alphas_),
            "train_errors": list(model.train_errors_),
            "stage1": json.loads(model_to_json(model.stage1_)),
            "stage2": json.loads(model_to_json(model.stage2_)),
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    payload["format_version"] = MODEL_FORMAT_VERSION
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def model_from_json(text: str):
    payload = json.loads(text)
    return _from_payload(payload)


def _from_payload(payload: dict):
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    kind = payload.get("kind")
    if kind == "standardizer":
        model = Standardizer(eps=payload["eps"])
        model.mean_ = np.array(payload["mean"])
        model.scale_ = np.array(payload["scale"])
        return model
    if kind == "representation":
        model = ClusterRepresentation(
            k_per_sensor=payload["k_per_sensor"],
            encoding_mode=payload["encoding_mode"],
            seed=payload["seed"],
        )
        model.groups_ = {s: tuple(r) for s, r in payload["groups"].items()}
        model.centroids_ = {s: np.array(c) for s, c in payload["centroids"].items()}
        return model
    if kind == "mapping":
        model = RepresentationMapper(kind=payload["mapping_kind"], lam=payload["lam"])
        model.n_inputs_ = payload["n_inputs"]
        model.input_sensor_ids_ = (tuple(payload["input_sensor_ids"])
                                   if payload["input_sensor_ids"] else None)
        model.weights_ = np.array(payload["weights"])
        model.intercepts_ = np.array(payload["intercepts"])
        return model
    if kind == "classifier":
        model = SoftmaxClassifier(c_inv=payload["c_inv"])
        model.classes_ = tuple(payload["classes"])
        model.coef_ = np.array(payload["coef"])
        model.intercept_ = np.array(payload["intercept"])
        return model
    if kind == "boosted":
        model = BoostedPairClassifier()
        model.classes_ = tuple(payload["classes"])
        model.alphas_ = tuple(payload["alphas"])
        model.train_errors_ = tuple(payload["train_errors"])
        model.stage1_ = _from_payload(payload["stage1"])
        model.stage2_ = _from_payload(payload["stage2"])
        return model
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_json(model))


def load_model(path: str):
    with open(path) as fh:
        return model_from_json(fh.read())
