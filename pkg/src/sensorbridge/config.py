"""YAML experiment configuration parsing.

An experiment file describes one run; a grid file describes a
(test sensor x variant) sweep sharing one dataset and window spec. Both
use the same ``dataset`` block, which is either

  dataset:
    type: manifest
    path: relative/or/absolute/manifest.yaml

or

  dataset:
    type: synthetic
    n_subjects: 4
    ...            # SyntheticSpec fields
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import yaml

from .evaluate import ExperimentConfig, VARIANTS
from .features import WindowSpec
from .ingest import DatasetManifest, SyntheticSpec, load_manifest

__all__ = [
    "ConfigError",
    "GridConfig",
    "load_experiment_config",
    "load_grid_config",
    "window_spec_from_dict",
    "synthetic_spec_from_dict",
]


class ConfigError(ValueError):
    pass


def window_spec_from_dict(raw: dict) -> WindowSpec:
    try:
        return WindowSpec(
            length_s=float(raw["length_s"]),
            step_s=float(raw["step_s"]),
            min_valid_fraction=float(raw.get("min_valid_fraction", 1.0)),
            label_rule=raw.get("label_rule", "majority"),
        )
    except KeyError as exc:
        raise ConfigError(f"window spec missing key {exc}") from None


def synthetic_spec_from_dict(raw: dict) -> SyntheticSpec:
    try:
        return SyntheticSpec(
            n_subjects=int(raw["n_subjects"]),
            n_sensors=int(raw["n_sensors"]),
            n_actions=int(raw["n_actions"]),
            activities=tuple(
                (str(label), tuple(int(a) for a in seq))
                for label, seq in raw["activities"]
            ),
            observability=tuple(tuple(float(v) for v in row)
                                for row in raw["observability"]),
            noise_std=float(raw["noise_std"]),
            samples_per_action=int(raw["samples_per_action"]),
            seed=int(raw["seed"]),
            sampling_rate_hz=float(raw.get("sampling_rate_hz", 20.0)),
            channels_per_sensor=int(raw.get("channels_per_sensor", 1)),
            subject_offset_std=float(raw.get("subject_offset_std", 0.0)),
            offset_scale=float(raw.get("offset_scale", 1.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"synthetic spec missing key {exc}") from None


def _dataset_from_dict(raw: dict, base_dir: str) -> DatasetManifest | SyntheticSpec:
    kind = raw.get("type")
    if kind == "manifest":
        path = raw.get("path")
        if not path:
            raise ConfigError("manifest dataset needs a 'path'")
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return load_manifest(path)
    if kind == "synthetic":
        return synthetic_spec_from_dict({k: v for k, v in raw.items() if k != "type"})
    raise ConfigError(f"dataset type must be 'manifest' or 'synthetic', got {kind!r}")


def _shared_fields(raw: dict) -> dict:
    return {
        "train_sensors": (tuple(raw["train_sensors"])
                          if raw.get("train_sensors") else None),
        "k_per_sensor": int(raw.get("k_per_sensor", 3)),
        "encoding_mode": raw.get("encoding_mode", "hard"),
        "seed": int(raw.get("seed", 0)),
        "max_gap_s": float(raw.get("max_gap_s", 1.0)),
        "mapping_lam": (float(raw["mapping_lam"])
                        if raw.get("mapping_lam") is not None else None),
        "c_inv": float(raw.get("c_inv", 1e-3)),
        "train_label_fraction": float(raw.get("train_label_fraction", 1.0)),
        "representation_rows": raw.get("representation_rows", "all"),
    }


def _load_yaml(path: str) -> dict:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return raw


def load_experiment_config(path: str, seed_override: int | None = None) -> ExperimentConfig:
    raw = _load_yaml(path)
    base = os.path.dirname(os.path.abspath(path))
    if seed_override is not None:
        raw["seed"] = seed_override
    try:
        return ExperimentConfig(
            dataset=_dataset_from_dict(raw["dataset"], base),
            window=window_spec_from_dict(raw["window"]),
            test_sensor=raw["test_sensor"],
            variant=raw["variant"],
            **_shared_fields(raw),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing key {exc}") from None


@dataclass(frozen=True)
class GridConfig:
    test_sensors: tuple[str, ...]
    variants: tuple[str, ...]
    base: ExperimentConfig  # variant/test_sensor fields are placeholders

    def cells(self) -> list[ExperimentConfig]:
        out = []
        for sensor in self.test_sensors:
            for variant in self.variants:
                out.append(ExperimentConfig(
                    dataset=self.base.dataset,
                    window=self.base.window,
                    test_sensor=sensor,
                    variant=variant,
                    train_sensors=self.base.train_sensors,
                    k_per_sensor=self.base.k_per_sensor,
                    encoding_mode=self.base.encoding_mode,
                    seed=self.base.seed,
                    max_gap_s=self.base.max_gap_s,
                    mapping_lam=self.base.mapping_lam,
                    c_inv=self.base.c_inv,
                    train_label_fraction=self.base.train_label_fraction,
                    representation_rows=self.base.representation_rows,
                ))
        return out


def load_grid_config(path: str, seed_override: int | None = None) -> GridConfig:
    raw = _load_yaml(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    if seed_override is not None:
        raw["seed"] = seed_override
    try:
        test_sensors = tuple(raw["test_sensors"])
        variants = tuple(raw.get("variants", VARIANTS))
        for v in variants:
            if v not in VARIANTS:
                raise ConfigError(f"{path}: unknown variant {v!r}")
        base = ExperimentConfig(
            dataset=_dataset_from_dict(raw["dataset"], base_dir),
            window=window_spec_from_dict(raw["window"]),
            test_sensor=test_sensors[0],
            variant=variants[0],
            **_shared_fields(raw),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing key {exc}") from None
    return GridConfig(test_sensors=test_sensors, variants=variants, base=base)
