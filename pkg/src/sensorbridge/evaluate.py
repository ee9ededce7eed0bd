"""Leave-one-subject-out evaluation harness and variant comparison.

Six variants are supported:

  Trad      classifier trained and tested on the test sensor's features
  Clusters  classifier on multi-sensor encodings at train AND test time
            (the upper bound for the mapped variants)
  LinR/LogR representation + linear/logistic mapping + classifier on the
            mapped single-sensor features
  LinB/LogB LinR/LogR plus the two-stage boosted combination with the
            traditional model

Aggregation pools predictions over all folds; mean-of-fold F1 is also
reported for transparency.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .classify import BoostedPairClassifier, SoftmaxClassifier
from .core import FeatureTable, child_rng, child_seed, select_sensor_columns, split_by_subject
from .features import Standardizer, WindowSpec, window_features
from .ingest import DatasetManifest, SyntheticSpec, generate_synthetic, impute_missing, load_dataset
from .mapping import RepresentationMapper
from .representation import ClusterRepresentation

__all__ = [
    "VARIANTS",
    "ExperimentConfig",
    "FoldReport",
    "RunReport",
    "micro_f1",
    "confusion_matrix",
    "run_experiment",
    "compare_runs",
    "ComparisonTable",
]

VARIANTS = ("Trad", "Clusters", "LinR", "LogR", "LinB", "LogB")
REPORT_FORMAT_VERSION = 1


def confusion_matrix(true, pred, class_set) -> np.ndarray:
    """K x K counts; rows are true classes, columns predictions."""
    index = {c: i for i, c in enumerate(class_set)}
    mat = np.zeros((len(class_set), len(class_set)), dtype=int)
    for t, p in zip(true, pred):
        mat[index[t], index[p]] += 1
    return mat


def micro_f1(true, pred) -> float:
    """Micro-averaged F1 over pooled per-class counts.

    For single-label multiclass with every instance predicted, pooled
    TP / (TP + FP) equals pooled TP / (TP + FN), so micro-F1 equals
    accuracy; this identity is covered by the test suite.
    """
    true = list(true)
    pred = list(pred)
    if len(true) != len(pred):
        raise ValueError(f"length mismatch: {len(true)} vs {len(pred)}")
    if not true:
        raise ValueError("micro_f1 of empty inputs")
    classes = sorted(set(true) | set(pred))
    mat = confusion_matrix(true, pred, classes)
    return micro_f1_from_confusion(mat)


def micro_f1_from_confusion(mat: np.ndarray) -> float:
    tp = float(np.trace(mat))
    fp = float(mat.sum() - np.trace(mat))
    fn = float(mat.sum() - np.trace(mat))
    denom = 2 * tp + fp + fn
    if denom == 0:
        raise ValueError("empty confusion matrix")
    return 2 * tp / denom


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetManifest | SyntheticSpec
    window: WindowSpec
    test_sensor: str
    variant: str
    train_sensors: tuple[str, ...] | None = None  # None: all sensors
    k_per_sensor: int = 3
    encoding_mode: str = "hard"
    seed: int = 0
    max_gap_s: float = 1.0
    mapping_lam: float | None = None
    c_inv: float = 1e-3
    train_label_fraction: float = 1.0  # labels kept for classifier training
    representation_rows: str = "all"  # {"all", "unlabeled_only"}

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; use one of {VARIANTS}")
        if self.train_sensors is not None:
            object.__setattr__(self, "train_sensors", tuple(self.train_sensors))
        if not 0 < self.train_label_fraction <= 1:
            raise ValueError("train_label_fraction must lie in (0, 1]")
        if self.representation_rows not in ("all", "unlabeled_only"):
            raise ValueError(
                f"unknown representation_rows {self.representation_rows!r}"
            )

    def echo(self) -> dict:
        if isinstance(self.dataset, SyntheticSpec):
            ds = {
                "type": "synthetic",
                "n_subjects": self.dataset.n_subjects,
                "n_sensors": self.dataset.n_sensors,
                "n_actions": self.dataset.n_actions,
                "activities": [[label, list(seq)] for label, seq in self.dataset.activities],
                "observability": [list(row) for row in self.dataset.observability],
                "noise_std": self.dataset.noise_std,
                "samples_per_action": self.dataset.samples_per_action,
                "seed": self.dataset.seed,
                "sampling_rate_hz": self.dataset.sampling_rate_hz,
                "channels_per_sensor": self.dataset.channels_per_sensor,
                "subject_offset_std": self.dataset.subject_offset_std,
                "offset_scale": self.dataset.offset_scale,
            }
        else:
            ds = {"type": "manifest", "name": self.dataset.name}
        return {
            "dataset": ds,
            "window": {
                "length_s": self.window.length_s,
                "step_s": self.window.step_s,
                "min_valid_fraction": self.window.min_valid_fraction,
                "label_rule": self.window.label_rule,
            },
            "test_sensor": self.test_sensor,
            "variant": self.variant,
            "train_sensors": list(self.train_sensors) if self.train_sensors else None,
            "k_per_sensor": self.k_per_sensor,
            "encoding_mode": self.encoding_mode,
            "seed": self.seed,
            "max_gap_s": self.max_gap_s,
            "mapping_lam": self.mapping_lam,
            "c_inv": self.c_inv,
            "train_label_fraction": self.train_label_fraction,
            "representation_rows": self.representation_rows,
        }


@dataclass(frozen=True)
class FoldReport:
    held_out: str
    train_subjects: tuple[str, ...]
    micro_f1: float
    confusion: tuple[tuple[int, ...], ...]
    n_test: int

    def to_dict(self) -> dict:
        return {
            "held_out": self.held_out,
            "train_subjects": list(self.train_subjects),
            "micro_f1": self.micro_f1,
            "confusion": [list(row) for row in self.confusion],
            "n_test": self.n_test,
        }


@dataclass(frozen=True)
class RunReport:
    config: dict
    class_set: tuple[str, ...]
    folds: tuple[FoldReport, ...]
    pooled_micro_f1: float
    mean_fold_f1: float
    per_class: dict  # class -> {"precision": ..., "recall": ...}
    wall_time_s: float

    def pooled_confusion(self) -> np.ndarray:
        total = np.zeros((len(self.class_set), len(self.class_set)), dtype=int)
        for fold in self.folds:
            total += np.array(fold.confusion, dtype=int)
        return total

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "format_version": REPORT_FORMAT_VERSION,
            "config": self.config,
            "class_set": list(self.class_set),
            "folds": [f.to_dict() for f in self.folds],
            "pooled_micro_f1": self.pooled_micro_f1,
            "mean_fold_f1": self.mean_fold_f1,
            "per_class": self.per_class,
        }
        if include_timing:
            out["wall_time_s"] = self.wall_time_s
        return out

    def to_json(self, include_timing: bool = False) -> str:
        # Canonical bytes: identical config + seed must serialize
        # identically, so timing is excluded by default.
        return json.dumps(self.to_dict(include_timing), sort_keys=True,
                          separators=(",", ":"))


def _per_class_stats(mat: np.ndarray, class_set) -> dict:
    stats = {}
    for i, cls in enumerate(class_set):
        tp = float(mat[i, i])
        fp = float(mat[:, i].sum() - mat[i, i])
        fn = float(mat[i, :].sum() - mat[i, i])
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        stats[cls] = {"precision": precision, "recall": recall}
    return stats


def build_feature_table(config: ExperimentConfig) -> tuple[FeatureTable, tuple[str, ...]]:
    """Materialize the windowed multi-sensor feature table for a config."""
    if isinstance(config.dataset, SyntheticSpec):
        ds = generate_synthetic(config.dataset)
    else:
        ds = load_dataset(config.dataset)
    ds = impute_missing(ds, config.max_gap_s)
    table = window_features(ds, config.window)
    return table, ds.class_set


def _drop_labels(table: FeatureTable, fraction: float, rng) -> FeatureTable:
    """Keep ``fraction`` of the labeled rows labeled (per class, seeded)."""
    labels = list(table.label_of_row)
    labeled_idx = [i for i, lab in enumerate(labels) if lab is not None]
    n_keep = max(2, int(round(fraction * len(labeled_idx))))
    keep = set(rng.choice(labeled_idx, size=min(n_keep, len(labeled_idx)),
                          replace=False).tolist())
    # Guarantee every class keeps at least one labeled row.
    per_class_first = {}
    for i in labeled_idx:
        per_class_first.setdefault(labels[i], i)
    keep |= set(per_class_first.values())
    new_labels = [lab if (lab is None or i in keep) else None
                  for i, lab in enumerate(labels)]
    return FeatureTable(
        rows=table.rows,
        subject_of_row=table.subject_of_row,
        label_of_row=new_labels,
        column_groups=dict(table.column_groups),
        window_meta=table.window_meta,
    )


def _fit_fold_models(config: ExperimentConfig, std_train: FeatureTable,
                     class_set, fold_seed: int):
    """Fit everything a variant needs on (standardized) training rows only."""
    train_sensors = (config.train_sensors if config.train_sensors is not None
                     else std_train.sensor_ids)
    lab_train = std_train.labeled()
    if lab_train.n_rows == 0:
        raise ValueError("no labeled training rows in this fold")
    labels = list(lab_train.label_of_row)

    def classifier():
        return SoftmaxClassifier(c_inv=config.c_inv, class_order=class_set)

    models: dict = {"train_sensors": train_sensors}
    if config.variant == "Trad":
        clf = classifier()
        clf.fit(select_sensor_columns(lab_train, [config.test_sensor]).rows, labels)
        models["clf"] = clf
        return models

    rep = ClusterRepresentation(
        k_per_sensor=config.k_per_sensor,
        encoding_mode=config.encoding_mode,
        seed=fold_seed,
    )
    multi_train = select_sensor_columns(std_train, list(train_sensors))
    if config.representation_rows == "unlabeled_only":
        rep_rows = multi_train.take(
            [i for i, lab in enumerate(multi_train.label_of_row) if lab is None]
        )
        if rep_rows.n_rows == 0:
            raise ValueError(
                "representation_rows='unlabeled_only' but the training fold "
                "has no unlabeled rows"
            )
    else:
        rep_rows = multi_train
    rep.fit(rep_rows)
    models["rep"] = rep

    if config.variant == "Clusters":
        clf = classifier()
        clf.fit(rep.transform(select_sensor_columns(lab_train, list(train_sensors))), labels)
        models["clf"] = clf
        return models

    kind = "linear" if config.variant in ("LinR", "LinB") else "logistic"
    mapper = RepresentationMapper(kind=kind, lam=config.mapping_lam)
    single_train = select_sensor_columns(std_train, [config.test_sensor])
    mapper.fit(single_train, rep.transform(multi_train))
    models["mapper"] = mapper

    lab_single = select_sensor_columns(lab_train, [config.test_sensor])
    G_train = mapper.transform(lab_single)
    if config.variant in ("LinR", "LogR"):
        clf = classifier()
        clf.fit(G_train, labels)
        models["clf"] = clf
    else:
        ens = BoostedPairClassifier(stage1=classifier(), stage2=classifier())
        ens.fit(G_train, lab_single.rows, labels)
        models["ensemble"] = ens
    return models


def _predict_fold(config: ExperimentConfig, models: dict,
                  std_test: FeatureTable) -> list:
    train_sensors = models["train_sensors"]
    if config.variant == "Trad":
        X = select_sensor_columns(std_test, [config.test_sensor]).rows
        return models["clf"].predict(X)
    if config.variant == "Clusters":
        enc = models["rep"].transform(select_sensor_columns(std_test, list(train_sensors)))
        return models["clf"].predict(enc)
    single = select_sensor_columns(std_test, [config.test_sensor])
    G = models["mapper"].transform(single)
    if config.variant in ("LinR", "LogR"):
        return models["clf"].predict(G)
    return models["ensemble"].predict(G, single.rows)


def run_experiment(config: ExperimentConfig,
                   prepared: tuple[FeatureTable, tuple[str, ...]] | None = None
                   ) -> RunReport:
    """Leave-one-subject-out run of one variant on one test sensor.

    ``prepared`` may carry a precomputed (table, class_set) pair so grid
    runs share the windowing work; it must come from
    :func:`build_feature_table` on the same config.
    """
    started = time.monotonic()
    if prepared is None:
        table, class_set = build_feature_table(config)
    else:
        table, class_set = prepared

    subjects = sorted(set(table.subject_of_row))
    if len(subjects) < 2:
        raise ValueError(f"need at least 2 subjects, got {subjects}")
    if config.test_sensor not in table.column_groups:
        raise ValueError(
            f"test sensor {config.test_sensor!r} not in table groups "
            f"{sorted(table.column_groups)}"
        )
    for sensor in config.train_sensors or ():
        if sensor not in table.column_groups:
            raise ValueError(f"training sensor {sensor!r} not in table groups")

    folds = []
    pooled = np.zeros((len(class_set), len(class_set)), dtype=int)
    fold_f1 = []
    for held_out in subjects:
        train, test = split_by_subject(table, held_out)
        # Leak check: nothing of the held-out subject may reach a fitting
        # stage.
        assert held_out not in set(train.subject_of_row)
        if config.train_label_fraction < 1.0:
            rng = child_rng(config.seed, f"labels/{held_out}")
            train = _drop_labels(train, config.train_label_fraction, rng)

        standardizer = Standardizer().fit(train.rows)
        std_train = standardizer.transform_table(train)
        std_test = standardizer.transform_table(test)

        fold_seed = child_seed(config.seed, f"fold/{held_out}")
        models = _fit_fold_models(config, std_train, class_set, fold_seed)

        lab_test = std_test.labeled()
        if lab_test.n_rows == 0:
            raise ValueError(f"held-out subject {held_out!r} has no labeled rows")
        pred = _predict_fold(config, models, lab_test)
        true = list(lab_test.label_of_row)
        mat = confusion_matrix(true, pred, class_set)
        pooled += mat
        f1 = micro_f1_from_confusion(mat)
        fold_f1.append(f1)
        folds.append(FoldReport(
            held_out=held_out,
            train_subjects=tuple(s for s in subjects if s != held_out),
            micro_f1=f1,
            confusion=tuple(tuple(int(v) for v in row) for row in mat),
            n_test=lab_test.n_rows,
        ))

    return RunReport(
        config=config.echo(),
        class_set=tuple(class_set),
        folds=tuple(folds),
        pooled_micro_f1=micro_f1_from_confusion(pooled),
        mean_fold_f1=float(np.mean(fold_f1)),
        per_class=_per_class_stats(pooled, class_set),
        wall_time_s=time.monotonic() - started,
    )


@dataclass(frozen=True)
class ComparisonTable:
    """Pooled micro-F1 by (test sensor x variant) with deltas vs Trad."""

    sensors: tuple[str, ...]
    variants: tuple[str, ...]
    scores: tuple[tuple[float | None, ...], ...]  # None: cell missing/failed

    def best_variant(self, sensor: str) -> str | None:
        i = self.sensors.index(sensor)
        best, best_v = None, None
        for v, s in zip(self.variants, self.scores[i]):
            if s is not None and (best is None or s > best):  # ties keep earlier
                best, best_v = s, v
        return best_v

    def delta_vs_trad(self, sensor: str, variant: str) -> float | None:
        i = self.sensors.index(sensor)
        if "Trad" not in self.variants:
            return None
        trad = self.scores[i][self.variants.index("Trad")]
        score = self.scores[i][self.variants.index(variant)]
        if trad is None or score is None:
            return None
        return 100.0 * (score - trad)  # percentage points

    def to_csv(self) -> str:
        lines = ["sensor," + ",".join(self.variants) + ",best"]
        for i, sensor in enumerate(self.sensors):
            cells = [
                "" if s is None else f"{s:.6f}" for s in self.scores[i]
            ]
            lines.append(f"{sensor}," + ",".join(cells) + f",{self.best_variant(sensor)}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max([len("sensor")] + [len(s) for s in self.sensors]) + 2
        header = "sensor".ljust(width) + "".join(v.rjust(10) for v in self.variants)
        lines = [header]
        for i, sensor in enumerate(self.sensors):
            best = self.best_variant(sensor)
            cells = []
            for v, s in zip(self.variants, self.scores[i]):
                if s is None:
                    cells.append("-".rjust(10))
                else:
                    mark = "*" if v == best else " "
                    cells.append(f"{s:.4f}{mark}".rjust(10))
            lines.append(sensor.ljust(width) + "".join(cells))
        if "Trad" in self.variants:
            lines.append("")
            lines.append("delta vs Trad (pp):")
            for sensor in self.sensors:
                deltas = []
                for v in self.variants:
                    if v == "Trad":
                        continue
                    d = self.delta_vs_trad(sensor, v)
                    deltas.append(f"{v} {d:+.1f}" if d is not None else f"{v} -")
                lines.append(f"  {sensor}: " + ", ".join(deltas))
        return "\n".join(lines) + "\n"


def compare_runs(reports: list[RunReport]) -> ComparisonTable:
    """Tabulate pooled micro-F1 by (test sensor, variant).

    All reports must share the dataset and window spec; the best variant
    per sensor is flagged and deltas vs Trad are reported in percentage
    points.
    """
    if not reports:
        raise ValueError("no reports to compare")
    reference = {k: reports[0].config[k] for k in ("dataset", "window")}
    for rep in reports[1:]:
        if {k: rep.config[k] for k in ("dataset", "window")} != reference:
            raise ValueError("reports mix datasets or window specs")
    sensors: dict[str, None] = {}
    cells: dict[tuple[str, str], float] = {}
    present_variants: dict[str, None] = {}
    for rep in reports:
        sensor = rep.config["test_sensor"]
        variant = rep.config["variant"]
        key = (sensor, variant)
        if key in cells:
            raise ValueError(f"duplicate report for {key}")
        sensors.setdefault(sensor, None)
        present_variants.setdefault(variant, None)
        cells[key] = rep.pooled_micro_f1
    variants = tuple(v for v in VARIANTS if v in present_variants)
    scores = tuple(
        tuple(cells.get((sensor, v)) for v in variants) for sensor in sensors
    )
    return ComparisonTable(sensors=tuple(sensors), variants=variants, scores=scores)
