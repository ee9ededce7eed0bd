"""Sliding-window segmentation and per-channel statistical features.

Per channel each window yields four features, in order: mean, standard
deviation (population convention), range (max - min), and mean - median.
The same features are used for every dataset.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .core import FeatureTable, SensorDataset

__all__ = ["WindowSpec", "window_features", "Standardizer", "FEATURES_PER_CHANNEL"]

FEATURES_PER_CHANNEL = 4


@dataclass(frozen=True)
class WindowSpec:
    length_s: float
    step_s: float
    min_valid_fraction: float = 1.0
    label_rule: str = "majority"  # {"majority", "strict"}

    def __post_init__(self):
        if self.length_s <= 0 or self.step_s <= 0:
            raise ValueError("length_s and step_s must be positive")
        if not 0 < self.min_valid_fraction <= 1:
            raise ValueError("min_valid_fraction must lie in (0, 1]")
        if self.label_rule not in ("majority", "strict"):
            raise ValueError(f"unknown label_rule {self.label_rule!r}")


def _channel_features(values: np.ndarray) -> tuple[float, float, float, float]:
    mean = float(np.mean(values))
    std = float(np.std(values))  # population convention
    rng = float(np.max(values) - np.min(values))
    return mean, std, rng, mean - float(np.median(values))


def _window_label(spec: WindowSpec, start: float, end: float,
                  intervals) -> tuple[str | None, bool]:
    """Return (label, keep) for a window under the configured label rule."""
    if spec.label_rule == "strict":
        for iv_start, iv_end, activity in intervals:
            if iv_start <= start and end <= iv_end:
                return activity, True
        return None, False
    # majority: label with the longest overlap, ties to the earliest
    # interval start.
    best: tuple[float, float, str] | None = None  # (-overlap, start, label)
    for iv_start, iv_end, activity in intervals:
        overlap = min(end, iv_end) - max(start, iv_start)
        if overlap <= 0:
            continue
        key = (-overlap, iv_start, activity)
        if best is None or key < best:
            best = key
    if best is None:
        return None, True  # unlabeled rows are first-class
    return best[2], True


def window_features(ds: SensorDataset, spec: WindowSpec) -> FeatureTable:
    """Segment each subject's recording and compute per-channel features.

    Windows are anchored at each subject's first timestamp and cover
    [start, start + length). A window is dropped when any channel's valid
    fraction falls below ``min_valid_fraction`` or has no samples in the
    window. Column groups assign each sensor a contiguous block of
    4 * (channel count) columns.
    """
    sensor_ids = ds.sensor_ids
    if not sensor_ids:
        raise ValueError("dataset has no channels")
    channel_layout = [(sid, cid) for sid in sensor_ids for cid in ds.channel_ids(sid)]
    column_groups: dict[str, tuple[int, int]] = {}
    offset = 0
    for sid in sensor_ids:
        width = FEATURES_PER_CHANNEL * len(ds.channel_ids(sid))
        column_groups[sid] = (offset, offset + width)
        offset += width

    rows = []
    subjects_of_rows = []
    labels_of_rows = []
    window_meta = []
    for subject in ds.subjects:
        span = ds.subject_span(subject)
        if span is None:
            continue
        t0, t1 = span
        duration = t1 - t0
        if duration < spec.length_s:
            continue  # subject contributes zero rows
        subject_channels = {}
        for sid, cid in channel_layout:
            ch = ds.channels.get((subject, sid, cid))
            if ch is None:
                raise ValueError(
                    f"subject {subject!r} is missing channel {sid}/{cid}"
                )
            subject_channels[(sid, cid)] = ch
        intervals = ds.labels.get(subject, ())

        n_windows = int(np.floor((duration - spec.length_s) / spec.step_s + 1e-9)) + 1
        for w in range(n_windows):
            start = t0 + w * spec.step_s
            end = start + spec.length_s
            feats = []
            keep = True
            for sid, cid in channel_layout:
                ch = subject_channels[(sid, cid)]
                lo = np.searchsorted(ch.timestamps, start, side="left")
                hi = np.searchsorted(ch.timestamps, end, side="left")
                if hi <= lo:
                    keep = False
                    break
                valid = ch.valid[lo:hi]
                frac = valid.mean()
                if frac < spec.min_valid_fraction or not valid.any():
                    keep = False
                    break
                feats.extend(_channel_features(ch.values[lo:hi][valid]))
            if not keep:
                continue
            label, keep = _window_label(spec, start, end, intervals)
            if not keep:
                continue
            rows.append(feats)
            subjects_of_rows.append(subject)
            labels_of_rows.append(label)
            window_meta.append((start, end))

    if not rows:
        raise ValueError("windowing produced zero rows")
    return FeatureTable(
        rows=np.array(rows, dtype=float),
        subject_of_row=subjects_of_rows,
        label_of_row=labels_of_rows,
        column_groups=column_groups,
        window_meta=window_meta,
    )


class Standardizer(BaseEstimator, TransformerMixin):
    """Per-column zero-mean unit-variance scaling, std floored at 1e-12.

    Fit only on training rows; the floor guarantees finite outputs for
    constant columns.
    """

    def __init__(self, eps: float = 1e-12):
        self.eps = eps

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("fit requires a non-empty 2-D matrix")
        self.mean_ = X.mean(axis=0)
        self.scale_ = np.maximum(X.std(axis=0), self.eps)
        return self

    def transform(self, X):
        if not hasattr(self, "mean_"):
            raise NotFittedError("Standardizer is not fitted")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mean_.shape[0]:
            raise ValueError(
                f"expected {self.mean_.shape[0]} columns, got "
                f"{X.shape[1] if X.ndim == 2 else X.shape}"
            )
        return (X - self.mean_) / self.scale_

    def transform_table(self, table: FeatureTable) -> FeatureTable:
        return table.with_rows(self.transform(table.rows))
