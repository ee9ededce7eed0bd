"""Shared fixtures and helpers for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from sensorbridge import FeatureTable, SyntheticSpec, WindowSpec


@pytest.fixture
def window_1s() -> WindowSpec:
    return WindowSpec(length_s=1.0, step_s=1.0)


def make_table(n_rows: int = 6, groups=(("A", 4), ("B", 4)), seed: int = 0,
               subjects=("s0",), labels=None) -> FeatureTable:
    """Small random feature table with the given group layout."""
    rng = np.random.default_rng(seed)
    n_cols = sum(width for _, width in groups)
    column_groups = {}
    offset = 0
    for name, width in groups:
        column_groups[name] = (offset, offset + width)
        offset += width
    subject_of_row = [subjects[i % len(subjects)] for i in range(n_rows)]
    if labels is None:
        labels = [None] * n_rows
    return FeatureTable(
        rows=rng.normal(size=(n_rows, n_cols)),
        subject_of_row=subject_of_row,
        label_of_row=labels,
        column_groups=column_groups,
        window_meta=[(float(i), float(i + 1)) for i in range(n_rows)],
    )


def disjoint_actions_spec(noise_std: float = 0.0, seed: int = 5) -> SyntheticSpec:
    """Two activities with disjoint action sets, fully observable."""
    return SyntheticSpec(
        n_subjects=3, n_sensors=2, n_actions=4,
        activities=(("walk", (0, 1) * 2), ("cook", (2, 3) * 2)),
        observability=((1.0,) * 4, (1.0,) * 4),
        noise_std=noise_std, samples_per_action=40, seed=seed,
        sampling_rate_hz=20.0, channels_per_sensor=1,
    )


def nearest_centroid_oracle(table: FeatureTable, actions: np.ndarray,
                            action_to_label: dict) -> float:
    """Leave-one-subject-out nearest-centroid accuracy on known actions.

    Centroids are per-action training means; each test window is assigned
    the activity owning its nearest action centroid. This is the
    brute-force reference the pipeline results are compared against.
    """
    from sensorbridge import split_by_subject

    correct = total = 0
    for held in sorted(set(table.subject_of_row)):
        train, test = split_by_subject(table, held)
        train_actions = actions[[i for i, s in enumerate(table.subject_of_row)
                                 if s != held]]
        present = sorted(set(train_actions.tolist()))
        centroids = np.stack([train.rows[train_actions == a].mean(axis=0)
                              for a in present])
        d2 = ((test.rows[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        pred = [action_to_label[present[j]] for j in d2.argmin(axis=1)]
        correct += sum(p == t for p, t in zip(pred, test.label_of_row))
        total += len(pred)
    return correct / total
