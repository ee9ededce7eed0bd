"""Core data model: sensor time series, windowed feature tables, seeding.

Everything here is immutable after construction and safe to share across
workers. Subjects, sensors and channels are identified by strings so that
datasets with different layouts share one schema.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SensorChannel",
    "SensorDataset",
    "FeatureTable",
    "child_seed",
    "child_rng",
    "select_sensor_columns",
    "split_by_subject",
]


def child_seed(seed: int, name: str) -> int:
    """Derive a reproducible child seed for a named pipeline component.

    The derivation only depends on ``seed`` and ``name``, so components can
    be reordered or parallelized without changing their randomness.
    """
    digest = hashlib.blake2b(
        f"{seed}:{name}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def child_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(child_seed(seed, name))


@dataclass(frozen=True)
class SensorChannel:
    """One axis of one physical sensor for one subject.

    ``valid`` flags missing samples explicitly; they are never silently
    dropped.
    """

    sensor_id: str
    channel_id: str
    sampling_rate_hz: float
    timestamps: np.ndarray  # seconds, strictly increasing
    values: np.ndarray
    valid: np.ndarray  # bool, same length

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        ok = np.asarray(self.valid, dtype=bool)
        if self.sampling_rate_hz <= 0:
            raise ValueError(
                f"sampling_rate_hz must be > 0, got {self.sampling_rate_hz}"
            )
        if not (len(ts) == len(vals) == len(ok)):
            raise ValueError("timestamps, values and valid must align")
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            bad = int(np.flatnonzero(np.diff(ts) <= 0)[0]) + 1
            raise ValueError(
                f"timestamps must be strictly increasing; violation at "
                f"sample {bad} of {self.sensor_id}/{self.channel_id}"
            )
        for name, arr in (("timestamps", ts), ("values", vals), ("valid", ok)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_samples(self) -> int:
        return len(self.timestamps)

    def time_span(self) -> tuple[float, float]:
        return float(self.timestamps[0]), float(self.timestamps[-1])


@dataclass(frozen=True)
class SensorDataset:
    """Per-subject, per-channel time series with activity label intervals."""

    subjects: tuple[str, ...]
    channels: dict[tuple[str, str, str], SensorChannel]  # (subject, sensor, channel)
    labels: dict[str, tuple[tuple[float, float, str], ...]]  # subject -> (start, end, activity)
    class_set: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "class_set", tuple(self.class_set))
        labels = {s: tuple(ivs) for s, ivs in self.labels.items()}
        object.__setattr__(self, "labels", labels)
        known = set(self.class_set)
        for subject, intervals in labels.items():
            prev_end = -np.inf
            for start, end, activity in sorted(intervals):
                if start < prev_end:
                    raise ValueError(
                        f"overlapping label intervals for subject {subject!r} "
                        f"near t={start}"
                    )
                if end <= start:
                    raise ValueError(
                        f"empty label interval [{start}, {end}] for {subject!r}"
                    )
                if activity not in known:
                    raise ValueError(
                        f"activity {activity!r} not in class_set {self.class_set}"
                    )
                prev_end = end
            span = self.subject_span(subject)
            if span is not None and intervals:
                lo = min(iv[0] for iv in intervals)
                hi = max(iv[1] for iv in intervals)
                if lo < span[0] - 1e-9 or hi > span[1] + 1e-9:
                    raise ValueError(
                        f"label interval [{lo}, {hi}] outside recording span "
                        f"{span} of subject {subject!r}"
                    )

    def subject_span(self, subject: str) -> tuple[float, float] | None:
        spans = [
            ch.time_span()
            for (subj, _, _), ch in self.channels.items()
            if subj == subject and ch.n_samples > 0
        ]
        if not spans:
            return None
        return min(s[0] for s in spans), max(s[1] for s in spans)

    @property
    def sensor_ids(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for _, sensor_id, _ in self.channels:
            seen.setdefault(sensor_id, None)
        return tuple(seen)

    def channel_ids(self, sensor_id: str) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for _, sid, cid in self.channels:
            if sid == sensor_id:
                seen.setdefault(cid, None)
        return tuple(seen)


@dataclass(frozen=True)
class FeatureTable:
    """Windowed feature matrix with row and column metadata.

    ``column_groups`` maps each sensor_id to its contiguous [start, stop)
    column range; every column belongs to exactly one group. Rows with a
    ``None`` label are unlabeled and are first-class citizens (representation
    and mapping learning do not need labels).
    """

    rows: np.ndarray  # (n_rows, n_cols) float
    subject_of_row: tuple[str, ...]
    label_of_row: tuple[str | None, ...]
    column_groups: dict[str, tuple[int, int]]
    window_meta: tuple[tuple[float, float], ...]  # per-row (start, end) seconds

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("feature rows contain non-finite values")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "subject_of_row", tuple(self.subject_of_row))
        object.__setattr__(self, "label_of_row", tuple(self.label_of_row))
        object.__setattr__(self, "window_meta", tuple(map(tuple, self.window_meta)))
        n = rows.shape[0]
        if not (len(self.subject_of_row) == len(self.label_of_row) == len(self.window_meta) == n):
            raise ValueError("row metadata must align with the matrix")
        covered = np.zeros(rows.shape[1], dtype=bool)
        for sensor_id, (start, stop) in self.column_groups.items():
            if not (0 <= start < stop <= rows.shape[1]):
                raise ValueError(
                    f"group {sensor_id!r} range [{start}, {stop}) out of bounds"
                )
            if covered[start:stop].any():
                raise ValueError(f"group {sensor_id!r} overlaps another group")
            covered[start:stop] = True
        if not covered.all():
            raise ValueError("some columns belong to no sensor group")

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_cols(self) -> int:
        return self.rows.shape[1]

    @property
    def sensor_ids(self) -> tuple[str, ...]:
        return tuple(self.column_groups)

    @property
    def subjects(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for s in self.subject_of_row:
            seen.setdefault(s, None)
        return tuple(seen)

    def group_columns(self, sensor_id: str) -> slice:
        start, stop = self.column_groups[sensor_id]
        return slice(start, stop)

    def with_rows(self, rows: np.ndarray) -> "FeatureTable":
        """Same metadata, new matrix (e.g. after standardization)."""
        return FeatureTable(
            rows=rows,
            subject_of_row=self.subject_of_row,
            label_of_row=self.label_of_row,
            column_groups=dict(self.column_groups),
            window_meta=self.window_meta,
        )

    def take(self, indices) -> "FeatureTable":
        indices = np.asarray(indices, dtype=int)
        return FeatureTable(
            rows=self.rows[indices],
            subject_of_row=[self.subject_of_row[i] for i in indices],
            label_of_row=[self.label_of_row[i] for i in indices],
            column_groups=dict(self.column_groups),
            window_meta=[self.window_meta[i] for i in indices],
        )

    def labeled(self) -> "FeatureTable":
        idx = [i for i, lab in enumerate(self.label_of_row) if lab is not None]
        return self.take(idx)


def select_sensor_columns(table: FeatureTable, sensor_ids: list[str]) -> FeatureTable:
    """Return a table with exactly the requested groups' columns.

    Group metadata is re-indexed to the new column positions.
    """
    missing = [s for s in sensor_ids if s not in table.column_groups]
    if missing:
        raise KeyError(
            f"unknown sensor id(s) {missing}; available: "
            f"{sorted(table.column_groups)}"
        )
    pieces = []
    groups: dict[str, tuple[int, int]] = {}
    offset = 0
    for sensor_id in sensor_ids:
        start, stop = table.column_groups[sensor_id]
        pieces.append(table.rows[:, start:stop])
        groups[sensor_id] = (offset, offset + (stop - start))
        offset += stop - start
    return FeatureTable(
        rows=np.hstack(pieces) if pieces else np.empty((table.n_rows, 0)),
        subject_of_row=table.subject_of_row,
        label_of_row=table.label_of_row,
        column_groups=groups,
        window_meta=table.window_meta,
    )


def split_by_subject(table: FeatureTable, held_out: str) -> tuple[FeatureTable, FeatureTable]:
    """Partition rows into (train, test) with ``held_out``'s rows as test.

    Row order is preserved within each part.
    """
    if held_out not in table.subject_of_row:
        raise KeyError(
            f"unknown subject {held_out!r}; available: {sorted(set(table.subject_of_row))}"
        )
    test_idx = [i for i, s in enumerate(table.subject_of_row) if s == held_out]
    train_idx = [i for i, s in enumerate(table.subject_of_row) if s != held_out]
    return table.take(train_idx), table.take(test_idx)
