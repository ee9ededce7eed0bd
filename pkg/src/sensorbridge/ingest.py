"""Dataset loading, missing-data imputation, and the synthetic generator.

Canonical on-disk format:
  sample CSV  header ``timestamp,subject,sensor_id,channel_id,value``
              (value may be the literal ``NaN`` meaning invalid)
  label CSV   header ``subject,start,end,activity``
  manifest    YAML file with the :class:`DatasetManifest` fields

All timestamps are seconds as decimal reals. Conversion of the original
raw dataset distributions into this schema is the user's responsibility.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .core import SensorChannel, SensorDataset, child_rng

__all__ = [
    "SensorDeclaration",
    "DatasetManifest",
    "SyntheticSpec",
    "load_manifest",
    "load_dataset",
    "save_dataset",
    "impute_missing",
    "generate_synthetic",
]

SAMPLE_HEADER = ["timestamp", "subject", "sensor_id", "channel_id", "value"]
LABEL_HEADER = ["subject", "start", "end", "activity"]


class SchemaError(ValueError):
    """A CSV or manifest file violates the canonical schema."""


@dataclass(frozen=True)
class SensorDeclaration:
    sensor_id: str
    channel_ids: tuple[str, ...]
    sampling_rate_hz: float
    quality_tier: str = "high"  # {"high", "low"}

    def __post_init__(self):
        object.__setattr__(self, "channel_ids", tuple(self.channel_ids))
        if self.quality_tier not in ("high", "low"):
            raise SchemaError(
                f"quality_tier must be 'high' or 'low', got {self.quality_tier!r}"
            )


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    sample_files: tuple[str, ...]
    label_file: str
    sensors: tuple[SensorDeclaration, ...]
    class_set: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sample_files", tuple(self.sample_files))
        object.__setattr__(self, "sensors", tuple(self.sensors))
        object.__setattr__(self, "class_set", tuple(self.class_set))

    def sensors_by_tier(self, tier: str) -> tuple[str, ...]:
        return tuple(s.sensor_id for s in self.sensors if s.quality_tier == tier)


def load_manifest(path: str) -> DatasetManifest:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: manifest must be a mapping")
    try:
        sensors = tuple(
            SensorDeclaration(
                sensor_id=s["sensor_id"],
                channel_ids=tuple(s["channel_ids"]),
                sampling_rate_hz=float(s["sampling_rate_hz"]),
                quality_tier=s.get("quality_tier", "high"),
            )
            for s in raw["sensors"]
        )
        base = os.path.dirname(os.path.abspath(path))
        return DatasetManifest(
            name=raw["name"],
            sample_files=tuple(os.path.join(base, f) for f in raw["sample_files"]),
            label_file=os.path.join(base, raw["label_file"]),
            sensors=sensors,
            class_set=tuple(raw["class_set"]),
        )
    except KeyError as exc:
        raise SchemaError(f"{path}: missing manifest key {exc}") from None


def _parse_value(text: str, path: str, line_no: int):
    text = text.strip()
    if text.lower() == "nan":
        return math.nan, False
    try:
        return float(text), True
    except ValueError:
        raise SchemaError(
            f"{path}:{line_no}: column 'value' is not a number: {text!r}"
        ) from None


def _parse_float(text: str, path: str, line_no: int, col: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SchemaError(
            f"{path}:{line_no}: column {col!r} is not a number: {text!r}"
        ) from None


def load_dataset(manifest: DatasetManifest) -> SensorDataset:
    """Load a :class:`SensorDataset` from the canonical CSV schema.

    Invalid samples (value ``NaN``) are flagged, never dropped. Timestamp
    regressions and schema violations raise :class:`SchemaError` with file
    and line.
    """
    declared: dict[str, SensorDeclaration] = {s.sensor_id: s for s in manifest.sensors}
    # (subject, sensor, channel) -> [timestamps, values, valid]
    series: dict[tuple[str, str, str], tuple[list, list, list]] = {}
    subjects: dict[str, None] = {}
    for path in manifest.sample_files:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != SAMPLE_HEADER:
                raise SchemaError(
                    f"{path}:1: expected header {','.join(SAMPLE_HEADER)}, "
                    f"got {header}"
                )
            for line_no, row in enumerate(reader, start=2):
                if len(row) != 5:
                    raise SchemaError(f"{path}:{line_no}: expected 5 columns, got {len(row)}")
                ts = _parse_float(row[0], path, line_no, "timestamp")
                subject, sensor_id, channel_id = row[1], row[2], row[3]
                if sensor_id not in declared:
                    raise SchemaError(
                        f"{path}:{line_no}: undeclared sensor_id {sensor_id!r}"
                    )
                if channel_id not in declared[sensor_id].channel_ids:
                    raise SchemaError(
                        f"{path}:{line_no}: undeclared channel {channel_id!r} "
                        f"for sensor {sensor_id!r}"
                    )
                value, ok = _parse_value(row[4], path, line_no)
                key = (subject, sensor_id, channel_id)
                tss, vals, oks = series.setdefault(key, ([], [], []))
                if tss and ts <= tss[-1]:
                    raise SchemaError(
                        f"{path}:{line_no}: timestamp {ts} does not increase "
                        f"for {sensor_id}/{channel_id} of subject {subject!r}"
                    )
                tss.append(ts)
                vals.append(value)
                oks.append(ok)
                subjects.setdefault(subject, None)

    labels: dict[str, list[tuple[float, float, str]]] = {}
    with open(manifest.label_file, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LABEL_HEADER:
            raise SchemaError(
                f"{manifest.label_file}:1: expected header "
                f"{','.join(LABEL_HEADER)}, got {header}"
            )
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise SchemaError(
                    f"{manifest.label_file}:{line_no}: expected 4 columns"
                )
            subject = row[0]
            start = _parse_float(row[1], manifest.label_file, line_no, "start")
            end = _parse_float(row[2], manifest.label_file, line_no, "end")
            activity = row[3]
            if activity not in manifest.class_set:
                raise SchemaError(
                    f"{manifest.label_file}:{line_no}: activity {activity!r} "
                    f"not in class_set"
                )
            labels.setdefault(subject, []).append((start, end, activity))

    channels = {}
    for subject in subjects:
        for decl in manifest.sensors:
            for channel_id in decl.channel_ids:
                key = (subject, decl.sensor_id, channel_id)
                if key not in series:
                    raise SchemaError(
                        f"declared channel {decl.sensor_id}/{channel_id} has no "
                        f"samples for subject {subject!r}"
                    )
                tss, vals, oks = series[key]
                channels[key] = SensorChannel(
                    sensor_id=decl.sensor_id,
                    channel_id=channel_id,
                    sampling_rate_hz=decl.sampling_rate_hz,
                    timestamps=np.array(tss),
                    values=np.array(vals),
                    valid=np.array(oks, dtype=bool),
                )

    return SensorDataset(
        subjects=tuple(subjects),
        channels=channels,
        labels={s: tuple(sorted(ivs)) for s, ivs in labels.items()},
        class_set=manifest.class_set,
    )


def save_dataset(ds: SensorDataset, out_dir: str, name: str = "dataset") -> str:
    """Write a dataset in the canonical schema; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    sample_path = os.path.join(out_dir, "samples.csv")
    label_path = os.path.join(out_dir, "labels.csv")
    with open(sample_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SAMPLE_HEADER)
        for (subject, sensor_id, channel_id), ch in ds.channels.items():
            for t, v, ok in zip(ch.timestamps, ch.values, ch.valid):
                writer.writerow(
                    [repr(float(t)), subject, sensor_id, channel_id,
                     repr(float(v)) if ok else "NaN"]
                )
    with open(label_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABEL_HEADER)
        for subject in ds.subjects:
            for start, end, activity in ds.labels.get(subject, ()):
                writer.writerow([subject, repr(float(start)), repr(float(end)), activity])

    sensors = []
    for sensor_id in ds.sensor_ids:
        rate = None
        for (_, sid, _), ch in ds.channels.items():
            if sid == sensor_id:
                rate = ch.sampling_rate_hz
                break
        sensors.append(
            {
                "sensor_id": sensor_id,
                "channel_ids": list(ds.channel_ids(sensor_id)),
                "sampling_rate_hz": float(rate),
                "quality_tier": "high",
            }
        )
    manifest_path = os.path.join(out_dir, "manifest.yaml")
    with open(manifest_path, "w") as fh:
        yaml.safe_dump(
            {
                "name": name,
                "sample_files": ["samples.csv"],
                "label_file": "labels.csv",
                "sensors": sensors,
                "class_set": list(ds.class_set),
            },
            fh,
            sort_keys=False,
        )
    return manifest_path


def impute_missing(ds: SensorDataset, max_gap_s: float = 1.0) -> SensorDataset:
    """Fill short gaps of invalid samples by linear interpolation.

    A run of invalid samples is filled only if the time between its valid
    neighbors is at most ``max_gap_s``; longer gaps stay invalid so the
    windows overlapping them can be discarded downstream. Valid samples are
    never modified; the operation is idempotent.
    """
    if max_gap_s <= 0:
        raise ValueError(f"max_gap_s must be > 0, got {max_gap_s}")
    channels = {}
    for key, ch in ds.channels.items():
        valid = ch.valid
        if not valid.any():
            subject = key[0]
            raise ValueError(
                f"channel {ch.sensor_id}/{ch.channel_id} of subject "
                f"{subject!r} has no valid samples"
            )
        if valid.all():
            channels[key] = ch
            continue
        ts = ch.timestamps
        values = ch.values.copy()
        new_valid = valid.copy()
        valid_idx = np.flatnonzero(valid)
        # Walk runs of invalid samples between valid neighbors.
        for left, right in zip(valid_idx[:-1], valid_idx[1:]):
            if right == left + 1:
                continue
            if ts[right] - ts[left] > max_gap_s:
                continue
            inside = np.arange(left + 1, right)
            frac = (ts[inside] - ts[left]) / (ts[right] - ts[left])
            values[inside] = values[left] + frac * (values[right] - values[left])
            new_valid[inside] = True
        channels[key] = SensorChannel(
            sensor_id=ch.sensor_id,
            channel_id=ch.channel_id,
            sampling_rate_hz=ch.sampling_rate_hz,
            timestamps=ts,
            values=values,
            valid=new_valid,
        )
    return SensorDataset(
        subjects=ds.subjects,
        channels=channels,
        labels=ds.labels,
        class_set=ds.class_set,
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Action-composed synthetic dataset for oracle testing.

    Activities decompose into latent actions; each sensor observes each
    action with a strength given by the observability matrix, so a sensor
    with observability 0 for an action sees only noise during it. Per
    subject, the listed activities are emitted in order and their label
    spans exactly tile the timeline.
    """

    n_subjects: int
    n_sensors: int
    n_actions: int
    activities: tuple[tuple[str, tuple[int, ...]], ...]  # (label, action sequence)
    observability: tuple[tuple[float, ...], ...]  # n_sensors x n_actions in [0, 1]
    noise_std: float
    samples_per_action: int
    seed: int
    sampling_rate_hz: float = 20.0
    channels_per_sensor: int = 1
    subject_offset_std: float = 0.0  # per-(subject, sensor) DC nuisance offset
    offset_scale: float = 1.0  # scales the per-action DC offset of the waveform

    def __post_init__(self):
        object.__setattr__(
            self,
            "activities",
            tuple((label, tuple(seq)) for label, seq in self.activities),
        )
        object.__setattr__(
            self, "observability", tuple(tuple(row) for row in self.observability)
        )
        if self.n_subjects <= 0 or self.n_sensors <= 0 or self.n_actions <= 0:
            raise ValueError("n_subjects, n_sensors, n_actions must be positive")
        if self.samples_per_action <= 0:
            raise ValueError("samples_per_action must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        obs = np.asarray(self.observability, dtype=float)
        if obs.shape != (self.n_sensors, self.n_actions):
            raise ValueError(
                f"observability must be {self.n_sensors}x{self.n_actions}, "
                f"got {obs.shape}"
            )
        if (obs < 0).any() or (obs > 1).any():
            raise ValueError("observability entries must lie in [0, 1]")
        if not (obs > 0).any(axis=1).all():
            raise ValueError("every sensor needs at least one observable action")
        for label, seq in self.activities:
            for a in seq:
                if not 0 <= a < self.n_actions:
                    raise ValueError(
                        f"activity {label!r} uses undeclared action {a}"
                    )
            if not seq:
                raise ValueError(f"activity {label!r} has an empty action sequence")

    @property
    def class_set(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for label, _ in self.activities:
            seen.setdefault(label, None)
        return tuple(seen)


def action_amplitude(action: int, channel: int = 0) -> float:
    """Amplitude of an action's base waveform (before observability).

    Channel-dependent so a multi-channel sensor sees each action as a
    direction in amplitude space, not just a scalar intensity.
    """
    # Golden-ratio spacing decorrelates amplitude from the action index, so
    # actions spread over two feature dimensions instead of one line.
    return 1.0 + 2.0 * (((action + 3 * channel) * 0.618034) % 1.0)


def _action_waveform(action: int, channel: int, t: np.ndarray,
                     offset_scale: float = 1.0) -> np.ndarray:
    """Base signal for one latent action, before observability scaling.

    Frequency, phase, DC offset and amplitude are action-specific so the
    window statistics (mean/std/range) separate actions.
    """
    # Integer frequencies keep whole-second window means independent of the
    # window's phase, so the mean feature cleanly encodes the action.
    freq = float(action + 1 + channel)
    phase = 2.399963 * (action + 1) * (channel + 1)  # golden-angle spacing
    offset = offset_scale * float(action)
    amplitude = action_amplitude(action, channel)
    return offset + amplitude * np.sin(2.0 * math.pi * freq * t + phase)


def generate_synthetic(spec: SyntheticSpec) -> SensorDataset:
    """Deterministically generate an action-composed dataset from ``spec``."""
    rng = child_rng(spec.seed, "synthetic")
    dt = 1.0 / spec.sampling_rate_hz
    channels: dict[tuple[str, str, str], SensorChannel] = {}
    labels: dict[str, tuple] = {}
    obs = np.asarray(spec.observability, dtype=float)

    offset_shape = (spec.n_subjects, spec.n_sensors, spec.channels_per_sensor)
    subject_offsets = (rng.normal(0.0, spec.subject_offset_std, size=offset_shape)
                       if spec.subject_offset_std > 0 else np.zeros(offset_shape))

    for u in range(spec.n_subjects):
        subject = f"s{u}"
        # Build the per-subject action timeline.
        action_seq: list[int] = []
        spans: list[tuple[float, float, str]] = []
        cursor = 0
        for label, seq in spec.activities:
            start = cursor * spec.samples_per_action * dt
            action_seq.extend(seq)
            cursor += len(seq)
            end = cursor * spec.samples_per_action * dt
            spans.append((start, end, label))
        n_total = len(action_seq) * spec.samples_per_action
        t = np.arange(n_total) * dt
        # Clamp the final span to the last emitted sample so labels stay
        # inside the recording.
        last_start, _, last_label = spans[-1]
        spans[-1] = (last_start, float(t[-1]), last_label)
        labels[subject] = tuple(spans)
        action_of_sample = np.repeat(np.array(action_seq), spec.samples_per_action)

        for s in range(spec.n_sensors):
            sensor_id = f"sensor{s}"
            for c in range(spec.channels_per_sensor):
                signal = np.zeros(n_total)
                for a in range(spec.n_actions):
                    mask = action_of_sample == a
                    if mask.any():
                        signal[mask] = obs[s, a] * _action_waveform(a, c, t[mask], spec.offset_scale)
                signal = signal + subject_offsets[u, s, c]
                if spec.noise_std > 0:
                    signal = signal + rng.normal(0.0, spec.noise_std, size=n_total)
                channels[(subject, sensor_id, f"ch{c}")] = SensorChannel(
                    sensor_id=sensor_id,
                    channel_id=f"ch{c}",
                    sampling_rate_hz=spec.sampling_rate_hz,
                    timestamps=t,
                    values=signal,
                    valid=np.ones(n_total, dtype=bool),
                )

    return SensorDataset(
        subjects=tuple(f"s{u}" for u in range(spec.n_subjects)),
        channels=channels,
        labels=labels,
        class_set=spec.class_set,
    )
