"""Single-sensor activity recognition trained from multi-sensor data.

Pipeline: windowed statistical features -> per-sensor cluster
representation -> per-dimension regression mapping from the test sensor's
features into the representation space -> multiclass classifier, with an
optional two-stage boosted combination with the traditional single-sensor
model. Evaluation is leave-one-subject-out with pooled micro-F1.
"""
from .classify import BoostedPairClassifier, SoftmaxClassifier, samme_alpha
from .core import (
    FeatureTable,
    SensorChannel,
    SensorDataset,
    child_rng,
    child_seed,
    select_sensor_columns,
    split_by_subject,
)
from .evaluate import (
    ComparisonTable,
    ExperimentConfig,
    FoldReport,
    RunReport,
    compare_runs,
    confusion_matrix,
    micro_f1,
    run_experiment,
)
from .features import Standardizer, WindowSpec, window_features
from .ingest import (
    DatasetManifest,
    SensorDeclaration,
    SyntheticSpec,
    generate_synthetic,
    impute_missing,
    load_dataset,
    load_manifest,
    save_dataset,
)
from .mapping import RepresentationMapper
from .representation import ClusterRepresentation, kmeans
from .serialize import load_model, model_from_json, model_to_json, save_model

__version__ = "0.1.0"

__all__ = [
    "BoostedPairClassifier",
    "ClusterRepresentation",
    "ComparisonTable",
    "DatasetManifest",
    "ExperimentConfig",
    "FeatureTable",
    "FoldReport",
    "RepresentationMapper",
    "RunReport",
    "SensorChannel",
    "SensorDataset",
    "SensorDeclaration",
    "SoftmaxClassifier",
    "Standardizer",
    "SyntheticSpec",
    "WindowSpec",
    "child_rng",
    "child_seed",
    "compare_runs",
    "confusion_matrix",
    "generate_synthetic",
    "impute_missing",
    "kmeans",
    "load_dataset",
    "load_manifest",
    "load_model",
    "micro_f1",
    "model_from_json",
    "model_to_json",
    "run_experiment",
    "samme_alpha",
    "save_dataset",
    "save_model",
    "select_sensor_columns",
    "split_by_subject",
    "window_features",
]
