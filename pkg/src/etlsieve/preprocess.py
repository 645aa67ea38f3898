"""Record filtering, feature selection and scaling ahead of clustering."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .log_corpus import METRICS, FeatureVector

ROW_FEATURES = ("source_rows", "target_rows")


class PreprocessError(ValueError):
    pass


@dataclass(frozen=True)
class ScalingParams:
    features: tuple[str, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z) * np.asarray(self.std) + np.asarray(self.mean)

    def to_dict(self) -> dict:
        return {f: {"mean": m, "std": s} for f, m, s in zip(self.features, self.mean, self.std)}


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Records plus the working matrix the clustering sees.

    ``matrix`` holds one column per active feature. It starts as the raw
    integer metrics and is replaced by the transforms below; ``records``
    always keep the parsed values.
    """

    records: tuple[FeatureVector, ...]
    features: tuple[str, ...] = METRICS
    matrix: np.ndarray = field(default=None, repr=False)
    scaling: ScalingParams | None = None
    log1p: bool = False

    def __post_init__(self):
        if not self.features:
            raise PreprocessError("a feature table needs at least one active feature")
        if self.matrix is None:
            raw = raw_matrix(self.records, self.features)
            object.__setattr__(self, "matrix", raw)
        if self.matrix.shape != (len(self.records), len(self.features)):
            raise PreprocessError(f"matrix shape {self.matrix.shape} does not match table")

    @classmethod
    def from_vectors(cls, vectors) -> "FeatureTable":
        return cls(tuple(vectors))

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.records]

    def __len__(self):
        return len(self.records)

    def column(self, feature: str) -> np.ndarray:
        return self.matrix[:, self.features.index(feature)]


def raw_matrix(records, features=METRICS) -> np.ndarray:
    data = np.array([[getattr(r, f) for f in features] for r in records], dtype=float)
    return data.reshape(len(records), len(features))


def drop_zero_records(table: FeatureTable) -> tuple[FeatureTable, list[str]]:
    """Remove records whose source rows, target rows and runtime are all zero."""
    keep = [not (r.source_rows == 0 and r.target_rows == 0 and r.runtime == 0) for r in table.records]
    removed = [r.name for r, k in zip(table.records, keep) if not k]
    mask = np.array(keep, dtype=bool)
    records = tuple(r for r, k in zip(table.records, keep) if k)
    return replace(table, records=records, matrix=table.matrix[mask] if len(keep) else table.matrix), removed


def coefficient_of_variation(column: np.ndarray) -> float:
    std = float(np.std(column))
    mean = abs(float(np.mean(column)))
    if std == 0.0:
        return 0.0
    if mean == 0.0:
        return float("inf")
    return std / mean


def select_features(table: FeatureTable, cv_floor: float = 1e-3) -> tuple[FeatureTable, list[str]]:
    """Drop features whose coefficient of variation is below ``cv_floor``.

    Constant features are dropped whatever the floor.
    """
    if len(table) == 0:
        raise PreprocessError("cannot select features on an empty table")
    cvs = [coefficient_of_variation(table.matrix[:, j]) for j in range(len(table.features))]
    keep = [j for j, cv in enumerate(cvs) if cv >= cv_floor and cv > 0]
    dropped = [f for j, f in enumerate(table.features) if j not in keep]
    if not keep:
        raise PreprocessError("no informative features")
    features = tuple(table.features[j] for j in keep)
    scaling = table.scaling
    if scaling is not None:
        scaling = ScalingParams(features, tuple(scaling.mean[j] for j in keep), tuple(scaling.std[j] for j in keep))
    return replace(table, features=features, matrix=table.matrix[:, keep], scaling=scaling), dropped


def apply_log1p(table: FeatureTable) -> FeatureTable:
    """log(1 + x) on the row-count columns, for heavy-tailed corpora."""
    if table.scaling is not None:
        raise PreprocessError("log1p must be applied before standardization")
    matrix = table.matrix.copy()
    for j, f in enumerate(table.features):
        if f in ROW_FEATURES:
            matrix[:, j] = np.log1p(matrix[:, j])
    return replace(table, matrix=matrix, log1p=True)


def standardize(table: FeatureTable) -> tuple[FeatureTable, ScalingParams]:
    """z-score every active column (population standard deviation)."""
    if len(table) == 0:
        raise PreprocessError("cannot standardize an empty table")
    mean = table.matrix.mean(axis=0)
    std = table.matrix.std(axis=0)
    zero = [f for f, s in zip(table.features, std) if s == 0.0]
    if zero:
        raise PreprocessError(f"zero standard deviation in {zero}; run select_features first")
    params = ScalingParams(table.features, tuple(float(m) for m in mean), tuple(float(s) for s in std))
    return replace(table, matrix=(table.matrix - mean) / std, scaling=params), params


def derive_throughput(v: FeatureVector) -> tuple[float, bool]:
    """Target rows per second; ``(0.0, True)`` when the runtime is zero."""
    if v.runtime == 0:
        return 0.0, True
    return v.target_rows / v.runtime, False
