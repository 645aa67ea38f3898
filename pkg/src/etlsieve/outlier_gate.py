"""Small-cluster outlier flagging and heuristic cause labels."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .gmm import Assignment
from .preprocess import FeatureTable, derive_throughput


class Cause(str, Enum):
    HIGH_VOLUME = "HIGH_VOLUME"
    LOW_THROUGHPUT = "LOW_THROUGHPUT"
    UNEXPLAINED = "UNEXPLAINED"


@dataclass(frozen=True)
class OutlierVerdict:
    cluster: int
    population: int
    threshold: int
    flagged: bool
    members: tuple[str, ...]
    cause: Cause | None = None

    def __post_init__(self):
        if self.cause is not None and not self.flagged:
            raise ValueError("a cause is only defined for flagged clusters")

    def to_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "population": self.population,
            "threshold": self.threshold,
            "flagged": self.flagged,
            "cause": self.cause.value if self.cause else None,
            "members": list(self.members),
        }


def population_threshold(n: int, frac: float) -> int:
    if not 0 < frac < 1:
        raise ValueError(f"frac must lie in (0, 1), got {frac}")
    # round first so that e.g. 0.29 * 100 = 28.999999999999996 floors to 29
    return math.floor(round(frac * n, 9))


def flag_outlier_clusters(assignment: Assignment, n: int, frac: float = 0.05,
                          names: list[str] | None = None) -> list[OutlierVerdict]:
    """One verdict per cluster; a non-empty cluster is flagged iff its
    population is strictly below ``floor(frac * n)``."""
    threshold = population_threshold(n, frac)
    labels = np.asarray(assignment.labels)
    if names is None:
        names = [str(i) for i in range(len(labels))]
    verdicts = []
    for cluster, population in enumerate(assignment.populations()):
        members = tuple(name for name, label in zip(names, labels) if label == cluster)
        verdicts.append(OutlierVerdict(
            cluster=cluster,
            population=population,
            threshold=threshold,
            flagged=0 < population < threshold,
            members=members,
        ))
    return verdicts


def flag_records(verdicts: list[OutlierVerdict], assignment: Assignment | None = None) -> list[str]:
    flagged = [name for v in verdicts if v.flagged for name in v.members]
    if assignment is not None:
        pops = assignment.populations()
        assert len(flagged) == sum(pops[v.cluster] for v in verdicts if v.flagged)
    return flagged


@dataclass(frozen=True)
class CauseCutoffs:
    high_volume_pct: float = 90.0
    low_throughput_pct: float = 10.0


def annotate_cause(verdict: OutlierVerdict, table: FeatureTable,
                   cutoffs: CauseCutoffs = CauseCutoffs()) -> Cause:
    """Label why a flagged cluster is small.

    HIGH_VOLUME when its mean source or target row count is above the corpus
    high-volume percentile; otherwise LOW_THROUGHPUT when its mean throughput
    is below the corpus low-throughput percentile; otherwise UNEXPLAINED.
    """
    members = set(verdict.members)
    records = [r for r in table.records if r.name in members]
    if not records:
        return Cause.UNEXPLAINED
    src = np.array([r.source_rows for r in table.records], dtype=float)
    tgt = np.array([r.target_rows for r in table.records], dtype=float)
    thr = np.array([derive_throughput(r)[0] for r in table.records])

    if (np.mean([r.source_rows for r in records]) > np.percentile(src, cutoffs.high_volume_pct)
            or np.mean([r.target_rows for r in records]) > np.percentile(tgt, cutoffs.high_volume_pct)):
        return Cause.HIGH_VOLUME
    if np.mean([derive_throughput(r)[0] for r in records]) < np.percentile(thr, cutoffs.low_throughput_pct):
        return Cause.LOW_THROUGHPUT
    return Cause.UNEXPLAINED


def annotate_all(verdicts: list[OutlierVerdict], table: FeatureTable,
                 cutoffs: CauseCutoffs = CauseCutoffs()) -> list[OutlierVerdict]:
    out = []
    for v in verdicts:
        if v.flagged:
            v = replace(v, cause=annotate_cause(v, table, cutoffs))
        out.append(v)
    return out
