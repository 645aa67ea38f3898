"""Synthetic ETL session-log corpora with ground-truth group labels."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .log_corpus import DEFAULT_MARKERS

log = logging.getLogger(__name__)

INLIER = "inlier"
ZERO = "zero"
CORRUPT = "corrupt"

MANIFEST_NAME = "manifest.csv"
MANIFEST_HEADER = ["name", "group", "anomaly", "source_rows", "target_rows", "runtime", "n_transformations"]


@dataclass(frozen=True)
class Distribution:
    """``loguniform(low, high)``, ``lognormal(median, sigma)`` or ``uniform(low, high)``."""

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in ("loguniform", "lognormal", "uniform"):
            raise ValueError(f"unknown distribution {self.kind!r}")
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("distribution parameters must be finite")
        if self.kind == "loguniform" and not 0 < self.a <= self.b:
            raise ValueError("loguniform needs 0 < low <= high")
        if self.kind == "lognormal" and not (self.a > 0 and self.b >= 0):
            raise ValueError("lognormal needs median > 0 and sigma >= 0")
        if self.kind == "uniform" and not self.a <= self.b:
            raise ValueError("uniform needs low <= high")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "loguniform":
            return np.exp(rng.uniform(np.log(self.a), np.log(self.b), n))
        if self.kind == "lognormal":
            return self.a * np.exp(self.b * rng.standard_normal(n))
        return rng.uniform(self.a, self.b, n)

    @classmethod
    def from_obj(cls, obj) -> "Distribution":
        if isinstance(obj, Distribution):
            return obj
        kind = obj["kind"]
        if kind == "lognormal":
            return cls(kind, float(obj["median"]), float(obj["sigma"]))
        return cls(kind, float(obj["low"]), float(obj["high"]))

    def to_obj(self) -> dict:
        if self.kind == "lognormal":
            return {"kind": self.kind, "median": self.a, "sigma": self.b}
        return {"kind": self.kind, "low": self.a, "high": self.b}


@dataclass(frozen=True)
class GroupSpec:
    label: str
    count: int
    source_rows: Distribution
    throughput: Distribution
    row_ratio: float = 1.0
    n_transformations: int = 2
    anomaly: bool = False

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"group {self.label}: count must be >= 0")
        if self.label in (ZERO, CORRUPT):
            raise ValueError(f"group label {self.label!r} is reserved")
        if not (self.row_ratio >= 0 and np.isfinite(self.row_ratio)):
            raise ValueError(f"group {self.label}: row_ratio must be finite and >= 0")


@dataclass(frozen=True)
class CorpusSpec:
    seed: int
    groups: tuple[GroupSpec, ...] = ()
    zero_count: int = 0
    corrupt_count: int = 0

    def __post_init__(self):
        if self.zero_count < 0 or self.corrupt_count < 0:
            raise ValueError("counts must be >= 0")
        if self.total > 0 and not self.groups:
            raise ValueError("a non-empty corpus needs at least one group")
        labels = [g.label for g in self.groups]
        if len(set(labels)) != len(labels):
            raise ValueError("group labels must be unique")

    @property
    def total(self) -> int:
        return sum(g.count for g in self.groups) + self.zero_count + self.corrupt_count

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusSpec":
        groups = tuple(
            GroupSpec(
                label=g["label"],
                count=int(g["count"]),
                source_rows=Distribution.from_obj(g["source_rows"]),
                throughput=Distribution.from_obj(g["throughput"]),
                row_ratio=float(g.get("row_ratio", 1.0)),
                n_transformations=int(g.get("n_transformations", 2)),
                anomaly=bool(g.get("anomaly", g["label"] != INLIER)),
            )
            for g in d.get("groups", [])
        )
        return cls(int(d.get("seed", 0)), groups, int(d.get("zero_count", 0)), int(d.get("corrupt_count", 0)))

    def to_dict(self) -> dict:
        groups = []
        for g in self.groups:
            item = asdict(g)
            item["source_rows"] = g.source_rows.to_obj()
            item["throughput"] = g.throughput.to_obj()
            groups.append(item)
        return {"seed": self.seed, "zero_count": self.zero_count,
                "corrupt_count": self.corrupt_count, "groups": groups}


def load_corpus_spec(path) -> CorpusSpec:
    return CorpusSpec.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    group: str
    anomaly: bool
    source_rows: int
    target_rows: int
    runtime: int
    n_transformations: int


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def names(self, group: str | None = None) -> list[str]:
        return [e.name for e in self.entries if group is None or e.group == group]

    def anomaly_groups(self) -> dict[str, list[str]]:
        groups: dict[str, list[str]] = {}
        for e in self.entries:
            if e.anomaly:
                groups.setdefault(e.group, []).append(e.name)
        return groups

    def count(self, group: str) -> int:
        return sum(1 for e in self.entries if e.group == group)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(MANIFEST_HEADER)
            for e in self.entries:
                w.writerow([e.name, e.group, int(e.anomaly), e.source_rows, e.target_rows,
                            e.runtime, e.n_transformations])

    @classmethod
    def read_csv(cls, path) -> "Manifest":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls([
            ManifestEntry(r["name"], r["group"], r["anomaly"] == "1", int(r["source_rows"]),
                          int(r["target_rows"]), int(r["runtime"]), int(r["n_transformations"]))
            for r in rows
        ])


def render_log(name: str, source_rows: int, target_rows: int | None, runtime: int, n_transformations: int) -> str:
    """Canonical session log text; ``target_rows=None`` leaves that line out."""
    m = DEFAULT_MARKERS
    lines = [
        f"SESSION LOG FILE [{name}]",
        "Session run started",
        "Reader initialised for source qualifier SQ_SRC",
        f"{m['source_rows']} [{source_rows}]",
        "Writer initialised for target TGT_1",
    ]
    if target_rows is not None:
        lines.append(f"{m['target_rows']} [{target_rows}]")
    lines += [
        f"{m['n_transformations']} [{n_transformations}]",
        f"{m['runtime']} [{runtime}]",
        "Session run completed",
    ]
    return "\n".join(lines) + "\n"


def _draw_group(g: GroupSpec, rng: np.random.Generator):
    src = np.maximum(1, np.rint(g.source_rows.sample(rng, g.count))).astype(np.int64)
    thr = g.throughput.sample(rng, g.count)
    tgt = np.rint(src * g.row_ratio).astype(np.int64)
    runtime = np.maximum(1, np.rint(src / np.maximum(thr, 1e-12))).astype(np.int64)
    return src, tgt, runtime


def generate_corpus(spec: CorpusSpec, out) -> Manifest:
    """Write ``spec.total`` canonical logs plus ``manifest.csv`` into ``out``.

    File names are ``S0001.log``... assigned in a seeded shuffle so groups
    interleave in name order. Runtime is source rows over the drawn
    throughput, rounded, at least one second.
    """
    rng = np.random.default_rng(spec.seed)
    records: list[tuple[str, bool, int, int | None, int, int]] = []
    for g in spec.groups:
        src, tgt, runtime = _draw_group(g, rng)
        for s, t, r in zip(src, tgt, runtime):
            records.append((g.label, g.anomaly, int(s), int(t), int(r), g.n_transformations))
    records += [(ZERO, False, 0, 0, 0, 2)] * spec.zero_count
    if spec.corrupt_count:
        src, tgt, runtime = _draw_group(replace(spec.groups[0], count=spec.corrupt_count), rng)
        records += [(CORRUPT, False, int(s), None, int(r), 2) for s, r in zip(src, runtime)]

    width = max(4, len(str(len(records))))
    order = rng.permutation(len(records))
    names = [f"S{i + 1:0{width}d}.log" for i in range(len(records))]

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    written: list[Path] = []
    try:
        for name, idx in zip(names, order):
            group, anomaly, s, t, r, nt = records[idx]
            path = out / name
            path.write_text(render_log(name, s, t, r, nt), encoding="utf-8")
            written.append(path)
            entries.append(ManifestEntry(name, group, anomaly, s, -1 if t is None else t, r, nt))
        manifest = Manifest(entries)
        manifest.write_csv(out / MANIFEST_NAME)
    except OSError:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        log.error("synthgen: write into %s failed; removed %d partial files", out, len(written))
        raise
    return manifest


def reference_spec(seed: int = 1) -> CorpusSpec:
    """529 logs: 105 all-zero, 380 inliers and five planted anomaly groups.

    Slow-query (5) and bad-connection (8) sessions move ordinary volumes at
    1/20 and 1/10 of the inlier throughput. The three high-volume groups
    (10, 9, 12) sit at roughly 25x, 50x and 100x the mean inlier row count
    and load in bulk, so their runtimes stay unremarkable.
    """
    inlier_thr = 2000.0
    ordinary_rows = Distribution("lognormal", 1e6, 0.1)
    bulk_thr = Distribution("lognormal", 10 * inlier_thr, 0.1)

    def volume(center):
        return Distribution("uniform", center * 0.97, center * 1.03)

    return CorpusSpec(
        seed=seed,
        zero_count=105,
        groups=(
            GroupSpec(INLIER, 380, Distribution("loguniform", 1e2, 5e6), Distribution("lognormal", inlier_thr, 0.3)),
            GroupSpec("slow_query", 5, ordinary_rows, Distribution("lognormal", inlier_thr / 20, 0.1), anomaly=True),
            GroupSpec("bad_connection", 8, ordinary_rows, Distribution("lognormal", inlier_thr / 10, 0.1), anomaly=True),
            GroupSpec("high_volume_a", 10, volume(1.2e7), bulk_thr, anomaly=True),
            GroupSpec("high_volume_b", 9, volume(2.4e7), bulk_thr, anomaly=True),
            GroupSpec("high_volume_c", 12, volume(4.8e7), bulk_thr, anomaly=True),
        ),
    )


@dataclass(frozen=True)
class DetectionScore:
    recall: dict[str, float]
    false_flag_rate: float

    @property
    def mean_recall(self) -> float:
        return float(np.mean(list(self.recall.values()))) if self.recall else float("nan")


def score_detection(manifest: Manifest, flagged) -> DetectionScore:
    """Recall per planted anomaly group and the false-flag rate over inliers."""
    flagged = set(flagged)
    known = {e.name: e for e in manifest.entries}
    unknown = sorted(flagged - known.keys())
    if unknown:
        raise ValueError(f"synthgen: flagged names not in manifest: {unknown[:5]}")
    recall = {
        group: len(flagged.intersection(names)) / len(names)
        for group, names in sorted(manifest.anomaly_groups().items())
    }
    inliers = [e.name for e in manifest.entries if e.group not in (ZERO, CORRUPT) and not e.anomaly]
    rate = len(flagged.intersection(inliers)) / len(inliers) if inliers else 0.0
    return DetectionScore(recall, rate)
