"""Report assembly and the text/JSON/DOT emitters."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .gmm import Assignment, ClusterModel
from .log_corpus import ParseFailure
from .outlier_gate import OutlierVerdict
from .preprocess import FeatureTable, derive_throughput


class ReportInvariantError(AssertionError):
    pass


@dataclass
class OutlierReport:
    funnel: dict
    dropped_features: list[str]
    active_features: list[str]
    model: dict | None
    verdicts: list[dict]
    records: list[dict]
    similarity: list[list[float]]
    parse_failures: list[dict] = field(default_factory=list)
    zero_removed: list[str] = field(default_factory=list)
    scaling: dict | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "funnel": self.funnel,
            "parse_failures": self.parse_failures,
            "zero_removed": self.zero_removed,
            "dropped_features": self.dropped_features,
            "active_features": self.active_features,
            "scaling": self.scaling,
            "model": self.model,
            "verdicts": self.verdicts,
            "records": self.records,
            "similarity": self.similarity,
            "config": self.config,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @property
    def flagged_names(self) -> list[str]:
        return [r["name"] for r in self.records if r["flagged"]]


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _ratio(a, b):
    return round(a / b, 6) if b else 0.0


def build_report(
    *,
    scanned: int,
    failures: list[ParseFailure],
    zero_removed: list[str],
    table: FeatureTable | None,
    dropped_features: list[str],
    model: ClusterModel | None,
    assignment: Assignment | None,
    verdicts: list[OutlierVerdict],
    similarity: np.ndarray | None,
    config: dict | None = None,
) -> OutlierReport:
    """Collect every stage's output into one report and check its counts."""
    analyzed = len(table) if table is not None else 0
    flagged_pop = sum(v.population for v in verdicts if v.flagged)
    flagged_set = {n for v in verdicts if v.flagged for n in v.members}

    if scanned != len(failures) + len(zero_removed) + analyzed:
        raise ReportInvariantError(
            f"funnel mismatch: scanned {scanned} != {len(failures)} + {len(zero_removed)} + {analyzed}")
    if len(flagged_set) != flagged_pop:
        raise ReportInvariantError("flagged record count differs from flagged cluster populations")
    if verdicts and sum(v.population for v in verdicts) != analyzed:
        raise ReportInvariantError("cluster populations do not cover the analyzed records")

    rows = []
    if table is not None and assignment is not None:
        max_resp = assignment.responsibilities.max(axis=1)
        for rec, label, r in zip(table.records, assignment.labels, max_resp):
            thr, undefined = derive_throughput(rec)
            rows.append({
                "name": rec.name,
                "source_rows": rec.source_rows,
                "target_rows": rec.target_rows,
                "runtime": rec.runtime,
                "n_transformations": rec.n_transformations,
                "throughput": thr,
                "throughput_undefined": undefined,
                "cluster": int(label),
                "max_responsibility": float(r),
                "flagged": rec.name in flagged_set,
            })
    rows.sort(key=lambda r: (not r["flagged"], r["cluster"], r["name"]))

    model_summary = None
    if model is not None:
        model_summary = {
            "k": model.k,
            "seed": model.seed,
            "iterations": model.n_iter,
            "converged": model.converged,
            "final_log_likelihood": model.log_likelihood,
            "weights": model.weights.tolist(),
            "rescues": list(model.rescues),
        }

    return OutlierReport(
        funnel={
            "scanned": scanned,
            "parse_failures": len(failures),
            "zero_removed": len(zero_removed),
            "analyzed": analyzed,
            "flagged": flagged_pop,
            "flagged_fraction_of_scanned": _ratio(flagged_pop, scanned),
            "flagged_fraction_of_analyzed": _ratio(flagged_pop, analyzed),
        },
        parse_failures=[
            {"name": f.name, "missing": sorted(f.missing), "message": f.message} for f in failures
        ],
        zero_removed=list(zero_removed),
        dropped_features=list(dropped_features),
        active_features=list(table.features) if table is not None and analyzed else [],
        scaling=table.scaling.to_dict() if table is not None and table.scaling is not None else None,
        model=model_summary,
        verdicts=[v.to_dict() for v in verdicts],
        records=rows,
        similarity=similarity.tolist() if similarity is not None else [],
        config=dict(config or {}),
    )


def _percentages(populations: list[int]) -> list[float]:
    """One-decimal percentages that add up to exactly 100.0 (largest remainder)."""
    n = sum(populations)
    if n == 0:
        return [0.0] * len(populations)
    tenths = [p * 1000 / n for p in populations]
    floors = [int(t) for t in tenths]
    short = 1000 - sum(floors)
    order = sorted(range(len(populations)), key=lambda i: (-(tenths[i] - floors[i]), i))
    for i in order[:short]:
        floors[i] += 1
    return [f / 10 for f in floors]


def emit_population_chart(assignment: Assignment, verdicts: list[OutlierVerdict] | None = None) -> str:
    """Cluster populations, largest first, with an ``*`` on flagged clusters."""
    pops = assignment.populations()
    return population_chart(pops, {v.cluster for v in verdicts or [] if v.flagged})


def population_chart(populations: list[int], flagged: set[int] = frozenset()) -> str:
    pct = _percentages(populations)
    order = sorted(range(len(populations)), key=lambda j: (-populations[j], j))
    lines = [f"{'cluster':>7}  {'population':>10}  {'percent':>7}  flagged"]
    for j in order:
        mark = "*" if j in flagged else ""
        lines.append(f"{j:>7}  {populations[j]:>10}  {pct[j]:>6.1f}%  {mark}".rstrip())
    return "\n".join(lines) + "\n"


def emit_cluster_graph(similarity, verdicts: list[OutlierVerdict], edge_floor: float = 0.01) -> str:
    """Undirected DOT graph: one node per cluster, an edge for every pair
    whose similarity is at least ``edge_floor``."""
    sim = np.asarray(similarity, dtype=float)
    k = sim.shape[0]
    by_cluster = {v.cluster: v for v in verdicts}
    lines = ["graph clusters {", "  node [shape=circle];"]
    for j in range(k):
        v = by_cluster.get(j)
        attrs = [f'label="{j}\\nn={v.population if v else 0}"']
        if v is not None and v.flagged:
            attrs += ["shape=doublecircle", "style=filled", 'fillcolor="#f4a582"']
            if v.cause is not None:
                attrs.append(f'tooltip="{v.cause.value}"')
        lines.append(f"  c{j} [{', '.join(attrs)}];")
    for i in range(k):
        for j in range(i + 1, k):
            if sim[i, j] >= edge_floor:
                w = f"{sim[i, j]:.4f}"
                lines.append(f'  c{i} -- c{j} [weight="{w}", label="{w}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
