"""scan -> filter -> select -> scale -> fit -> assign -> gate -> report."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gmm, log_corpus, outlier_gate, preprocess, report
from .config import RunConfig

log = logging.getLogger(__name__)

OUTPUT_FILES = ("features.csv", "report.json", "populations.txt", "clusters.dot", "flagged.txt", "model.json")


@dataclass
class Analysis:
    vectors: list
    failures: list
    table: preprocess.FeatureTable | None
    model: gmm.ClusterModel | None
    assignment: gmm.Assignment | None
    verdicts: list
    report: report.OutlierReport
    similarity: object = None

    @property
    def flagged(self) -> list[str]:
        return outlier_gate.flag_records(self.verdicts, self.assignment)

    @property
    def any_flagged(self) -> bool:
        return any(v.flagged for v in self.verdicts)


def _report_config(config: RunConfig) -> dict:
    d = config.to_dict()
    # output location and watch cadence do not affect results
    for key in ("output_dir", "interval"):
        d.pop(key)
    return d


def analyze(config: RunConfig) -> Analysis:
    config.validate()
    if config.input_dir is None or not Path(config.input_dir).is_dir():
        raise FileNotFoundError(f"cli: input directory not found: {config.input_dir}")
    patterns = log_corpus.load_patterns(config.pattern_file)
    vectors, failures = log_corpus.scan_corpus(config.input_dir, patterns, config.suffix)
    log.info("scanned %d files: %d parsed, %d failed", len(vectors) + len(failures), len(vectors), len(failures))

    table = preprocess.FeatureTable.from_vectors(vectors)
    table, zero_removed = preprocess.drop_zero_records(table)
    dropped: list[str] = []
    model = assignment = similarity = None
    verdicts: list = []
    if len(table):
        table, dropped = preprocess.select_features(table, config.cv_floor)
        if config.log1p:
            table = preprocess.apply_log1p(table)
        if config.standardize:
            table, _ = preprocess.standardize(table)
        em = gmm.EMConfig(config.max_iter, config.rel_tol, config.variance_floor, config.seed)
        model = gmm.fit_gmm(table.matrix, config.k, em)
        log.info("EM: %d iterations, converged=%s, log-likelihood %.6g", model.n_iter, model.converged,
                 model.log_likelihood)
        assignment = gmm.assign(model, table.matrix)
        similarity = gmm.cluster_similarity(model)
        verdicts = outlier_gate.flag_outlier_clusters(assignment, len(table), config.frac, table.names)
        cutoffs = outlier_gate.CauseCutoffs(config.high_volume_pct, config.low_throughput_pct)
        verdicts = outlier_gate.annotate_all(verdicts, table, cutoffs)

    rep = report.build_report(
        scanned=len(vectors) + len(failures),
        failures=failures,
        zero_removed=zero_removed,
        table=table,
        dropped_features=dropped,
        model=model,
        assignment=assignment,
        verdicts=verdicts,
        similarity=similarity,
        config=_report_config(config),
    )
    return Analysis(vectors, failures, table, model, assignment, verdicts, rep, similarity)


def render_outputs(result: Analysis, edge_floor: float = 0.01) -> dict[str, str]:
    buf = io.StringIO()
    log_corpus.emit_feature_table(result.vectors, buf)
    out = {
        "features.csv": buf.getvalue(),
        "report.json": result.report.to_json(),
        "populations.txt": "",
        "clusters.dot": "",
        "flagged.txt": "".join(name + "\n" for name in result.report.flagged_names),
        "model.json": "null\n",
    }
    if result.assignment is not None:
        out["populations.txt"] = report.emit_population_chart(result.assignment, result.verdicts)
        out["clusters.dot"] = report.emit_cluster_graph(result.similarity, result.verdicts, edge_floor)
        out["model.json"] = result.model.to_json()
    else:
        out["populations.txt"] = report.population_chart([])
        out["clusters.dot"] = report.emit_cluster_graph(np.zeros((0, 0)), [], edge_floor)
    return out


def write_outputs(result: Analysis, out_dir, edge_floor: float = 0.01) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, text in render_outputs(result, edge_floor).items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        paths[name] = path
    return paths
