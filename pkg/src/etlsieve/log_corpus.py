"""Extraction of per-process execution metrics from ETL session logs.

Canonical log grammar: one metric per line, a marker text followed somewhere
later on the same line by an integer in square brackets, e.g.::

    SOURCE ROWS [159833]
    TOTAL RUNTIME SECONDS [168]

Runtime is always in whole seconds. Any other line is ignored.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

log = logging.getLogger(__name__)

METRICS = ("source_rows", "target_rows", "runtime", "n_transformations")
OCCURRENCE_RULES = ("first", "last", "sum")

CSV_HEADER = "Name,Source Row,Target Row,Time,No. of Transformation"

DEFAULT_MARKERS = {
    "source_rows": "SOURCE ROWS",
    "target_rows": "TARGET ROWS",
    "runtime": "TOTAL RUNTIME SECONDS",
    "n_transformations": "TRANSFORMATION COUNT",
}


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class PatternEntry:
    metric: str
    marker: str
    occurrence: str = "first"


@dataclass(frozen=True)
class PatternSet:
    entries: tuple[PatternEntry, ...]

    def __post_init__(self):
        metrics = [e.metric for e in self.entries]
        if sorted(metrics) != sorted(METRICS):
            raise PatternError(f"every metric must appear exactly once, got {metrics}")
        markers = [e.marker for e in self.entries]
        if any(not m for m in markers):
            raise PatternError("line markers must be non-empty")
        if len(set(markers)) != len(markers):
            raise PatternError(f"line markers must be distinct, got {markers}")
        for e in self.entries:
            if e.occurrence not in OCCURRENCE_RULES:
                raise PatternError(f"unknown occurrence rule {e.occurrence!r} for {e.metric}")

    @classmethod
    def default(cls) -> "PatternSet":
        return cls(tuple(PatternEntry(m, DEFAULT_MARKERS[m]) for m in METRICS))

    def entry(self, metric: str) -> PatternEntry:
        for e in self.entries:
            if e.metric == metric:
                return e
        raise KeyError(metric)


_PATTERN_LINE = re.compile(
    r'^\s*(?P<metric>\w+)\s*=\s*"(?P<marker>(?:[^"\\]|\\.)*)"\s*(?:,\s*(?P<occ>\w+)\s*)?$'
)


def parse_pattern_config(text: str) -> PatternSet:
    """Parse ``metric_id = "marker" [, occurrence]`` lines.

    Blank lines and ``#`` comments are skipped. Metrics not mentioned keep
    their default marker.
    """
    given: dict[str, PatternEntry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _PATTERN_LINE.match(line)
        if m is None:
            raise PatternError(f"line {lineno}: cannot parse {raw!r}")
        metric = m.group("metric")
        if metric not in METRICS:
            raise PatternError(f"line {lineno}: unknown metric {metric!r}")
        if metric in given:
            raise PatternError(f"line {lineno}: metric {metric!r} given twice")
        marker = re.sub(r"\\(.)", r"\1", m.group("marker"))
        given[metric] = PatternEntry(metric, marker, m.group("occ") or "first")
    entries = tuple(given.get(m, PatternEntry(m, DEFAULT_MARKERS[m])) for m in METRICS)
    return PatternSet(entries)


def load_patterns(path: str | os.PathLike | None) -> PatternSet:
    if path is None:
        return PatternSet.default()
    return parse_pattern_config(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class FeatureVector:
    name: str
    source_rows: int
    target_rows: int
    runtime: int
    n_transformations: int

    def __post_init__(self):
        for metric in METRICS:
            value = getattr(self, metric)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{self.name}: {metric} must be a non-negative int, got {value!r}")

    def metrics(self) -> tuple[int, int, int, int]:
        return (self.source_rows, self.target_rows, self.runtime, self.n_transformations)


@dataclass(frozen=True)
class ParseFailure:
    name: str
    missing: frozenset[str]
    message: str

    def __post_init__(self):
        if not self.missing:
            raise ValueError("a parse failure must name at least one missing metric")


def _bracket_value(line: str, start: int) -> str | None:
    open_ = line.find("[", start)
    if open_ < 0:
        return None
    close = line.find("]", open_ + 1)
    if close < 0:
        return None
    return line[open_ + 1 : close]


def _as_count(token: str | None) -> int | None:
    if token is None:
        return None
    token = token.strip()
    if not token.isascii() or not token.isdigit():
        return None
    return int(token)


def parse_session_log(text: str, patterns: PatternSet, name: str = "") -> FeatureVector | ParseFailure:
    """Extract the four metrics from one log's text.

    For each metric the lines containing its marker are located; the value
    is the integer between the first ``[`` after the marker and the next
    ``]``. The occurrence rule picks the first line, the last line, or sums
    over all of them.
    """
    lines = text.splitlines()
    values: dict[str, int] = {}
    problems: dict[str, str] = {}
    for entry in patterns.entries:
        hits = [(line, line.find(entry.marker)) for line in lines if entry.marker in line]
        if not hits:
            problems[entry.metric] = f"marker {entry.marker!r} not found"
            continue
        if entry.occurrence == "first":
            hits = hits[:1]
        elif entry.occurrence == "last":
            hits = hits[-1:]
        total = 0
        for line, pos in hits:
            value = _as_count(_bracket_value(line, pos + len(entry.marker)))
            if value is None:
                problems[entry.metric] = f"no non-negative integer after {entry.marker!r} in {line.strip()!r}"
                break
            total += value
        else:
            values[entry.metric] = total
    if problems:
        message = "; ".join(f"{m}: {problems[m]}" for m in METRICS if m in problems)
        return ParseFailure(name, frozenset(problems), message)
    return FeatureVector(name, *(values[m] for m in METRICS))


def scan_corpus(
    root: str | os.PathLike, patterns: PatternSet, suffix: str = ".log"
) -> tuple[list[FeatureVector], list[ParseFailure]]:
    """Parse every ``*suffix`` file directly under ``root``, in name order.

    An unreadable directory raises; an unreadable file becomes a failure.
    """
    root = Path(root)
    try:
        names = sorted(
            entry.name for entry in os.scandir(root) if entry.is_file() and entry.name.endswith(suffix)
        )
    except OSError as exc:
        raise OSError(f"log_corpus: cannot read directory {root}: {exc}") from exc

    vectors: list[FeatureVector] = []
    failures: list[ParseFailure] = []
    for name in names:
        try:
            text = (root / name).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            failures.append(ParseFailure(name, frozenset(METRICS), f"unreadable: {exc}"))
            continue
        result = parse_session_log(text, patterns, name=name)
        if isinstance(result, ParseFailure):
            log.warning("log_corpus: %s: %s", name, result.message)
            failures.append(result)
        else:
            vectors.append(result)
    return vectors, failures


def feature_rows(vectors: Iterable[FeatureVector]) -> list[str]:
    rows = []
    for v in vectors:
        if "," in v.name or "\n" in v.name:
            raise ValueError(f"log name {v.name!r} cannot be written unquoted")
        rows.append(",".join([v.name, *(str(x) for x in v.metrics())]))
    return rows


def emit_feature_table(vectors: Sequence[FeatureVector], out: IO[str]) -> int:
    """Write the feature CSV to ``out`` and return the number of data rows."""
    rows = feature_rows(vectors)
    written = 0
    try:
        out.write(CSV_HEADER + "\n")
        for row in rows:
            out.write(row + "\n")
            written += 1
    except OSError:
        log.error("log_corpus: feature table write failed after %d of %d rows; output is partial",
                  written, len(rows))
        raise
    return written


def read_feature_table(src: IO[str]) -> list[FeatureVector]:
    lines = src.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a feature table: header mismatch")
    out = []
    for line in lines[1:]:
        name, *fields = line.split(",")
        out.append(FeatureVector(name, *(int(f) for f in fields)))
    return out
