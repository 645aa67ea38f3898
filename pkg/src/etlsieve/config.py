from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    input_dir: str | None = None
    output_dir: str = "out"
    pattern_file: str | None = None
    suffix: str = ".log"
    k: int = 10
    frac: float = 0.05
    cv_floor: float = 1e-3
    rel_tol: float = 1e-6
    max_iter: int = 200
    variance_floor: float = 1e-6
    seed: int = 0
    log1p: bool = False
    standardize: bool = True
    edge_floor: float = 0.01
    high_volume_pct: float = 90.0
    low_throughput_pct: float = 10.0
    interval: float = 60.0

    def validate(self) -> "RunConfig":
        problems = []
        if self.k < 1:
            problems.append("k must be >= 1")
        if not 0 < self.frac < 1:
            problems.append("frac must lie in (0, 1)")
        if self.cv_floor < 0:
            problems.append("cv_floor must be >= 0")
        if not self.rel_tol > 0:
            problems.append("rel_tol must be > 0")
        if self.max_iter < 1:
            problems.append("max_iter must be >= 1")
        if not self.variance_floor > 0:
            problems.append("variance_floor must be > 0")
        if not 0 <= self.edge_floor <= 1:
            problems.append("edge_floor must lie in [0, 1]")
        if not 0 <= self.low_throughput_pct <= 100 or not 0 <= self.high_volume_pct <= 100:
            problems.append("percentile cutoffs must lie in [0, 100]")
        if self.interval < 1:
            problems.append("interval must be >= 1 second")
        if self.log1p and not self.standardize:
            # raw log magnitudes would be clustered against raw runtimes
            problems.append("--log1p requires standardization (drop --no-standardize)")
        if not self.suffix:
            problems.append("suffix must be non-empty")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path) -> dict:
        """Read a JSON config file into a dict of known fields."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return data
