"""Outlier detection for ETL processes from their session logs.

Session logs are reduced to four execution metrics, clustered with a
Gaussian mixture, and members of unusually small clusters are flagged.
"""

from .gmm import Assignment, ClusterModel, EMConfig, fit_gmm
from .log_corpus import FeatureVector, ParseFailure, PatternSet, parse_session_log, scan_corpus
from .pipeline import analyze

__all__ = [
    "Assignment",
    "ClusterModel",
    "EMConfig",
    "FeatureVector",
    "ParseFailure",
    "PatternSet",
    "analyze",
    "fit_gmm",
    "parse_session_log",
    "scan_corpus",
]
