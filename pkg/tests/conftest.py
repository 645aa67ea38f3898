import pytest

from etlsieve.log_corpus import FeatureVector, PatternSet
from etlsieve.synthgen import render_log

GOLDEN = [
    FeatureVector("X1.log", 159833, 159833, 168, 2),
    FeatureVector("X2.log", 4719112, 4719112, 9278, 2),
    FeatureVector("X3.log", 16178, 16178, 1423, 2),
    FeatureVector("X4.log", 20715, 20715, 338, 2),
    FeatureVector("X5.log", 494, 494, 82, 2),
    FeatureVector("X6.log", 160, 160, 35, 2),
]


def canonical_log(v: FeatureVector) -> str:
    return render_log(v.name, v.source_rows, v.target_rows, v.runtime, v.n_transformations)


@pytest.fixture
def patterns():
    return PatternSet.default()


@pytest.fixture
def golden_dir(tmp_path):
    for v in GOLDEN:
        (tmp_path / v.name).write_text(canonical_log(v), encoding="utf-8")
    return tmp_path
