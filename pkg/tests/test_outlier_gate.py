import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from etlsieve.gmm import Assignment
from etlsieve.log_corpus import FeatureVector
from etlsieve.outlier_gate import (
    Cause,
    OutlierVerdict,
    annotate_all,
    annotate_cause,
    flag_outlier_clusters,
    flag_records,
    population_threshold,
)
from etlsieve.preprocess import FeatureTable


def assignment_from_populations(pops):
    labels = np.repeat(np.arange(len(pops)), pops)
    return Assignment(labels, np.eye(len(pops))[labels])


def names(n):
    return [f"r{i:04d}" for i in range(n)]


def test_threshold_four_hundred():
    assert population_threshold(400, 0.05) == 20


@pytest.mark.parametrize("n,frac,expected", [(424, 0.05, 21), (100, 0.29, 29), (19, 0.05, 0), (1000, 0.07, 70)])
def test_threshold_floor(n, frac, expected):
    assert population_threshold(n, frac) == expected


@pytest.mark.parametrize("frac", [0, 1, -0.1, 1.5])
def test_threshold_rejects_frac(frac):
    with pytest.raises(ValueError):
        population_threshold(100, frac)


def test_flag_arithmetic():
    a = assignment_from_populations([300, 80, 12, 8])
    verdicts = flag_outlier_clusters(a, 400, 0.05, names(400))
    assert [v.flagged for v in verdicts] == [False, False, True, True]
    assert [v.cluster for v in verdicts] == [0, 1, 2, 3]
    assert all(v.threshold == 20 for v in verdicts)
    assert len(flag_records(verdicts, a)) == 20


def test_twenty_not_flagged_nineteen_flagged():
    a = assignment_from_populations([361, 20, 19])
    v = flag_outlier_clusters(a, 400, 0.05, names(400))
    assert [x.flagged for x in v] == [False, False, True]


def test_equal_clusters_nothing_flagged():
    a = assignment_from_populations([40] * 10)
    assert not any(v.flagged for v in flag_outlier_clusters(a, 400, 0.05))


def test_empty_cluster_not_flagged():
    a = Assignment(np.zeros(30, dtype=int), np.tile([1.0, 0.0], (30, 1)))
    v = flag_outlier_clusters(a, 30, 0.5)
    assert v[1].population == 0 and not v[1].flagged


def test_funnel_forty_four():
    pops = [5, 8, 12, 10, 9] + [76] * 5
    a = assignment_from_populations(pops)
    n = sum(pops)
    flagged = flag_records(flag_outlier_clusters(a, n, 0.05, names(n)), a)
    assert len(flagged) == 44


def test_no_flags_empty_list():
    a = assignment_from_populations([50, 50])
    assert flag_records(flag_outlier_clusters(a, 100, 0.05), a) == []


def test_members_are_names_of_cluster():
    a = assignment_from_populations([30, 3])
    v = flag_outlier_clusters(a, 33, 0.2, names(33))
    assert v[1].members == ("r0030", "r0031", "r0032")


def test_cause_requires_flag():
    with pytest.raises(ValueError):
        OutlierVerdict(0, 10, 5, False, (), Cause.UNEXPLAINED)


# cause annotation on planted groups

def corpus(extra):
    rng = np.random.default_rng(0)
    rows = []
    for i in range(200):
        src = int(rng.integers(1_000, 100_000))
        rows.append(FeatureVector(f"n{i:03d}", src, src, max(1, src // int(rng.integers(800, 1200))), 2))
    return FeatureTable.from_vectors(rows + extra)


def verdict_for(members):
    return OutlierVerdict(0, len(members), 20, True, tuple(v.name for v in members))


def test_high_volume_cause():
    base = corpus([])
    p95 = np.percentile([r.source_rows for r in base.records], 95)
    group = [FeatureVector(f"h{i}", int(10 * p95), int(10 * p95), int(10 * p95 / 1000), 2) for i in range(6)]
    assert annotate_cause(verdict_for(group), corpus(group)) == Cause.HIGH_VOLUME


def test_low_throughput_cause():
    base = corpus([])
    median_rt = int(np.median([r.runtime for r in base.records]))
    median_src = int(np.median([r.source_rows for r in base.records]))
    group = [FeatureVector(f"s{i}", median_src, median_src, 20 * median_rt, 2) for i in range(5)]
    assert annotate_cause(verdict_for(group), corpus(group)) == Cause.LOW_THROUGHPUT


def test_unexplained_cause():
    base = corpus([])
    med = [int(np.median([getattr(r, f) for r in base.records])) for f in ("source_rows", "target_rows", "runtime")]
    single = [FeatureVector("m0", *med, 2)]
    assert annotate_cause(verdict_for(single), corpus(single)) == Cause.UNEXPLAINED


def test_rule_order_high_volume_wins():
    group = [FeatureVector(f"b{i}", 10**9, 10**9, 10**8, 2) for i in range(3)]
    assert annotate_cause(verdict_for(group), corpus(group)) == Cause.HIGH_VOLUME


def test_annotate_all_only_flagged():
    a = assignment_from_populations([30, 3])
    t = corpus([])
    nm = t.names[:33]
    v = annotate_all(flag_outlier_clusters(a, 33, 0.2, nm), FeatureTable.from_vectors(t.records[:33]))
    assert v[0].cause is None and v[1].cause in set(Cause)


pops_st = st.lists(st.integers(0, 200), min_size=1, max_size=12).filter(lambda p: sum(p) > 0)


@given(pops_st, st.floats(0.001, 0.999))
def test_gate_invariants(pops, frac):
    a = assignment_from_populations(pops)
    n = sum(pops)
    v = flag_outlier_clusters(a, n, frac)
    assert sum(x.population for x in v) == n
    assert len(flag_records(v, a)) == sum(x.population for x in v if x.flagged)
    assert all(x.flagged == (0 < x.population < x.threshold) for x in v)
    assert sum(x.population for x in v if x.flagged) <= len(pops) * frac * n


@given(pops_st, st.floats(0.001, 0.998), st.floats(0.0, 0.5))
def test_gate_monotone_in_frac(pops, frac, bump):
    bigger = min(0.999, frac + bump)
    a = assignment_from_populations(pops)
    n = sum(pops)
    small = {x.cluster for x in flag_outlier_clusters(a, n, frac) if x.flagged}
    large = {x.cluster for x in flag_outlier_clusters(a, n, bigger) if x.flagged}
    assert small <= large
