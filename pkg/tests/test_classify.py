import json

import numpy as np
import pytest

from cfinsler.catalog import builtin_metric
from cfinsler.classify import SamplerConfig, classify_metric, pointwise_geodesic_gate, sample_sites
from cfinsler.errors import ClassificationAborted, HypothesesNotEstablished
from cfinsler.jets import compile_metric
from cfinsler.parser import parse_metric

SMALL = SamplerConfig(samples=40)


@pytest.fixture(scope="module")
def ball_report():
    return classify_metric(builtin_metric("ball_kobayashi"), SMALL)


def test_sites_are_unit_and_inside_domain():
    m = builtin_metric("ball_kobayashi").compile()
    sites = sample_sites(m, SamplerConfig(samples=30, seed=9))
    assert len(sites) == 30
    for s in sites:
        assert np.linalg.norm(s.p) < 0.7
        assert m.F(s.p, s.v) == pytest.approx(1.0, abs=1e-12)


def test_sampling_is_seeded():
    m = builtin_metric("euclidean").compile()
    a = sample_sites(m, SamplerConfig(samples=5, seed=1))
    b = sample_sites(m, SamplerConfig(samples=5, seed=1))
    c = sample_sites(m, SamplerConfig(samples=5, seed=2))
    assert all(np.array_equal(x.p, y.p) and np.array_equal(x.v, y.v) for x, y in zip(a, b))
    assert not np.array_equal(a[0].p, c[0].p)


def test_ball_passes_everything(ball_report):
    r = ball_report
    for verdict in (r.strongly_pseudoconvex, r.curvature_constant_minus4, r.H_vanishes,
                    r.kahler, r.geodesic_condition):
        assert verdict.verdict == "PASS"
    assert r.condition_curvature_consistent
    assert {c["verdict"] for c in r.corollaries.values()} == {"POSITIVE"}
    assert "Kobayashi metric" in r.corollaries["kobayashi_identification"]["statement"]


@pytest.mark.parametrize("name", ["euclidean", "fubini_study_patch", "quartic_perturbation",
                                  "quartic_ball_perturbation", "hermitian_nonkahler"])
def test_other_metrics_are_negative(name):
    r = classify_metric(builtin_metric(name), SMALL)
    assert r.curvature_constant_minus4.verdict == "FAIL"
    assert r.geodesic_condition.verdict == "FAIL"
    assert r.condition_curvature_consistent
    assert {c["verdict"] for c in r.corollaries.values()} == {"NEGATIVE"}


def test_quartic_ball_statistics():
    r = classify_metric(builtin_metric("quartic_ball_perturbation"), SMALL)
    lo, hi = r.curvature_range
    assert lo < hi < 0
    assert r.H_vanishes.verdict == "FAIL" and r.kahler.verdict == "FAIL"


def test_undeclared_completeness_leaves_corollaries_open():
    entry = builtin_metric("ball_kobayashi")
    entry.complete = None
    r = classify_metric(entry, SMALL)
    assert r.corollaries["kobayashi_identification"]["verdict"] == "UNDETERMINED"
    assert r.corollaries["pointwise_geodesic_curves"]["verdict"] == "POSITIVE"


def test_degenerate_metric_aborts():
    m = compile_metric(parse_metric("abs2(v1)", 2))
    with pytest.raises(ClassificationAborted, match="NOT-STRONGLY-PSEUDOCONVEX"):
        classify_metric(m, SMALL)


def test_report_is_deterministic_across_threads():
    entry = builtin_metric("quartic_ball_perturbation")
    one = classify_metric(entry, SamplerConfig(samples=30, threads=1)).to_json()
    four = classify_metric(entry, SamplerConfig(samples=30, threads=4)).to_json()
    assert one == four
    assert json.loads(one)["schema_version"] == 1


def test_gate(ball_report):
    ball = builtin_metric("ball_kobayashi")
    assert pointwise_geodesic_gate(ball_report, ball, [0.2, 0.1j], [0.3, 0.5]) == "EXISTS"
    for name in ("euclidean", "hermitian_nonkahler"):
        report = classify_metric(builtin_metric(name), SMALL)
        with pytest.raises(HypothesesNotEstablished):
            pointwise_geodesic_gate(report, builtin_metric(name), [0, 0], [1, 0])
