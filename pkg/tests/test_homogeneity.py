import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cfinsler.catalog import builtin_metric
from cfinsler.errors import DomainError, PreconditionError
from cfinsler.homogeneity import check_homogeneity
from cfinsler.jets import TangentPoint, compile_metric
from cfinsler.parser import parse_metric


def test_poincare_exact_scaling():
    m = builtin_metric("poincare_disk").compile()
    report = check_homogeneity(m, [(TangentPoint([0], [1]), 2)])
    assert report.max_residual == 0.0
    assert m.G([0], [2]) == 4.0


def test_non_homogeneous_input_fails():
    m = compile_metric(parse_metric("v1 + z1", 1))
    report = check_homogeneity(m, [(TangentPoint([0], [1]), 2)])
    assert report.differences[0] == pytest.approx(2.0)
    assert report.verdict == "FAIL"


def test_zero_lambda_rejected():
    m = builtin_metric("euclidean").compile()
    with pytest.raises(PreconditionError):
        check_homogeneity(m, [(TangentPoint([0, 0], [1, 0]), 0)])


def test_domain_error_names_sample():
    m = builtin_metric("ball_kobayashi").compile()
    with pytest.raises(DomainError) as info:
        check_homogeneity(m, [(TangentPoint([2, 0], [1, 0]), 1j)])
    assert info.value.sample is not None


_coord = st.floats(-0.35, 0.35)
_lam = st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False,
                          allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(_coord, min_size=8, max_size=8), _lam,
       st.sampled_from(["quartic_perturbation", "quartic_ball_perturbation",
                        "ball_kobayashi", "hermitian_nonkahler"]))
def test_catalog_metrics_are_homogeneous(xs, lam, name):
    m = builtin_metric(name).compile()
    z = np.array([xs[0] + 1j * xs[1], xs[2] + 1j * xs[3]])
    v = np.array([xs[4] + 1j * xs[5], xs[6] + 1j * xs[7]])
    if np.linalg.norm(v) < 1e-3:
        return
    report = check_homogeneity(m, [(TangentPoint(z, v), lam)])
    assert report.max_residual < 1e-12
