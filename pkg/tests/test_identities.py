import pytest

from cfinsler.catalog import BUILTIN_NAMES
from cfinsler.identities import directional_derivative, identity_suite, torsion_flow_crosscheck
from cfinsler.jets import TangentPoint

from conftest import unit_sites


def test_directional_derivative_of_polynomial():
    assert directional_derivative(lambda t: 3 * t**3 - 2 * t + 1, 0.1) == pytest.approx(-2, abs=1e-13)


def test_euclidean_identities_vanish(metrics):
    report = identity_suite(metrics("euclidean"), TangentPoint([0.3, -0.2j], [0.5, 0.5j]))
    exact = {k: r for k, r in report.residuals.items() if k != "inverse_derivative"}
    assert max(exact.values()) == 0.0
    # the finite-difference route only sees stencil round-off
    assert report.residuals["inverse_derivative"] < 1e-13


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_identities_hold_on_catalog(metrics, name):
    for site in unit_sites(metrics(name), 10, seed=2):
        report = identity_suite(metrics(name), site)
        assert report.passed(1e-9), report.residuals


def test_report_lists_each_identity(metrics):
    report = identity_suite(metrics("ball_kobayashi"), TangentPoint([0.1, 0.2], [0.3, 0.4j]))
    for key in ("euler_first", "inverse_levi_gradient", "inverse_derivative",
                "gamma_vbar_contraction", "torsion_equals_kahler"):
        assert key in report.residuals


def test_directional_crosscheck_euclidean(metrics):
    assert torsion_flow_crosscheck(metrics("euclidean"), TangentPoint([0.2, 0.1], [1, 0])) < 1e-12


@pytest.mark.parametrize("name", ["ball_kobayashi", "quartic_perturbation",
                                  "quartic_ball_perturbation", "hermitian_nonkahler"])
def test_directional_crosscheck(metrics, name):
    for site in unit_sites(metrics(name), 3, seed=4):
        assert torsion_flow_crosscheck(metrics(name), site) < 1e-6
