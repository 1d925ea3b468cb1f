import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import cfinsler.tensors as tensors
from cfinsler.errors import SingularLevi
from cfinsler.fd import fd_jets
from cfinsler.jets import TangentPoint, compile_metric
from cfinsler.parser import parse_metric
from cfinsler.tensors import (gamma, geodesic_condition_residual, holomorphic_curvature,
                              kahler_residual, levi, tensor_H_contracted, tensor_pack,
                              torsion_T_contracted)

from conftest import unit_sites

# Regression values from the symbolic engine at fixed sites; the jets
# behind them agree with the finite-difference oracle to < 4e-7 relative
# (see test_jets) and the tensors rebuilt from FD jets agree to < 1e-8.
QUARTIC_BALL_SITE = TangentPoint([0.3, -0.2j], [0.6, 0.5 + 0.2j])
QUARTIC_BALL_K = -3.884515594320436
QUARTIC_BALL_H = np.array([-0.00456596525488257 - 0.00365229366285504j,
                           0.00623470626209461 + 0.00188886989058843j])
QUARTIC_BALL_T = np.array([0.01678704915519957 - 0.01070564693688553j,
                           -0.01293599004873661 + 0.01802117234375722j])
NONKAHLER_SITE = TangentPoint([0.1, 0.2 + 0.1j], [1.0, 0.5j])
NONKAHLER_K = 0.2887878131542848
NONKAHLER_T = np.array([-0.25, -0.5j])
NONKAHLER_H = np.array([5 / 19, 10j / 19])


def test_levi_examples(metrics):
    L, M, lam = levi(metrics("euclidean"), TangentPoint([0.3, 1j], [0.2, 0.7]))
    assert np.allclose(L, np.eye(2)) and lam == pytest.approx(1.0)
    L, _, _ = levi(metrics("ball_kobayashi"), TangentPoint([0, 0], [1, 0]))
    assert np.allclose(L, np.eye(2), atol=1e-15)
    L, M, _ = levi(metrics("poincare_disk"), TangentPoint([0.5], [1]))
    assert L[0, 0] == pytest.approx(16 / 9, rel=1e-14)
    assert M[0, 0] * L[0, 0] == pytest.approx(1.0, rel=1e-14)


def test_degenerate_levi_raises():
    m = compile_metric(parse_metric("abs2(v1)", 2))
    with pytest.raises(SingularLevi) as info:
        levi(m, TangentPoint([0, 0], [1, 0]))
    assert info.value.min_eigenvalue <= 0


def test_gamma_examples(metrics):
    assert np.all(gamma(metrics("euclidean"), TangentPoint([0.1, 0.2], [1, 0])) == 0)
    p = metrics("poincare_disk")
    assert gamma(p, TangentPoint([0], [1]))[0, 0] == 0
    for t in (0.1, 0.4, -0.7):
        g = gamma(p, TangentPoint([t], [1]))[0, 0]
        assert g == pytest.approx(2 * t / (1 - t * t), rel=1e-13)


def test_curvature_examples(metrics):
    assert holomorphic_curvature(metrics("poincare_disk"), TangentPoint([0], [1])) == pytest.approx(-4.0, abs=1e-14)
    assert holomorphic_curvature(metrics("euclidean"), TangentPoint([0.4, -1j], [0.3, 0.9])) == 0.0
    site = TangentPoint([0.3, 0.1], [0.2, -0.5])
    assert holomorphic_curvature(metrics("ball_kobayashi"), site) == pytest.approx(-4.0, abs=1e-8)


def test_fubini_study_patch_has_curvature_plus_four(metrics):
    for z in (0, 0.3 + 0.2j, -1.5j):
        assert holomorphic_curvature(metrics("fubini_study_patch"), TangentPoint([z], [1])) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("name", ["euclidean", "poincare_disk", "fubini_study_patch", "ball_kobayashi"])
def test_kahler_metrics_have_zero_residual(metrics, name):
    for site in unit_sites(metrics(name), 10, seed=3):
        assert np.linalg.norm(kahler_residual(metrics(name), site)) < 1e-9


def test_hand_evaluated_non_kahler_residual(metrics):
    # g_{1 2bar} = z2: only d g_{1 2bar} / dz2 = 1 survives, giving (-1, 1) at v = e1 + e2
    site = TangentPoint([0, 0], [1, 1])
    m = metrics("hermitian_nonkahler")
    assert np.allclose(kahler_residual(m, site), [-1, 1], atol=1e-14)
    assert np.allclose(torsion_T_contracted(m, site), [-1, 1], atol=1e-14)


def test_h_examples(metrics):
    assert np.all(tensor_H_contracted(metrics("euclidean"), TangentPoint([0.2, 0], [1, 0])) == 0)
    for site in unit_sites(metrics("ball_kobayashi"), 10, seed=5):
        assert np.linalg.norm(tensor_H_contracted(metrics("ball_kobayashi"), site)) < 1e-8


def test_quartic_perturbation_is_z_independent(metrics):
    # no z enters the formula, so every curvature quantity vanishes
    m = metrics("quartic_perturbation")
    for site in unit_sites(m, 5):
        P = tensor_pack(m, site)
        assert P.K_F == 0 and not P.H_contracted.any() and not P.T_contracted.any()


def test_quartic_ball_regression(metrics):
    P = tensor_pack(metrics("quartic_ball_perturbation"), QUARTIC_BALL_SITE)
    assert P.K_F == pytest.approx(QUARTIC_BALL_K, abs=1e-12)
    assert np.allclose(P.H_contracted, QUARTIC_BALL_H, atol=1e-13)
    assert np.allclose(P.T_contracted, QUARTIC_BALL_T, atol=1e-13)
    assert np.allclose(P.kahler_residual, P.T_contracted, atol=1e-13)


def test_hermitian_nonkahler_regression(metrics):
    P = tensor_pack(metrics("hermitian_nonkahler"), NONKAHLER_SITE)
    assert P.K_F == pytest.approx(NONKAHLER_K, abs=1e-12)
    assert np.allclose(P.T_contracted, NONKAHLER_T, atol=1e-13)
    assert np.allclose(P.H_contracted, NONKAHLER_H, atol=1e-13)


def _fd_jet_arrays(metric, site, with_h=False):
    indices, blocks = tensors._layout(metric.n, with_h)
    values = np.asarray(fd_jets(metric, site, indices))
    J = {name: values[pos] for name, pos in blocks.items()}
    J["L"] = 0.5 * (J["L"] + J["L"].conj().T)
    return J


@pytest.mark.parametrize("name, site", [
    ("quartic_ball_perturbation", QUARTIC_BALL_SITE),
    ("ball_kobayashi", TangentPoint([0.3 + 0.1j, -0.2], [0.2, -0.5 + 0.1j])),
])
def test_tensors_from_fd_jets_agree(metrics, monkeypatch, name, site):
    m = metrics(name)
    P = tensor_pack(m, site)
    monkeypatch.setattr(tensors, "jet_arrays", _fd_jet_arrays)
    Q = tensor_pack(m, site, crosscheck=False)
    assert Q.K_F == pytest.approx(P.K_F, abs=1e-6)
    for attr in ("H_contracted", "T_contracted", "geodesic_condition_residual", "kahler_residual"):
        assert np.allclose(getattr(Q, attr), getattr(P, attr), atol=1e-6)


def test_condition_examples(metrics):
    assert np.allclose(geodesic_condition_residual(metrics("poincare_disk"), TangentPoint([0], [1])), 0, atol=1e-14)
    assert np.allclose(geodesic_condition_residual(metrics("euclidean"), TangentPoint([0, 0], [1, 0])), [-2, 0])
    for site in unit_sites(metrics("ball_kobayashi"), 10, seed=7):
        assert np.linalg.norm(geodesic_condition_residual(metrics("ball_kobayashi"), site)) < 1e-8


_c = st.complex_numbers(max_magnitude=0.45, allow_nan=False, allow_infinity=False)
_v = st.complex_numbers(min_magnitude=0.05, max_magnitude=2, allow_nan=False, allow_infinity=False)
_lam = st.complex_numbers(min_magnitude=0.2, max_magnitude=5, allow_nan=False, allow_infinity=False)
_names = st.sampled_from(["quartic_ball_perturbation", "hermitian_nonkahler", "ball_kobayashi"])


@settings(max_examples=40, deadline=None)
@given(_names, _c, _c, _v, _v, _lam)
def test_curvature_is_scale_invariant(metrics, name, z1, z2, v1, v2, lam):
    m = metrics(name)
    try:
        k = holomorphic_curvature(m, TangentPoint([z1, z2], [v1, v2]))
    except SingularLevi:
        return
    k_scaled = holomorphic_curvature(m, TangentPoint([z1, z2], [lam * v1, lam * v2]))
    assert k_scaled == pytest.approx(k, abs=1e-9 * max(1.0, abs(k)))


@settings(max_examples=40, deadline=None)
@given(_names, _c, _c, _v, _v)
def test_condition_contraction_measures_curvature_defect(metrics, name, z1, z2, v1, v2):
    # G_a (condition)^a = -(G^2 / 2)(K + 4): vanishing condition forces K = -4
    m = metrics(name)
    try:
        P = tensor_pack(m, TangentPoint([z1, z2], [v1, v2]), with_h=False)
    except SingularLevi:
        return
    lhs = P.jets["Gv"] @ P.geodesic_condition_residual
    rhs = -P.G**2 * (P.K_F + 4.0) / 2.0
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


@settings(max_examples=30, deadline=None)
@given(_c, _c, _v, _v)
def test_hermitian_metric_has_vanishing_holomorphic_hessian(metrics, z1, z2, v1, v2):
    P = tensor_pack(metrics("hermitian_nonkahler"), TangentPoint([z1, z2], [v1, v2]), with_h=False)
    assert np.all(np.abs(P.jets["Gvv"]) < 1e-14)
    assert np.allclose(P.kahler_residual, P.T_contracted, atol=1e-12)


def test_condition_holds_iff_curvature_and_h_vanish(metrics):
    for name, expected in [("ball_kobayashi", True), ("quartic_ball_perturbation", False),
                           ("hermitian_nonkahler", False), ("fubini_study_patch", False)]:
        m = metrics(name)
        for site in unit_sites(m, 8, seed=11):
            P = tensor_pack(m, site)
            cond = np.linalg.norm(P.geodesic_condition_residual) < 1e-7
            curv = abs(P.K_F + 4) < 1e-6 and np.linalg.norm(P.H_contracted) < 1e-6
            assert cond == curv == expected
