import numpy as np
import pytest

from cfinsler.disk import linear_disk
from cfinsler.errors import DomainExit, PreconditionError
from cfinsler.geodesic import (GeodesicOptions, Refusal, assemble_disk, holomorphy_residual,
                               integrate_ray, integrate_rays, solve_complex_geodesic, t_grid,
                               vector_fields_XZ)
from cfinsler.jets import TangentPoint


def test_vector_fields(metrics):
    X, Z = vector_fields_XZ(metrics("euclidean"), TangentPoint([0, 0], [1, 0]))
    assert np.array_equal(X, [1, 0, 0, 0]) and np.array_equal(Z, [0, 0, 1j, 0])
    X, _ = vector_fields_XZ(metrics("poincare_disk"), TangentPoint([0], [1]))
    assert np.allclose(X, [1, 0])
    X, _ = vector_fields_XZ(metrics("ball_kobayashi"), TangentPoint([0, 0], [1, 0]))
    assert np.allclose(X, [1, 0, 0, 0], atol=1e-15)
    with pytest.raises(PreconditionError):
        vector_fields_XZ(metrics("euclidean"), TangentPoint([0, 0], [2, 0]))


def test_ball_ray_is_hyperbolic_tangent(metrics):
    ray = integrate_ray(metrics("ball_kobayashi"), [0, 0], [1, 0], 0.0, s_max=3)
    assert np.allclose(ray.sigma[:, 0], np.tanh(ray.s), atol=1e-9)
    assert np.allclose(ray.sigma[:, 1], 0, atol=1e-12)
    assert np.allclose(ray.sigma_dot[:, 0], 1 / np.cosh(ray.s) ** 2, atol=1e-9)
    assert np.allclose(ray.norm_monitor, 1, atol=1e-8)


def test_poincare_rotated_ray(metrics):
    ray = integrate_ray(metrics("poincare_disk"), [0], [1], np.pi / 2, s_max=3)
    assert np.allclose(ray.sigma[:, 0], 1j * np.tanh(ray.s), atol=1e-9)


def test_euclidean_ray_is_free(metrics):
    ray = integrate_ray(metrics("euclidean"), [0, 0], [1, 0], 0.0, s_max=5)
    assert np.allclose(ray.sigma[:, 0], ray.s, atol=1e-12)
    assert np.allclose(ray.norm_monitor, 1)


def test_rays_are_rotation_coherent(metrics):
    m = metrics("ball_kobayashi")
    p, xi = np.array([0.5, 0]), np.array([0, np.sqrt(0.75)])
    xi = xi / m.F(p, xi)
    s = np.linspace(0, 2, 9)
    a, b = integrate_rays(m, p, xi, [0.0, 1.0], s)
    # rotating the initial direction rotates the curve about p
    ref = integrate_rays(m, p, np.exp(1j) * xi, [0.0], s)[0]
    assert np.allclose(b.sigma, ref.sigma, atol=1e-9)


def test_ray_leaving_the_ball(metrics):
    # near-flat metric on the ball: the unit-speed ray reaches the sphere before s = 5
    with pytest.raises(DomainExit):
        integrate_ray(metrics("hermitian_nonkahler"), [0, 0], [1, 0], 0.0, s_max=5)


def test_assemble_rejects_inconsistent_rays(metrics):
    m = metrics("euclidean")
    s = np.arctanh(t_grid(16, 2.0))
    a = integrate_rays(m, [0, 0], [1, 0], [0.0], s)[0]
    b = integrate_rays(m, [0.1, 0], [1, 0], [np.pi], s)[0]
    with pytest.raises(ValueError):
        assemble_disk([a, b], t_grid(16, 2.0))
    c = integrate_rays(m, [0, 0], [1, 0], [0.5], s)[0]
    with pytest.raises(ValueError):
        assemble_disk([a, c], t_grid(16, 2.0))


@pytest.fixture(scope="module")
def ball_trace():
    from cfinsler.catalog import builtin_metric
    m = builtin_metric("ball_kobayashi").compile()
    return m, solve_complex_geodesic(m, [0, 0], [1, 0], GeodesicOptions(check_uniqueness=True))


def test_ball_geodesic_is_linear_slice(ball_trace):
    _, trace = ball_trace
    assert trace.distance_to(linear_disk([1, 0]).phi) < 1e-6
    assert trace.holomorphy_residual < 1e-6
    assert trace.isometry_residual < 1e-6
    assert trace.realized_curvature == pytest.approx(-4, abs=1e-3)
    assert trace.uniqueness_distance < 1e-6
    assert "GEODESIC-COMPLEX-CURVE" in trace.flags


def test_trace_csv_shape(ball_trace):
    _, trace = ball_trace
    rows = trace.csv_rows()
    assert len(rows) == len(trace.thetas) * len(trace.ts)
    assert len(rows[0]) == len(trace.csv_header())


def test_poincare_geodesic_is_identity(metrics):
    trace = solve_complex_geodesic(metrics("poincare_disk"), [0], [1])
    assert trace.distance_to(lambda z: z[None, :]) < 1e-6
    assert trace.isometry_residual < 1e-8
    assert trace.realized_curvature == pytest.approx(-4, abs=1e-3)


def test_off_center_ball_geodesic(metrics):
    m = metrics("ball_kobayashi")
    p = np.array([0.5, 0])
    xi = np.array([0, 1.0]) / m.F(p, [0, 1.0])
    trace = solve_complex_geodesic(m, p, xi, GeodesicOptions(check_uniqueness=True))
    assert trace.holomorphy_residual < 1e-5
    assert trace.uniqueness_distance < 1e-6


def test_euclidean_refusal_and_forced_trace(metrics):
    m = metrics("euclidean")
    refusal = solve_complex_geodesic(m, [0, 0], [1, 0])
    assert isinstance(refusal, Refusal)
    assert np.array_equal(refusal.residual, [-2, 0])
    forced = solve_complex_geodesic(m, [0, 0], [1, 0], GeodesicOptions(force=True))
    assert "FORCED" in forced.flags and "NON-HOLOMORPHIC" in forced.flags
    assert holomorphy_residual(forced) >= 0.05


def test_direction_preconditions(metrics):
    m = metrics("ball_kobayashi")
    with pytest.raises(PreconditionError):
        solve_complex_geodesic(m, [0, 0], [0, 0])
    with pytest.raises(PreconditionError):
        solve_complex_geodesic(m, [0, 0], [2, 0])
    trace = solve_complex_geodesic(m, [0, 0], [1 + 5e-7, 0])
    assert trace.holomorphy_residual < 1e-6
