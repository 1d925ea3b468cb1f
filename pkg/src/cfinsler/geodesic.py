"""Radial construction of holomorphic disks solving the complex geodesic system.

Each ray ``theta`` solves ``sigma'' = -Gamma(sigma; sigma') sigma'`` in the
variable ``s = atanh t`` with ``sigma(0) = p`` and ``sigma'(0) = e^{i theta} xi``.
The candidate disk is ``phi(t e^{i theta}) = sigma_theta(atanh t)`` and its
derivative is reconstructed radially as ``e^{-i theta} d sigma / dt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import math

import numpy as np
from scipy.integrate import solve_ivp

from .disk import DiskScale, default_radii, gaussian_curvature
from .errors import DomainError, DomainExit, PreconditionError, SingularLevi, StepFailure
from .jets import TangentPoint, canonical_index
from .tensors import PSEUDOCONVEXITY_FACTOR, compiled, tensor_pack

NORMALIZE_TOL = 1e-6
UNIT_TOL = 1e-9
HOLOMORPHY_WARNING = 1e-5


def _gamma_kinds(n):
    levi = [canonical_index((("v", a), ("vbar", b))) for a in range(1, n + 1)
            for b in range(1, n + 1)]
    mixed = [canonical_index((("vbar", m), ("z", i))) for m in range(1, n + 1)
             for i in range(1, n + 1)]
    return levi + mixed


def gamma_contracted(metric, p, v) -> np.ndarray:
    """Gamma^a_{;i}(p; v) v^i for a batch of sites; ``p``, ``v`` shaped (n, m)."""
    n = metric.n
    values = metric.evaluate(_gamma_kinds(n), p, v)
    m = p.shape[1]
    arr = np.array(values).reshape(2, n, n, m)
    L = np.moveaxis(arr[0], -1, 0)
    B = np.moveaxis(arr[1], -1, 0)
    Lh = 0.5 * (L + np.conj(np.swapaxes(L, 1, 2)))
    eig = np.linalg.eigvalsh(Lh)[:, 0]
    trace = np.abs(np.trace(Lh, axis1=1, axis2=2).real)
    if np.any(eig <= PSEUDOCONVEXITY_FACTOR * trace / n):
        raise SingularLevi("Levi matrix degenerates along the ray",
                           min_eigenvalue=float(eig.min()))
    # Gamma v = M (B v) with M = inv(L^T)
    rhs = np.einsum("kmi,ik->km", B, v)
    out = np.linalg.solve(np.swapaxes(L, 1, 2), rhs[..., None])[..., 0]
    return out.T


def vector_fields_XZ(metric, site):
    """Components of X = v d/dz - Gamma v d/dv and Z = i v d/dv at a unit vector.

    Each is returned as a 2n vector (z-slots first, then v-slots).
    """
    metric = compiled(metric)
    F = metric.F(site.p, site.v)
    if abs(F - 1.0) > UNIT_TOL:
        raise PreconditionError(f"F(p; v) = {F!r}, expected 1")
    gv = gamma_contracted(metric, site.p[:, None], site.v[:, None])[:, 0]
    X = np.concatenate([site.v, -gv])
    Z = np.concatenate([np.zeros(metric.n, dtype=complex), 1j * site.v])
    return X, Z


@dataclass
class RayTrace:
    """One ray of the radial construction, sampled at ``s``."""

    theta: float
    p: np.ndarray
    xi: np.ndarray
    s: np.ndarray
    sigma: np.ndarray
    sigma_dot: np.ndarray
    norm_monitor: np.ndarray
    dense: object = field(default=None, repr=False)

    @property
    def t(self):
        return np.tanh(self.s)

    @property
    def samples(self):
        return list(zip(self.s, self.t, self.sigma, self.sigma_dot))


def _integrate(metric, p, xi, thetas, s_eval, rtol, atol, method="DOP853"):
    """Integrate all rays together; returns (s, y[k, :, j]) plus the solver solution."""
    n = metric.n
    K = len(thetas)
    phases = np.exp(1j * np.asarray(thetas))
    y0 = np.concatenate([np.tile(p, (K, 1)), phases[:, None] * xi[None, :]], axis=1)

    def rhs(_, y):
        Y = y.reshape(K, 2 * n)
        sig, dsig = Y[:, :n].T, Y[:, n:].T
        try:
            acc = -gamma_contracted(metric, sig, dsig)
        except DomainError as exc:
            raise DomainExit(f"ray left the domain of {metric.name}: {exc}") from None
        return np.concatenate([dsig.T, acc.T], axis=1).ravel()

    events = None
    if metric.domain == "ball":
        def leave(_, y):
            Y = y.reshape(K, 2 * n)
            return float(np.min(metric.domain_margin(Y[:, :n].T))) - 1e-12
        leave.terminal = True
        leave.direction = -1
        events = [leave]

    s_max = float(s_eval[-1])
    try:
        sol = solve_ivp(rhs, (0.0, s_max), y0.ravel(), method=method, t_eval=s_eval,
                        rtol=rtol, atol=atol, events=events, dense_output=True)
    except DomainExit as exc:
        raise DomainExit(str(exc)) from None
    if sol.status == 1:
        raise DomainExit(f"ray left the domain of {metric.name}", s=float(sol.t_events[0][0]))
    if sol.status != 0:
        raise StepFailure(sol.message)
    return sol.t, sol.y.reshape(K, 2 * n, -1), sol.sol


def _check_unit(metric, p, xi):
    F = metric.F(p, xi)
    if abs(F - 1.0) > UNIT_TOL:
        raise PreconditionError(f"F(p; xi) = {F!r}; rays need a unit vector")


def _norm_monitor(metric, sigma, dsigma):
    return np.asarray(metric.G(sigma.T, dsigma.T), dtype=float)


def integrate_rays(metric, p, xi, thetas, s_eval, rtol=1e-10, atol=1e-12):
    """Integrate several rays sharing (p, xi); returns a list of RayTrace."""
    metric = compiled(metric)
    p = np.asarray(p, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    _check_unit(metric, p, xi)
    s_eval = np.asarray(s_eval, dtype=float)
    if s_eval[0] != 0.0 or np.any(np.diff(s_eval) <= 0):
        raise ValueError("s grid must start at 0 and increase")
    n = metric.n
    s, Y, dense = _integrate(metric, p, xi, thetas, s_eval, rtol, atol)
    rays = []
    for k, theta in enumerate(thetas):
        sig = Y[k, :n].T
        dsig = Y[k, n:].T
        sl = slice(k * 2 * n, (k + 1) * 2 * n)
        rays.append(RayTrace(float(theta), p, xi, s, sig, dsig, _norm_monitor(metric, sig, dsig),
                             dense=lambda x, sl=sl: dense(x)[sl]))
    return rays


def integrate_ray(metric, p, xi, theta, s_max=5.0, tol=1e-10, n_samples=64) -> RayTrace:
    """Single ray on an equispaced s grid of ``n_samples`` points."""
    s_eval = np.linspace(0.0, s_max, n_samples)
    return integrate_rays(metric, p, xi, [theta], s_eval, rtol=tol, atol=tol * 1e-2)[0]


def t_grid(n_t=48, s_max=5.0):
    """Points in [0, tanh s_max] clustered toward the outer edge."""
    j = np.arange(n_t)
    return math.tanh(s_max) * np.sin(np.pi * j / (2 * (n_t - 1)))


@dataclass
class GeodesicTrace:
    """Candidate disk on the polar grid (theta_k, t_j) with diagnostics.

    ``phi[k, j]`` and ``dphi[k, j]`` are complex n-vectors.
    """

    site: TangentPoint
    thetas: np.ndarray
    ts: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    norm_monitor: np.ndarray
    dsigma: np.ndarray | None = field(default=None, repr=False)
    probe: dict = field(default_factory=dict)
    holomorphy_residual: float | None = None
    isometry_residual: float | None = None
    realized_curvature: float | None = None
    K_F: float | None = None
    condition_residual: np.ndarray | None = None
    kahler_residual: np.ndarray | None = None
    uniqueness_distance: float | None = None
    norm_drift: float | None = None
    flags: list = field(default_factory=list)

    def sup_distance(self, other: "GeodesicTrace") -> float:
        return float(np.max(np.abs(self.phi - other.phi)))

    def distance_to(self, disk_map) -> float:
        """Sup distance from an analytic map ``zeta -> C^n`` on the grid."""
        zeta = self.ts[None, :] * np.exp(1j * self.thetas)[:, None]
        ref = disk_map(zeta.ravel()).T.reshape(self.phi.shape)
        return float(np.max(np.abs(self.phi - ref)))

    def csv_rows(self):
        """Rows: theta, t, Re/Im of each phi component, h, pointwise holomorphy residual."""
        pointwise = _holomorphy_pointwise(self)
        rows = []
        for k, j in itertools.product(range(len(self.thetas)), range(len(self.ts))):
            row = [float(self.thetas[k]), float(self.ts[j])]
            for c in self.phi[k, j]:
                row += [float(c.real), float(c.imag)]
            row += [float(self.norm_monitor[k, j]), float(pointwise[k, j])]
            rows.append(row)
        return rows

    def csv_header(self):
        n = self.phi.shape[-1]
        cols = ["theta", "t"]
        for a in range(1, n + 1):
            cols += [f"re_phi{a}", f"im_phi{a}"]
        return cols + ["h", "holomorphy"]


def assemble_disk(rays, ts, probe_radii=()) -> GeodesicTrace:
    """Resample rays at s = atanh t; rays must share (p, xi) and form a uniform theta grid."""
    if not rays:
        raise ValueError("no rays")
    ref = rays[0]
    for ray in rays[1:]:
        if not (np.array_equal(ray.p, ref.p) and np.array_equal(ray.xi, ref.xi)):
            raise ValueError("rays do not share the base point and initial direction")
    thetas = np.array([r.theta for r in rays])
    K = len(rays)
    if not np.allclose(thetas, thetas[0] + 2 * np.pi * np.arange(K) / K, atol=1e-12):
        raise ValueError("ray angles must form a uniform grid")
    ts = np.asarray(ts, dtype=float)
    n = len(ref.p)

    def sample(t):
        s = np.arctanh(t)
        if np.any(s > ref.s[-1] * (1 + 1e-12)):
            raise ValueError("t grid exceeds the integrated range")
        vals = np.stack([np.asarray(r.dense(s)) for r in rays])  # (K, 2n, len(t))
        sig = np.moveaxis(vals[:, :n], 1, 2)
        dsig = np.moveaxis(vals[:, n:], 1, 2)
        return sig, dsig

    sig, dsig = sample(ts)
    phase = np.exp(-1j * thetas)[:, None, None]
    dphi = phase * dsig / (1.0 - ts**2)[None, :, None]
    trace = GeodesicTrace(site=TangentPoint(ref.p, ref.xi), thetas=thetas, ts=ts, phi=sig,
                          dphi=dphi, norm_monitor=np.zeros(sig.shape[:2]), dsigma=dsig)
    for r in probe_radii:
        psig, pdsig = sample(np.array([r]))
        trace.probe[float(r)] = (psig[:, 0], phase[:, 0] * pdsig[:, 0] / (1.0 - r * r))
    return trace


def _spectral_theta_derivative(f, axis=0):
    K = f.shape[axis]
    k = np.fft.fftfreq(K, d=1.0 / K)
    if K % 2 == 0:
        k[K // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = K
    return np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(f, axis=axis), axis=axis)


def _holomorphy_pointwise(trace):
    d_theta = _spectral_theta_derivative(trace.phi)
    radial = trace.ts[None, :, None] * trace.dsigma / (1.0 - trace.ts**2)[None, :, None]
    num = np.linalg.norm(d_theta - 1j * radial, axis=-1)
    return num / (1.0 + np.linalg.norm(radial, axis=-1))


def holomorphy_residual(trace) -> float:
    """sup |d_theta phi - i t d_t phi| / (1 + |t d_t phi|) over the grid.

    The theta derivative is spectral across rays, the t derivative comes from
    the integrated velocity.
    """
    if len(trace.thetas) < 16 or len(trace.ts) < 16:
        raise PreconditionError("holomorphy check needs at least 16 angles and 16 radii")
    return float(np.max(_holomorphy_pointwise(trace)))


def isometry_residual(trace, metric) -> float:
    """sup |G(phi; phi') (1 - t^2)^2 - 1| over the grid."""
    metric = compiled(metric)
    _check_unit(metric, trace.site.p, trace.site.v)
    n = trace.phi.shape[-1]
    z = trace.phi.reshape(-1, n).T
    v = trace.dphi.reshape(-1, n).T
    g = np.asarray(metric.G(z, v), dtype=float).reshape(trace.phi.shape[:2])
    trace.norm_monitor = g * (1.0 - trace.ts**2)[None, :] ** 2
    return float(np.max(np.abs(trace.norm_monitor - 1.0)))


def trace_scale(trace, metric) -> DiskScale:
    """Pullback scale of the trace, defined on circles of the probe radii at the ray angles."""
    metric = compiled(metric)
    K = len(trace.thetas)
    g0 = metric.G(trace.site.p, trace.site.v)
    tables = {}
    for r, (sig, dphi) in trace.probe.items():
        tables[r] = np.asarray(metric.G(sig.T, dphi.T), dtype=float)

    def g(z):
        z = np.atleast_1d(z)
        out = np.empty(z.shape, dtype=float)
        for idx, w in enumerate(z):
            r = abs(w)
            if r < 1e-15:
                out[idx] = g0
                continue
            key = min(tables, key=lambda x: abs(x - r)) if tables else None
            if key is None or abs(key - r) > 1e-12 * max(1.0, r):
                raise DomainError(f"trace scale not sampled at radius {r!r}")
            k = (np.angle(w) - trace.thetas[0]) / (2 * np.pi) * K
            kk = int(round(k)) % K
            if abs(k - round(k)) > 1e-6:
                raise DomainError("trace scale sampled only at the ray angles")
            out[idx] = tables[key][kk]
        return out

    return DiskScale(g, smooth=True, label="trace")


def realized_curvature(trace, metric) -> float:
    """Gaussian curvature at the origin of the pullback of G along the trace."""
    radii = sorted(trace.probe, reverse=True)
    return gaussian_curvature(trace_scale(trace, metric), 0.0, radii=radii, m=len(trace.thetas))


@dataclass
class Refusal:
    """No holomorphic solution: the pointwise condition fails at the initial site."""

    site: TangentPoint
    residual: np.ndarray
    reason: str

    @property
    def residual_norm(self):
        return float(np.linalg.norm(self.residual))


@dataclass
class GeodesicOptions:
    condition_tol: float = 1e-7
    kahler_tol: float = 1e-7
    n_rays: int = 64
    n_t: int = 48
    s_max: float = 5.0
    rtol: float = 1e-10
    atol: float = 1e-12
    force: bool = False
    check_uniqueness: bool = False


def normalize_direction(metric, p, xi):
    """Rescale ``xi`` to unit length when it is within 1e-6 of unit length."""
    metric = compiled(metric)
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if not np.any(xi):
        raise PreconditionError("xi must be nonzero")
    F = metric.F(p, xi)
    if abs(F - 1.0) > NORMALIZE_TOL:
        raise PreconditionError(f"F(p; xi) = {F!r}; expected a unit vector (tolerance 1e-6)")
    return p, xi / F


def _build_trace(metric, p, xi, opts, rtol, atol):
    thetas = 2 * np.pi * np.arange(opts.n_rays) / opts.n_rays
    ts = t_grid(opts.n_t, opts.s_max)
    probes = default_radii(0.0)
    s_eval = np.unique(np.concatenate([np.arctanh(ts), np.arctanh(probes)]))
    rays = integrate_rays(metric, p, xi, thetas, s_eval, rtol=rtol, atol=atol)
    return assemble_disk(rays, ts, probe_radii=probes), rays


def solve_complex_geodesic(metric, p, xi, opts: GeodesicOptions | None = None):
    """Holomorphic disk through (p; xi), or a Refusal when none can exist.

    The pointwise condition is checked first; when it fails a Refusal carries
    the residual unless ``opts.force`` is set, in which case the radial
    construction runs anyway and the trace is flagged FORCED.
    """
    opts = opts or GeodesicOptions()
    metric = compiled(metric)
    p, xi = normalize_direction(metric, p, xi)
    pack = tensor_pack(metric, TangentPoint(p, xi), with_h=False)
    residual = pack.geodesic_condition_residual
    ok = np.linalg.norm(residual) <= opts.condition_tol
    flags = []
    if not ok:
        if not opts.force:
            return Refusal(pack.site, residual,
                           "pointwise condition for a holomorphic solution fails at (p; xi)")
        flags.append("FORCED")
    trace, rays = _build_trace(metric, p, xi, opts, opts.rtol, opts.atol)
    trace.condition_residual = residual
    trace.kahler_residual = pack.kahler_residual
    trace.K_F = pack.K_F
    trace.holomorphy_residual = holomorphy_residual(trace)
    trace.isometry_residual = isometry_residual(trace, metric)
    trace.realized_curvature = realized_curvature(trace, metric)
    # h is conditioned like 1/(1 - t^2) near the rim, so drift is weighted by it
    ray_drift = max(float(np.max(np.abs(r.norm_monitor - 1.0) * (1.0 - r.t**2))) for r in rays)
    trace.norm_drift = ray_drift
    if ray_drift > 10 * opts.rtol:
        flags.append("NORM-DRIFT")
    if trace.holomorphy_residual > HOLOMORPHY_WARNING:
        # the radial derivative is not a complex derivative, so the realized
        # curvature describes the reconstruction rather than a pullback
        flags.append("NON-HOLOMORPHIC")
    elif ok and np.linalg.norm(pack.kahler_residual) <= opts.kahler_tol:
        flags.append("GEODESIC-COMPLEX-CURVE")
    if opts.check_uniqueness:
        finer, _ = _build_trace(metric, p, xi, opts, opts.rtol / 2, opts.atol / 2)
        trace.uniqueness_distance = trace.sup_distance(finer)
    trace.flags = flags
    return trace
