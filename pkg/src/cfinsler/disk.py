"""Scale functions on the unit disk and their curvature.

A pseudohermitian metric on the disk is ``g |dzeta|^2`` with ``g >= 0``.  Its
Gaussian curvature is ``-(1/2g) Lap(log g)``, with the Laplacian taken from
circle means so that it also makes sense for merely continuous scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np

from .errors import DomainError
from .tensors import compiled

# Rounding in q(r) grows like eps |u| / r^2, so radii stay well above 1e-2.
BASE_RADII = (0.1, 0.05, 0.025)
DEFAULT_SAMPLES = 256


def default_radii(z0) -> tuple:
    """BASE_RADII, shrunk near the boundary to keep circles well inside the disk."""
    s = min(1.0, 5.0 * (1.0 - abs(complex(z0))))
    if s <= 0:
        raise DomainError(f"{z0!r} is not inside the unit disk")
    return tuple(r * s for r in BASE_RADII)


@dataclass
class DiskScale:
    """Scale function ``g`` of a pseudohermitian metric on the unit disk.

    ``evaluator`` must accept complex numpy arrays.
    """

    evaluator: Callable
    smooth: bool = True
    zero_set: str | None = None
    label: str = "g"

    def __call__(self, zeta):
        return np.asarray(self.evaluator(np.asarray(zeta, dtype=complex)), dtype=float)

    def scaled(self, c: float) -> "DiskScale":
        return DiskScale(lambda z: c * self.evaluator(z), self.smooth, self.zero_set,
                         f"{c!r}*{self.label}")


def poincare_scale(a: float = 1.0) -> DiskScale:
    """g_a(zeta) = 1 / (a (1 - |zeta|^2)^2), curvature -4a."""
    if a <= 0:
        raise ValueError("a must be positive")

    def g(z):
        out = 1.0 / (a * (1.0 - np.abs(z) ** 2) ** 2)
        if np.any(np.abs(z) >= 1):
            raise DomainError("point outside the unit disk")
        return out

    return DiskScale(g, label=f"g_{a!r}")


def _check_inside(z0, r):
    if abs(z0) + r >= 1.0:
        raise DomainError(f"circle of radius {r!r} about {z0!r} leaves the unit disk")


def _circle(z0, r, m):
    theta = 2.0 * np.pi * np.arange(m) / m
    return z0 + r * np.exp(1j * theta)


def circle_mean(u, z0, r, m=DEFAULT_SAMPLES) -> float:
    """Mean of ``u`` over the circle of radius ``r`` about ``z0``, m equispaced samples."""
    z0 = complex(z0)
    if m < 3:
        raise ValueError("need at least 3 samples")
    _check_inside(z0, r)
    values = np.asarray(u(_circle(z0, r, m)), dtype=float)
    return math.fsum(values) / m


@dataclass
class LaplacianEstimate:
    value: float
    quotients: list = field(default_factory=list)
    tag: str = "EXTRAPOLATED"


def laplacian_estimate(u, z0, radii=None, m=DEFAULT_SAMPLES,
                       smooth=True) -> LaplacianEstimate:
    """Circle-mean Laplacian with its per-radius quotients.

    q(r) = 4 (mean_r(u) - u(z0)) / r^2.  Smooth inputs get Richardson
    extrapolation in r^2 over all radii; otherwise the
    smallest quotient is returned and tagged LOWER-ESTIMATE.
    """
    z0 = complex(z0)
    radii = [float(r) for r in (radii if radii is not None else default_radii(z0))]
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    u0 = float(np.asarray(u(np.array([z0])), dtype=float)[0])
    quotients = []
    for r in radii:
        _check_inside(z0, r)
        values = np.asarray(u(_circle(z0, r, m)), dtype=float)
        # Subtract before summing: the difference is O(r^2).
        quotients.append(4.0 * math.fsum(values - u0) / m / r**2)
    if not smooth:
        return LaplacianEstimate(min(quotients), quotients, "LOWER-ESTIMATE")
    # Neville extrapolation to r^2 = 0
    x = [r * r for r in radii]
    table = list(quotients)
    for level in range(1, len(radii)):
        table = [(x[k] * table[k + 1] - x[k + level] * table[k]) / (x[k] - x[k + level])
                 for k in range(len(table) - 1)]
    return LaplacianEstimate(table[0], quotients)


def generalized_laplacian(u, z0, radii=None, m=DEFAULT_SAMPLES, smooth=True) -> float:
    """Circle-mean Laplacian of ``u`` at ``z0``; equals 4 d^2u/dzeta dzetabar for smooth u."""
    return laplacian_estimate(u, z0, radii, m, smooth).value


def gaussian_curvature(g: DiskScale, z0, radii=None, m=DEFAULT_SAMPLES) -> float:
    """K = -Lap(log g) / (2 g) at ``z0``; refuses points where g vanishes on the stencil."""
    z0 = complex(z0)
    g0 = float(g(np.array([z0]))[0])
    if not g0 > 0:
        raise DomainError(f"scale vanishes at {z0!r}")

    def log_g(z):
        vals = g(z)
        if np.any(vals <= 0):
            raise DomainError("scale vanishes on the sampling circle")
        return np.log(vals)

    lap = generalized_laplacian(log_g, z0, radii, m, smooth=g.smooth)
    return -lap / (2.0 * g0)


@dataclass
class DiskMap:
    """Holomorphic disk ``phi: U -> C^n`` with its derivative.

    Both callables map a complex array of shape (m,) to shape (n, m).
    """

    phi: Callable
    dphi: Callable
    label: str = "phi"


def linear_disk(direction, center=None) -> DiskMap:
    """zeta -> center + zeta * direction."""
    d = np.asarray(direction, dtype=complex)
    c = np.zeros_like(d) if center is None else np.asarray(center, dtype=complex)
    return DiskMap(
        lambda z: c[:, None] + d[:, None] * np.atleast_1d(z)[None, :],
        lambda z: np.broadcast_to(d[:, None], (len(d), np.atleast_1d(z).size)).copy(),
        label="linear",
    )


def polynomial_disk(coeffs) -> DiskMap:
    """zeta -> sum_k coeffs[k] zeta^k; ``coeffs`` has shape (degree + 1, n)."""
    c = np.asarray(coeffs, dtype=complex)

    def phi(z):
        z = np.atleast_1d(z)
        powers = z[None, :] ** np.arange(len(c))[:, None]
        return c.T @ powers

    def dphi(z):
        z = np.atleast_1d(z)
        k = np.arange(1, len(c))
        powers = k[:, None] * z[None, :] ** (k - 1)[:, None]
        return c[1:].T @ powers

    return DiskMap(phi, dphi, label="polynomial")


def random_polynomial_disk(rng, n, degree=3, margin=0.05) -> DiskMap:
    """Random polynomial map of the disk into the unit ball of C^n.

    The coefficient norms sum to ``1 - margin``, which keeps the image inside.
    """
    c = rng.normal(size=(degree + 1, n)) + 1j * rng.normal(size=(degree + 1, n))
    weights = rng.dirichlet(np.ones(degree + 1))
    c = c / np.linalg.norm(c, axis=1)[:, None] * (weights * (1.0 - margin))[:, None]
    return polynomial_disk(c)


def pullback_scale(metric, disk_map: DiskMap) -> DiskScale:
    """g(zeta) = G(phi(zeta); phi'(zeta))."""
    metric = compiled(metric)

    def g(z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return metric.G(disk_map.phi(z), disk_map.dphi(z))

    return DiskScale(g, smooth=True, zero_set="zeros of phi'", label=f"{disk_map.label}^*G")


@dataclass
class PolarGrid:
    """n_r radii in (0, r_max] times n_theta equispaced angles."""

    n_r: int = 20
    n_theta: int = 20
    r_max: float = 0.9

    def points(self) -> np.ndarray:
        if not 0 < self.r_max < 1:
            raise ValueError("r_max must lie in (0, 1)")
        r = self.r_max * np.arange(1, self.n_r + 1) / self.n_r
        theta = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        return (r[:, None] * np.exp(1j * theta)[None, :]).ravel()


@dataclass
class AhlforsReport:
    a: float
    rows: list
    max_excess: float
    flags: list
    equality_everywhere: bool | None = None

    @property
    def violation(self):
        return "VIOLATION" in self.flags

    @property
    def heins_equality(self):
        return "HEINS-EQUALITY" in self.flags

    def csv_rows(self):
        """Rows (zeta, g, g_a, margin) with margin = g_a - g."""
        return [(complex(z), g, ga, ga - g) for z, g, ga in self.rows]


def ahlfors_compare(g: DiskScale, a: float = 1.0, grid: PolarGrid | None = None,
                    tol: float = 1e-8) -> AhlforsReport:
    """Compare ``g`` with g_a on a grid.

    VIOLATION when g exceeds g_a by more than ``tol``; HEINS-EQUALITY when the
    two agree to ``tol`` (relative to g_a) at some point with g > 0.  In that
    case ``equality_everywhere`` records whether they agree on the whole grid.
    """
    grid = grid or PolarGrid()
    z = grid.points()
    gv = g(z)
    ga = poincare_scale(a)(z)
    excess = gv - ga
    flags = []
    if np.max(excess) > tol:
        flags.append("VIOLATION")
    close = np.abs(excess) <= tol * np.maximum(1.0, ga)
    equal_everywhere = None
    if np.any(close & (gv > 0)):
        flags.append("HEINS-EQUALITY")
        equal_everywhere = bool(np.all(close))
    rows = list(zip(z.tolist(), gv.tolist(), ga.tolist()))
    return AhlforsReport(a, rows, float(np.max(excess)), flags, equal_everywhere)


def poincare_match(g: DiskScale, grid: PolarGrid | None = None, tol: float = 1e-6):
    """When g(0) = 1, the largest relative deviation of g from g_1 on the grid.

    Returns None if g(0) differs from 1 by more than ``tol``; a disk attaining
    the bound at the origin under curvature <= -4 must be the Poincare metric.
    """
    g0 = float(g(np.array([0j]))[0])
    if abs(g0 - 1.0) > tol:
        return None
    z = (grid or PolarGrid()).points()
    g1 = poincare_scale(1.0)(z)
    return float(np.max(np.abs(g(z) - g1) / g1))
