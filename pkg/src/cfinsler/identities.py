"""Analytic identities among the jets of G, checked numerically at a site.

Every residual is ``max|lhs - rhs| / max(1, max|lhs|, max|rhs|)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jets import TangentPoint
from .tensors import _as_site, _levi_parts, compiled, tensor_pack

# 4th-order central first-derivative weights on nodes -2..2
_D1 = ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))


def _residual(lhs, rhs):
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    scale = max(1.0, np.max(np.abs(lhs), initial=0.0), np.max(np.abs(rhs), initial=0.0))
    return float(np.max(np.abs(lhs - rhs), initial=0.0) / scale)


def directional_derivative(f, h):
    """Derivative at t=0 of a real-parameter function, 4th order plus one Richardson step."""
    def central(step):
        return sum(w * f(k * step) for k, w in _D1) / step
    return (16.0 * central(h / 2) - central(h)) / 15.0


def _inverse_levi(metric, p, v):
    from .tensors import jet_arrays
    return _levi_parts(jet_arrays(metric, TangentPoint(p, v)))[1]


@dataclass
class IdentityReport:
    residuals: dict = field(default_factory=dict)

    @property
    def max_residual(self):
        return max(self.residuals.values(), default=0.0)

    def passed(self, tol=1e-9):
        return self.max_residual < tol


def identity_suite(metric, site, fd_step=2e-3) -> IdentityReport:
    """Residuals of the homogeneity and inverse-matrix identities at ``site``."""
    metric = compiled(metric)
    site = _as_site(site)
    P = tensor_pack(metric, site, with_h=False)
    J = P.jets
    M = P.levi_inverse
    v, vb = site.v, site.v.conj()
    G = J["G"]
    r = {}
    # Euler relations from (1,1)-homogeneity
    r["euler_first"] = _residual(J["Gv"] @ v, G)
    r["euler_hessian"] = _residual(np.einsum("ab,a,b->", J["L"], v, vb), G)
    r["euler_levi"] = _residual(J["L"].T @ v, J["Gv"].conj())
    r["hessian_v_contraction"] = _residual(J["Gvv"] @ v, 0)
    r["third_vvv_contraction"] = _residual(J["Gvvv"] @ v, -J["Gvv"])
    r["levi_v_derivative_contraction"] = _residual(J["Lv"] @ v, 0)
    r["levi_vbar_contraction"] = _residual(J["Lvb"] @ vb, 0)
    r["mixed_z_euler"] = _residual(J["Gv_z"].T @ v, np.einsum("mi,m->i", J["Gvb_z"], vb))
    # inverse Levi matrix
    r["inverse_levi_gradient"] = _residual(M.T @ J["Gv"], vb)
    r["raised_z_gradient"] = _residual(
        np.einsum("bi,ab,a->i", J["Gvb_z"], M, J["Gv"]), J["Gv_z"].T @ v)
    inv_vb = -np.einsum("an,mns,mb->abs", M, J["Lvb"], M)
    inv_v = -np.einsum("an,mns,mb->abs", M, J["Lv"], M)
    r["inverse_vbar_derivative_contraction"] = _residual(inv_vb @ vb, 0)
    r["inverse_v_derivative_gradient"] = _residual(
        np.einsum("b,abs->as", J["Gv"].conj(), inv_v), 0)
    inv_z = -np.einsum("an,mni,mb->abi", M, J["Lz"], M)
    fd = np.empty_like(inv_z)
    for i in range(metric.n):
        e = np.zeros(metric.n, dtype=complex)
        e[i] = 1.0
        h = fd_step * (1.0 + abs(site.p[i]))
        dx = directional_derivative(lambda t: _inverse_levi(metric, site.p + t * e, v), h)
        dy = directional_derivative(lambda t: _inverse_levi(metric, site.p + 1j * t * e, v), h)
        fd[:, :, i] = 0.5 * (dx - 1j * dy)
    r["inverse_derivative"] = _residual(fd, inv_z)
    # connection coefficients
    r["curvature_bridge"] = _residual(
        np.einsum("a,aij->ij", J["Gv"], P.gamma_zbar),
        J["Gz_zb"] - np.einsum("bm,bj,mi->ij", M, J["Gv_zb"], J["Gvb_z"]))
    r["gamma_v_contraction"] = _residual(np.einsum("abi,b->ai", P.gamma_v, v), P.gamma1)
    r["gamma_vbar_contraction"] = _residual(np.einsum("abi,b->ai", P.gamma_vbar, vb), 0)
    r["gamma_v_levi"] = _residual(
        np.einsum("bm,bai->mai", J["L"], P.gamma_v),
        J["Lz"].transpose(1, 0, 2) - np.einsum("smb,si->mbi", J["Lv"], P.gamma1))
    r["gamma_v_gradient"] = _residual(
        np.einsum("a,abi->bi", J["Gv"], P.gamma_v),
        J["Gv_z"] - J["Gvv"] @ P.gamma1)
    # internal cross-checks already run in tensor_pack
    r.update(P.checks)
    r["torsion_equals_kahler"] = _residual(P.T_contracted, P.kahler_residual)
    return IdentityReport(r)


def torsion_flow_crosscheck(metric, site, h=1e-3):
    """Residual between H(v) and its expression through the contracted torsion.

    H_a = Xbar(T_a) - G_{a s} sigma^s_{i jbar} v^i vbar^j, where Xbar is the
    (0,1) field with coefficients vbar^j on dzbar^j and -conj(Gamma^g_{;j} v^j)
    on dvbar^g.  Xbar is evaluated by finite differences, so the residual is
    limited by ``h``.
    """
    metric = compiled(metric)
    site = _as_site(site)
    P = tensor_pack(metric, site, with_h=True)
    v = site.v
    cz = v
    cv = -(P.gamma1 @ v)
    scale = h * (1.0 + max(np.max(np.abs(site.p)), np.max(np.abs(site.v))))

    def torsion_along(c):
        def f(t):
            s = TangentPoint(site.p + t * c[0], site.v + t * c[1])
            return tensor_pack(metric, s, with_h=False, crosscheck=False).T_contracted
        return f

    d_real = directional_derivative(torsion_along((cz, cv)), scale)
    d_imag = directional_derivative(torsion_along((1j * cz, 1j * cv)), scale)
    xbar_T = 0.5 * (d_real + 1j * d_imag)
    rhs = xbar_T - np.einsum("as,sij,i,j->a", P.jets["Gvv"], P.sigma, v, v.conj())
    return _residual(P.H_contracted, rhs)
