"""Pointwise tensors of a complex Finsler metric G = F^2.

Array axis conventions (all arrays are complex numpy arrays):

* ``levi[a, b]``            = G_{a bbar}, v-derivatives only
* ``levi_inverse[a, b]``    = G^{a bbar}, so that sum_b levi_inverse[a, b] levi[c, b] = delta_ac
* ``gamma1[a, i]``          = Gamma^a_{;i}
* ``gamma_zbar[a, i, j]``   = d Gamma^a_{;i} / d zbar^j
* ``gamma_v[a, b, i]``      = d Gamma^a_{;i} / d v^b
* ``gamma_vbar[a, b, i]``   = d Gamma^a_{;i} / d vbar^b
* ``sigma[a, i, j]``        = gamma_zbar[a, i, j] - gamma_vbar[a, m, i] conj(gamma1[m, j])

Lower indices before ``;`` are fiber (v) derivatives, after ``;`` base (z)
derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import itertools

import numpy as np

from .errors import InternalConsistencyError, PreconditionError, SingularLevi
from .jets import TangentPoint, canonical_index

PSEUDOCONVEXITY_FACTOR = 1e-8
CURVATURE_CROSSCHECK_TOL = 1e-8
TORSION_CROSSCHECK_TOL = 1e-10


def compiled(metric):
    """Accept a catalog entry or an already compiled metric."""
    return metric.compile() if hasattr(metric, "compile") else metric


def _as_site(site, p=None):
    if isinstance(site, TangentPoint):
        return site
    if p is None:
        raise TypeError("expected a TangentPoint or (p, v)")
    return TangentPoint(site, p)


# -- jet layout --------------------------------------------------------------

# Each block is a name plus a list of slot kinds; the array has one axis per slot.
_BLOCKS = {
    "G": (),
    "Gv": ("v",),
    "Gvv": ("v", "v"),
    "L": ("v", "vbar"),
    "Gvb_z": ("vbar", "z"),
    "Gv_z": ("v", "z"),
    "Gv_zb": ("v", "zbar"),
    "Gz_zb": ("z", "zbar"),
    "Gvvv": ("v", "v", "v"),
    "Lv": ("v", "vbar", "v"),
    "Lvb": ("v", "vbar", "vbar"),
    "Lz": ("v", "vbar", "z"),
    "Lzb": ("v", "vbar", "zbar"),
    "Lvb_z": ("vbar", "vbar", "z"),
    "Gvb_z_zb": ("vbar", "z", "zbar"),
    "Lz_zb": ("v", "vbar", "z", "zbar"),
    "Lv_zb": ("v", "vbar", "v", "zbar"),
}
_ORDER4 = ("Lz_zb", "Lv_zb")


@lru_cache(maxsize=None)
def _layout(n, with_h):
    """Unique canonical indices plus, per block, the position of each entry."""
    unique = {}
    blocks = {}
    for name, kinds in _BLOCKS.items():
        if name in _ORDER4 and not with_h:
            continue
        shape = (n,) * len(kinds)
        pos = np.empty(shape, dtype=np.intp)
        for combo in itertools.product(range(1, n + 1), repeat=len(kinds)):
            idx = canonical_index(tuple(zip(kinds, combo)))
            pos[tuple(c - 1 for c in combo)] = unique.setdefault(idx, len(unique))
        blocks[name] = pos
    return list(unique), blocks


def jet_arrays(metric, site, with_h=False) -> dict:
    """Evaluate every jet block used by the tensors at one site."""
    indices, blocks = _layout(metric.n, with_h)
    values = np.asarray(metric.evaluate(indices, site.p, site.v), dtype=complex)
    return {name: values[pos] for name, pos in blocks.items()}


# -- building blocks ---------------------------------------------------------

def _levi_parts(J):
    L = J["L"]
    herm = np.max(np.abs(L - L.conj().T), initial=0.0)
    scale = max(1.0, np.max(np.abs(L)))
    if herm > 1e-12 * scale:
        raise InternalConsistencyError(f"Levi matrix not hermitian (defect {herm:.3e})")
    Lh = 0.5 * (L + L.conj().T)
    eig = np.linalg.eigvalsh(Lh)
    trace = float(np.trace(Lh).real)
    threshold = PSEUDOCONVEXITY_FACTOR * abs(trace) / len(L)
    if eig[0] <= threshold:
        raise SingularLevi(
            f"Levi matrix not positive definite: min eigenvalue {eig[0]:.3e} "
            f"<= {threshold:.3e}", min_eigenvalue=float(eig[0]))
    M = np.linalg.solve(L.T, np.eye(len(L), dtype=complex))
    return L, M, float(eig[0])


def _check_site(site):
    if not np.any(site.v):
        raise PreconditionError("v must be nonzero")


def levi(metric, site):
    """Levi matrix G_{a bbar}, its inverse and its smallest eigenvalue.

    Raises SingularLevi when the smallest eigenvalue is at most
    ``1e-8 * trace / n``.
    """
    metric = compiled(metric)
    site = _as_site(site)
    _check_site(site)
    indices, blocks = _layout(metric.n, False)
    values = np.asarray(metric.evaluate(indices, site.p, site.v), dtype=complex)
    return _levi_parts({"L": values[blocks["L"]]})


def gamma(metric, site):
    """Gamma^a_{;i} = G^{a mbar} G_{mbar;i}."""
    metric = compiled(metric)
    site = _as_site(site)
    _check_site(site)
    J = jet_arrays(metric, site)
    _, M, _ = _levi_parts(J)
    return M @ J["Gvb_z"]


@dataclass
class TensorPack:
    """Every pointwise tensor at one site; see the module docstring for axes."""

    site: TangentPoint
    G: float
    levi: np.ndarray
    levi_inverse: np.ndarray
    min_levi_eigenvalue: float
    gamma1: np.ndarray
    gamma_zbar: np.ndarray
    gamma_v: np.ndarray
    gamma_vbar: np.ndarray
    sigma: np.ndarray
    K_F: float
    kahler_residual: np.ndarray
    T_contracted: np.ndarray
    H_contracted: np.ndarray | None
    geodesic_condition_residual: np.ndarray
    checks: dict = field(default_factory=dict)
    jets: dict = field(default_factory=dict, repr=False)


def _curvature(J, M, gzb, v):
    vb = v.conj()
    G = J["G"].real
    main = np.einsum("a,aij,i,j->", J["Gv"], gzb, v, vb)
    alt = (np.einsum("ij,i,j->", J["Gz_zb"], v, vb)
           - np.einsum("bm,bj,mi,i,j->", M, J["Gv_zb"], J["Gvb_z"], v, vb))
    k_main = -2.0 * main / G**2
    k_alt = -2.0 * alt / G**2
    scale = max(1.0, abs(k_main))
    if abs(k_main.imag) > 1e-10 * scale:
        raise InternalConsistencyError(f"holomorphic curvature not real: {k_main!r}")
    if abs(k_main - k_alt) > CURVATURE_CROSSCHECK_TOL * scale:
        raise InternalConsistencyError(
            f"curvature forms disagree: {k_main.real!r} vs {k_alt.real!r}")
    return float(k_main.real), abs(k_main - k_alt) / scale


def _torsion_from_definition(J, g1):
    """T_{a i mbar} assembled directly from jets."""
    Lz, Lv = J["Lz"], J["Lv"]
    return (np.einsum("ima->aim", Lz)
            - np.einsum("imb,ba->aim", Lv, g1)
            - np.einsum("ami->aim", Lz)
            + np.einsum("amb,bi->aim", Lv, g1))


def tensor_pack(metric, site, with_h=True, crosscheck=True) -> TensorPack:
    """Evaluate all tensors at ``site``.

    ``with_h`` adds the order-4 jets needed for H.  Internal cross-checks
    raise InternalConsistencyError when the alternative forms disagree.
    """
    metric = compiled(metric)
    site = _as_site(site)
    _check_site(site)
    J = jet_arrays(metric, site, with_h=with_h)
    L, M, min_eig = _levi_parts(J)
    v = site.v
    vb = v.conj()
    G = float(J["G"].real)

    g1 = M @ J["Gvb_z"]
    gzb = _gamma_zbar(J, M, g1)
    gv = (np.einsum("am,bmi->abi", M, J["Lz"])
          - np.einsum("an,snb,si->abi", M, J["Lv"], g1))
    gvb = (np.einsum("am,bmi->abi", M, J["Lvb_z"])
           - np.einsum("an,snb,si->abi", M, J["Lvb"], g1))
    sigma = gzb - np.einsum("ami,mj->aij", gvb, g1.conj())

    K, k_defect = _curvature(J, M, gzb, v)

    Gv_z = J["Gv_z"]
    kr = (np.einsum("ia,i->a", Gv_z, v) - Gv_z @ v
          + np.einsum("ab,bi,i->a", J["Gvv"], g1, v))
    Tc = np.einsum("b,bia,i->a", J["Gv"], gv, v) - np.einsum("b,bai,i->a", J["Gv"], gv, v)
    checks = {"curvature_forms_agree": k_defect}
    if crosscheck:
        T_def = _torsion_from_definition(J, g1)
        T_alt = np.einsum("bm,bia->aim", L, gv) - np.einsum("bm,bai->aim", L, gv)
        scale = max(1.0, np.max(np.abs(T_def), initial=0.0))
        forms = np.max(np.abs(T_def - T_alt), initial=0.0) / scale
        bridge = np.max(np.abs(np.einsum("aim,m,i->a", T_def, vb, v) - kr),
                        initial=0.0) / max(1.0, np.max(np.abs(kr), initial=0.0))
        if forms > TORSION_CROSSCHECK_TOL or bridge > TORSION_CROSSCHECK_TOL:
            raise InternalConsistencyError(
                f"torsion forms disagree (forms {forms:.3e}, contraction {bridge:.3e})")
        checks["torsion_forms_agree"] = forms
        checks["torsion_equals_kahler"] = bridge

    H = None
    if with_h:
        H = _tensor_H(J, M, g1, gzb, v)

    geo = np.einsum("aij,i,j->a", sigma, v, vb) - 2.0 * G * v
    return TensorPack(
        site=site, G=G, levi=L, levi_inverse=M, min_levi_eigenvalue=min_eig,
        gamma1=g1, gamma_zbar=gzb, gamma_v=gv, gamma_vbar=gvb, sigma=sigma,
        K_F=K, kahler_residual=kr, T_contracted=Tc, H_contracted=H,
        geodesic_condition_residual=geo, checks=checks, jets=J,
    )


def _gamma_zbar(J, M, g1):
    return (np.einsum("am,mij->aij", M, J["Gvb_z_zb"])
            - np.einsum("an,snj,si->aij", M, J["Lzb"], g1))


def _tensor_H(J, M, g1, gzb, v):
    """Contracted curvature-torsion vector H_a(v)."""
    vb = v.conj()
    Lv = J["Lv"]
    Q = J["Lz"] - np.einsum("smb,si->bmi", Lv, g1)
    Mzb = -np.einsum("tn,rnj,rm->tmj", M, J["Lzb"], M)
    Qzb = (J["Lz_zb"]
           - np.einsum("smbj,si->bmij", J["Lv_zb"], g1)
           - np.einsum("smb,sij->bmij", Lv, gzb))
    gvzb = np.einsum("tmj,bmi->tbij", Mzb, Q) + np.einsum("tm,bmij->tbij", M, Qzb)
    Gv = J["Gv"]
    first = (np.einsum("t,tiaj,i,j->a", Gv, gvzb, v, vb)
             - np.einsum("t,taij,i,j->a", Gv, gvzb, v, vb))
    return first - np.einsum("ta,tij,i,j->a", J["Gvv"], gzb, v, vb)


# -- single-quantity entry points --------------------------------------------

def holomorphic_curvature(metric, site) -> float:
    """K_F(p; v); constant along complex lines through v."""
    return tensor_pack(metric, site, with_h=False).K_F


def kahler_residual(metric, site) -> np.ndarray:
    return tensor_pack(metric, site, with_h=False).kahler_residual


def torsion_T_contracted(metric, site) -> np.ndarray:
    return tensor_pack(metric, site, with_h=False).T_contracted


def tensor_H_contracted(metric, site) -> np.ndarray:
    return tensor_pack(metric, site, with_h=True).H_contracted


def geodesic_condition_residual(metric, site) -> np.ndarray:
    """Residual of the pointwise condition for a holomorphic geodesic; zero when it holds."""
    return tensor_pack(metric, site, with_h=False).geodesic_condition_residual
