"""Builtin closed-form metrics and metric loading."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
import os

from . import ast
from .ast import abs2, const, conj, var
from .errors import CatalogError
from .jets import CompiledMetric
from .parser import parse_metric_file

QUARTIC_EPS = 0.1


@dataclass
class MetricCatalogEntry:
    name: str
    dimension: int
    ast: ast.MetricAst
    domain: str = "all"
    complete: bool | None = None
    hermitian: bool | None = None
    constant_curvature: float | None = None
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ast.dimension != self.dimension:
            raise ValueError("catalog entry dimension does not match its tree")
        self._compiled = None

    def compile(self) -> CompiledMetric:
        if self._compiled is None:
            self._compiled = CompiledMetric(self.ast, domain=self.domain, name=self.name)
        return self._compiled


def _sum(terms):
    return reduce(ast.add, terms, ast.ZERO)


def _norm2(kind, n):
    return _sum(abs2(var(kind, a)) for a in range(1, n + 1))


def _ball_numerator(n):
    z2 = _norm2("z", n)
    v2 = _norm2("v", n)
    pairing = _sum(var("v", a) * conj(var("z", a)) for a in range(1, n + 1))
    return (1 - z2) * v2 + abs2(pairing), z2


def _poincare(n, **_):
    if n != 1:
        raise CatalogError("poincare_disk is defined for n = 1 only")
    g = abs2(var("v", 1)) / ast.power(1 - abs2(var("z", 1)), 2)
    return dict(root=g, domain="ball", complete=True, hermitian=True,
                constant_curvature=-4.0)


def _euclidean(n, **_):
    return dict(root=_norm2("v", n), domain="all", complete=True, hermitian=True,
                constant_curvature=0.0)


def _ball(n, **_):
    numerator, z2 = _ball_numerator(n)
    return dict(root=numerator / ast.power(1 - z2, 2), domain="ball", complete=True,
                hermitian=True, constant_curvature=-4.0)


def _fubini_study(n, **_):
    if n != 1:
        raise CatalogError("fubini_study_patch is defined for n = 1 only")
    g = abs2(var("v", 1)) / ast.power(1 + abs2(var("z", 1)), 2)
    return dict(root=g, domain="all", complete=False, hermitian=True,
                constant_curvature=4.0)


def _quartic(n, eps=QUARTIC_EPS, **_):
    v2 = _norm2("v", n)
    quartic = _sum(ast.power(abs2(var("v", a)), 2) for a in range(1, n + 1))
    return dict(root=ast.sqrt(ast.power(v2, 2) + const(eps) * quartic), domain="all",
                complete=True, hermitian=False, constants={"eps": eps})


def _quartic_ball(n, eps=QUARTIC_EPS, **_):
    numerator, z2 = _ball_numerator(n)
    quartic = _sum(ast.power(abs2(var("v", a)), 2) for a in range(1, n + 1))
    inner = ast.power(numerator, 2) + const(eps) * quartic
    return dict(root=ast.sqrt(inner) / ast.power(1 - z2, 2), domain="ball",
                complete=None, hermitian=False, constants={"eps": eps})


def _hermitian_nonkahler(n, **_):
    if n != 2:
        raise CatalogError("hermitian_nonkahler is defined for n = 2 only")
    v1, v2, z2 = var("v", 1), var("v", 2), var("z", 2)
    g = abs2(v1) + abs2(v2) + z2 * v1 * conj(v2) + conj(z2) * v2 * conj(v1)
    return dict(root=g, domain="ball", complete=None, hermitian=True)


_BUILDERS = {
    "poincare_disk": _poincare,
    "euclidean": _euclidean,
    "ball_kobayashi": _ball,
    "fubini_study_patch": _fubini_study,
    "quartic_perturbation": _quartic,
    # not part of the core list; z-dependent counterparts used as test corpus
    "quartic_ball_perturbation": _quartic_ball,
    "hermitian_nonkahler": _hermitian_nonkahler,
}

CORE_NAMES = ("poincare_disk", "euclidean", "ball_kobayashi", "fubini_study_patch",
              "quartic_perturbation")
BUILTIN_NAMES = tuple(_BUILDERS)


def builtin_metric(name: str, n: int = None, **constants) -> MetricCatalogEntry:
    """Return a builtin metric.

    ``n`` defaults to 1 for the disk metrics and 2 otherwise.
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise CatalogError(f"unknown builtin metric {name!r}") from None
    if n is None:
        n = 1 if name in ("poincare_disk", "fubini_study_patch") else 2
    if n < 1:
        raise CatalogError("dimension must be a positive integer")
    parts = builder(n, **constants)
    root = parts.pop("root")
    return MetricCatalogEntry(name=name, dimension=n, ast=ast.MetricAst(n, root), **parts)


def load_metric(ref: str, n: int = None) -> MetricCatalogEntry:
    """Load a metric from a file path or a builtin name."""
    if os.path.exists(ref):
        with open(ref, encoding="utf-8") as fh:
            mf = parse_metric_file(fh.read())
        return MetricCatalogEntry(
            name=mf.name, dimension=mf.ast.dimension, ast=mf.ast, domain=mf.domain,
            complete=mf.complete, constants=mf.constants,
        )
    if ref in _BUILDERS:
        return builtin_metric(ref, n)
    raise FileNotFoundError(ref)
