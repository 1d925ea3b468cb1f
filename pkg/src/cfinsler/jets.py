"""Symbolic Wirtinger differentiation and jet evaluation.

A derivative multi-index is a sorted tuple of ``(kind, index)`` pairs, e.g.
``(("v", 1), ("vbar", 2), ("z", 1))`` for G_{1 2bar;1}.  Mixed partials of
smooth expressions commute, so the sorted tuple is the canonical key.

Derivative trees are built lazily and memoized.  For numerical evaluation a
set of trees is turned into one generated Python function in which every
shared subtree is computed once.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
import itertools
import re
import threading

import numpy as np

from . import ast
from .ast import KIND_ORDER, Node
from .errors import DomainError

MAX_ORDER = 4
MAX_DIMENSION = 8

_DIFF_MEMO: dict = {}


def diff(node: Node, wrt: Node) -> Node:
    """Partial derivative of ``node`` with respect to the variable ``wrt``."""
    key = (node, wrt)
    hit = _DIFF_MEMO.get(key)
    if hit is not None:
        return hit
    result = _diff(node, wrt)
    return _DIFF_MEMO.setdefault(key, result)


def _diff(node, wrt):
    op = node.op
    if op == "const":
        return ast.ZERO
    if op == "var":
        return ast.ONE if node is wrt else ast.ZERO
    args = node.args
    if op == "add":
        return ast.add(*[diff(t, wrt) for t in args])
    if op == "mul":
        terms = []
        for i, f in enumerate(args):
            df = diff(f, wrt)
            if df is ast.ZERO:
                continue
            terms.append(ast.mul(*args[:i], df, *args[i + 1:]))
        return ast.add(*terms)
    if op == "div":
        a, b = args
        da, db = diff(a, wrt), diff(b, wrt)
        return ast.sub(ast.div(da, b), ast.div(ast.mul(a, db), ast.power(b, 2)))
    if op == "pow":
        (a,) = args
        da = diff(a, wrt)
        if da is ast.ZERO:
            return ast.ZERO
        return ast.mul(ast.const(node.value), ast.power(a, node.value - 1), da)
    (a,) = args
    if op == "conj":
        # d(conj e)/dw = conj(de/dwbar)
        return ast.conj(diff(a, ast.partner(wrt)), keep=True)
    da = diff(a, wrt)
    if da is ast.ZERO:
        return ast.ZERO
    if op == "sqrt":
        return ast.div(da, ast.mul(ast.const(2.0), node))
    if op == "exp":
        return ast.mul(node, da)
    if op == "log":
        return ast.div(da, a)
    raise AssertionError(op)


_NAME = re.compile(r"^(zbar|vbar|z|v)(\d+)$")


def _sort_key(item):
    kind, index = item
    return (KIND_ORDER[kind], index)


def canonical_index(index) -> tuple:
    """Normalize a multi-index given as names (``"vbar2"``) or pairs.

    >>> canonical_index(["z1", "vbar2", "v1"])
    (('v', 1), ('vbar', 2), ('z', 1))
    """
    if isinstance(index, str):
        index = index.split()
    items = []
    for item in index:
        if isinstance(item, str):
            m = _NAME.match(item)
            if m is None:
                raise ValueError(f"bad variable name {item!r}")
            item = (m.group(1), int(m.group(2)))
        kind, i = item
        if kind not in KIND_ORDER:
            raise ValueError(f"unknown variable kind {kind!r}")
        items.append((kind, int(i)))
    return tuple(sorted(items, key=_sort_key))


def swap_bars_index(index: tuple) -> tuple:
    return canonical_index([(ast.PARTNER[k], i) for k, i in index])


def index_name(index: tuple) -> str:
    return " ".join(f"{k}{i}" for k, i in index) or "G"


@dataclass(frozen=True)
class TangentPoint:
    """A point ``p`` of the chart together with a tangent vector ``v``."""

    p: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=complex))
        v = np.atleast_1d(np.asarray(self.v, dtype=complex))
        if p.shape != v.shape or p.ndim != 1:
            raise ValueError("p and v must be complex vectors of equal length")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)

    @property
    def n(self):
        return len(self.p)


# ---------------------------------------------------------------- evaluation

_CUT_TOL = 1e-15


def _bad_branch(x):
    return x.real <= 0 and abs(x.imag) <= _CUT_TOL * abs(x.real)


def _sqrt(x):
    if isinstance(x, np.ndarray):
        if np.any((x.real < 0) & (np.abs(x.imag) <= _CUT_TOL * np.abs(x.real))):
            raise DomainError("sqrt of a negative real argument")
        return np.sqrt(x)
    x = complex(x)
    if x.real < 0 and abs(x.imag) <= _CUT_TOL * abs(x.real):
        raise DomainError("sqrt of a negative real argument")
    return cmath.sqrt(x)


def _log(x):
    if isinstance(x, np.ndarray):
        if np.any((x.real <= 0) & (np.abs(x.imag) <= _CUT_TOL * np.abs(x.real))):
            raise DomainError("log of a nonpositive real argument")
        return np.log(x)
    x = complex(x)
    if _bad_branch(x):
        raise DomainError("log of a nonpositive real argument")
    return cmath.log(x)


def _exp(x):
    if isinstance(x, np.ndarray):
        return np.exp(x)
    return cmath.exp(x)


def _conj(x):
    return x.conjugate()


_RUNTIME = {"_sqrt": _sqrt, "_log": _log, "_exp": _exp, "_conj": _conj}
_ARRAYS = {"z": "z", "zbar": "zb", "v": "v", "vbar": "vb"}


def generate_source(roots, name="_jets"):
    """Python source of a function ``(z, zb, v, vb) -> tuple`` for ``roots``."""
    names = {}
    lines = [f"def {name}(z, zb, v, vb):"]
    counter = 0
    order = []
    seen = set()
    for root in roots:
        for node in ast.walk(root):
            if id(node) not in seen:
                seen.add(id(node))
                order.append(node)
    for node in order:
        op = node.op
        if op == "const":
            names[id(node)] = repr(node.value)
            continue
        if op == "var":
            kind, index = node.value
            expr = f"{_ARRAYS[kind]}[{index - 1}]"
        else:
            a = [names[id(c)] for c in node.args]
            if op == "add":
                expr = " + ".join(a)
            elif op == "mul":
                expr = " * ".join(a)
            elif op == "div":
                expr = f"{a[0]} / {a[1]}"
            elif op == "pow":
                expr = f"{a[0]} ** {node.value}"
            else:
                expr = f"_{op}({a[0]})"
        tmp = f"t{counter}"
        counter += 1
        lines.append(f"    {tmp} = {expr}")
        names[id(node)] = tmp
    ret = ", ".join(names[id(r)] for r in roots)
    lines.append(f"    return ({ret}{',' if len(roots) == 1 else ''})")
    return "\n".join(lines)


def compile_roots(roots):
    source = generate_source(roots)
    namespace = dict(_RUNTIME)
    exec(compile(source, "<cfinsler-jets>", "exec"), namespace)
    return namespace["_jets"]


class CompiledMetric:
    """A metric expression with a lazily filled derivative cache.

    Parameters
    ----------
    metric_ast : MetricAst
        The squared metric G.
    domain : {"all", "ball"}
        ``"ball"`` restricts the base point to the open unit ball.
    name : str, optional
        Label used in reports.
    """

    def __init__(self, metric_ast, domain="all", name=None):
        if metric_ast.dimension > MAX_DIMENSION:
            raise ValueError(f"dimension capped at {MAX_DIMENSION}")
        if domain not in ("all", "ball"):
            raise ValueError(f"unknown domain {domain!r}")
        self.ast = metric_ast
        self.n = metric_ast.dimension
        self.domain = domain
        self.name = name or "custom"
        self._cache = {(): metric_ast.root}
        self._evaluators = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"CompiledMetric({self.name!r}, n={self.n}, domain={self.domain!r})"

    @property
    def cache(self):
        return dict(self._cache)

    def derivative(self, index) -> Node:
        index = canonical_index(index)
        if len(index) > MAX_ORDER:
            raise ValueError(f"derivative order {len(index)} exceeds {MAX_ORDER}")
        for _, i in index:
            if not 1 <= i <= self.n:
                raise ValueError(f"index {i} outside 1..{self.n}")
        hit = self._cache.get(index)
        if hit is not None:
            return hit
        parent = self.derivative(index[:-1])
        node = diff(parent, ast.var(*index[-1]))
        return self._cache.setdefault(index, node)

    def evaluator(self, indices):
        """Compiled function evaluating the given multi-indices together."""
        key = tuple(canonical_index(i) for i in indices)
        fn = self._evaluators.get(key)
        if fn is None:
            fn = compile_roots([self.derivative(i) for i in key])
            with self._lock:
                fn = self._evaluators.setdefault(key, fn)
        return fn

    # -- domain handling

    def domain_margin(self, p):
        """Positive inside the chart domain, nonpositive outside."""
        if self.domain == "ball":
            p = np.asarray(p)
            return 1.0 - np.sum(np.abs(p) ** 2, axis=0)
        return np.inf

    def check_point(self, p):
        margin = self.domain_margin(p)
        if np.any(np.asarray(margin) <= 0):
            raise DomainError(f"point outside the domain of {self.name} (unit ball)")

    def evaluate(self, indices, p, v):
        """Evaluate jets at one site (vectors) or many (arrays shaped (n, m))."""
        self.check_point(p)
        fn = self.evaluator(indices)
        if isinstance(p, np.ndarray) and p.ndim == 2:
            z = p.astype(complex)
            vv = np.asarray(v, dtype=complex)
            with np.errstate(all="ignore"):
                try:
                    out = fn(z, z.conj(), vv, vv.conj())
                except ZeroDivisionError as exc:
                    raise DomainError(str(exc)) from None
            out = [np.broadcast_to(np.asarray(o, dtype=complex), z.shape[1:]) for o in out]
            if not all(np.all(np.isfinite(o)) for o in out):
                raise DomainError("non-finite value in jet evaluation")
            return out
        z = [complex(x) for x in p]
        vv = [complex(x) for x in v]
        try:
            out = fn(z, [x.conjugate() for x in z], vv, [x.conjugate() for x in vv])
        except (ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"{exc} at p={list(z)}, v={list(vv)}") from None
        out = [complex(o) for o in out]
        if not all(cmath.isfinite(o) for o in out):
            raise DomainError("non-finite value in jet evaluation")
        return out

    def G(self, p, v):
        """Value of G at ``(p; v)``; vectorized over trailing axes."""
        out = self.evaluate([()], p, v)[0]
        if isinstance(out, np.ndarray):
            return out.real
        return out.real

    def F(self, p, v):
        return float(np.sqrt(self.G(p, v)))


def compile_metric(metric_ast, domain="all", name=None) -> CompiledMetric:
    return CompiledMetric(metric_ast, domain=domain, name=name)


@dataclass
class JetTable:
    """Values of derivative jets of G at one site."""

    site: TangentPoint
    values: dict = field(default_factory=dict)

    def __getitem__(self, index):
        return self.values[canonical_index(index)]

    def __contains__(self, index):
        return canonical_index(index) in self.values

    def __len__(self):
        return len(self.values)


def eval_jet(metric: CompiledMetric, site: TangentPoint, orders, closure=True) -> JetTable:
    """Evaluate the requested multi-indices at ``site``.

    With ``closure`` the bar-swapped partner of every requested index is
    filled in by complex conjugation, which is exact for real G.
    """
    indices = [canonical_index(i) for i in orders]
    for idx in indices:
        if len(idx) > MAX_ORDER:
            raise ValueError(f"derivative order {len(idx)} exceeds {MAX_ORDER}")
    unique = list(dict.fromkeys(indices))
    values = dict(zip(unique, metric.evaluate(unique, site.p, site.v)))
    if closure:
        for idx in unique:
            values.setdefault(swap_bars_index(idx), values[idx].conjugate())
    return JetTable(site, values)


def all_indices(n, max_order=MAX_ORDER):
    """Every canonical multi-index of total order <= ``max_order``."""
    variables = [(k, i) for k in ast.KINDS for i in range(1, n + 1)]
    out = [()]
    for order in range(1, max_order + 1):
        for combo in itertools.combinations_with_replacement(variables, order):
            out.append(canonical_index(combo))
    return out
