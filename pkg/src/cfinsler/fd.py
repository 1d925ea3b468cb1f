"""Finite-difference oracle for Wirtinger jets.

Works on G as a black box of the real coordinates: every complex variable
w = x + iy is split in two and the Wirtinger operators are assembled as
d/dw = (d/dx - i d/dy)/2 and d/dwbar = (d/dx + i d/dy)/2.  Each real mixed
partial is a tensor product of fourth-order central stencils, followed by one
Richardson step on (h, h/2).
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
import itertools
import math

import numpy as np

from .errors import DomainError
from .jets import canonical_index

# Base step per total derivative order.  Rounding grows like eps / h**k, so
# higher orders need wider stencils.
DEFAULT_STEPS = {1: 2e-3, 2: 5e-3, 3: 1e-2, 4: 1.5e-2}


@lru_cache(maxsize=None)
def stencil(order: int):
    """Nodes and exact weights of a 4th-order central stencil for d^order/dx^order."""
    if order == 0:
        return (0,), (Fraction(1),)
    half = (order + 1) // 2 + 1
    nodes = tuple(range(-half, half + 1))
    m = len(nodes)
    # Solve sum_j w_j x_j^k = k! delta_{k,order}, k = 0..m-1, in exact arithmetic.
    a = [[Fraction(x) ** k for x in nodes] for k in range(m)]
    b = [Fraction(math.factorial(order)) if k == order else Fraction(0) for k in range(m)]
    for col in range(m):
        pivot = next(r for r in range(col, m) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        for r in range(m):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] -= f * b[col]
    weights = tuple(b[k] / a[k][k] for k in range(m))
    return nodes, weights


def _wirtinger_to_real(p, q):
    """Expand (dx - i dy)^p (dx + i dy)^q / 2^(p+q) into {(a, b): coeff}."""
    poly = {(0, 0): 1.0 + 0j}
    for sign in [-1j] * p + [1j] * q:
        nxt = {}
        for (a, b), c in poly.items():
            nxt[(a + 1, b)] = nxt.get((a + 1, b), 0) + c * 0.5
            nxt[(a, b + 1)] = nxt.get((a, b + 1), 0) + c * 0.5 * sign
        poly = nxt
    return {k: c for k, c in poly.items() if c != 0}


def _slot(kind, index, n):
    """Complex slot number: z_i -> i-1, v_a -> n+a-1."""
    base = 0 if kind in ("z", "zbar") else n
    return base + index - 1


def real_partials(index, n):
    """Map a Wirtinger multi-index to ``{((axis, order), ...): coeff}``."""
    counts = {}
    for kind, i in canonical_index(index):
        slot = _slot(kind, i, n)
        p, q = counts.get(slot, (0, 0))
        counts[slot] = (p + 1, q) if kind in ("z", "v") else (p, q + 1)
    terms = {(): 1.0 + 0j}
    for slot in sorted(counts):
        expansion = _wirtinger_to_real(*counts[slot])
        nxt = {}
        for key, c in terms.items():
            for (a, b), d in expansion.items():
                parts = key + tuple(
                    (axis, o) for axis, o in ((2 * slot, a), (2 * slot + 1, b)) if o
                )
                nxt[parts] = nxt.get(parts, 0) + c * d
        terms = nxt
    return terms


def _site_vector(site):
    w = np.concatenate([site.p, site.v])
    x = np.empty(2 * len(w))
    x[0::2] = w.real
    x[1::2] = w.imag
    return w, x


def _evaluate_points(metric, points):
    n = metric.n
    w = points[:, 0::2] + 1j * points[:, 1::2]
    z = w[:, :n].T
    v = w[:, n:].T
    if np.any(metric.domain_margin(z) <= 0):
        raise DomainError("finite-difference stencil leaves the metric domain")
    return metric.evaluate([()], z, v)[0]


@lru_cache(maxsize=None)
def _template(index, n):
    """Step-free stencil: list of (offsets, coeff, axis orders)."""
    out = []
    for partial, coeff in real_partials(index, n).items():
        axes = [a for a, _ in partial]
        stencils = [stencil(o) for _, o in partial]
        for combo in itertools.product(*[range(len(s[0])) for s in stencils]):
            weight = 1.0
            key = []
            for (nodes, weights), j, axis in zip(stencils, combo, axes):
                weight *= float(weights[j])
                if nodes[j]:
                    key.append((axis, nodes[j]))
            if weight != 0.0:
                out.append((tuple(key), coeff * weight, partial))
    return tuple(out)


def fd_jets(metric, site, indices, h=None):
    """Finite-difference values of several jets at one site.

    ``h`` overrides the base step for every order; steps are scaled per slot
    by ``1 + |w|``.  All stencil points are evaluated in one vectorized call.
    """
    indices = [canonical_index(i) for i in indices]
    for idx in indices:
        if len(idx) > 4:
            raise ValueError("finite differences are limited to order 4")
    w, x0 = _site_vector(site)
    scale = np.repeat(1.0 + np.abs(w), 2)
    points = {}
    plans = []
    for idx in indices:
        if not idx:
            plans.append([(points.setdefault((0.0, ()), len(points)), 1.0)])
            continue
        base = h if h is not None else DEFAULT_STEPS[len(idx)]
        levels = []
        for step in (base, base / 2):
            terms = []
            for key, coeff, partial in _template(idx, metric.n):
                denom = math.prod((step * scale[a]) ** o for a, o in partial)
                row = points.setdefault((step, key), len(points))
                terms.append((row, coeff / denom))
            levels.append(terms)
        plans.append(levels)
    pts = np.tile(x0, (len(points), 1))
    for (step, key), row in points.items():
        for axis, node in key:
            pts[row, axis] += node * step * scale[axis]
    vals = _evaluate_points(metric, pts)
    results = []
    for idx, plan in zip(indices, plans):
        if not idx:
            results.append(complex(vals[plan[0][0]]))
            continue
        coarse, fine = (sum(c * vals[r] for r, c in terms) for terms in plan)
        results.append(complex((16.0 * fine - coarse) / 15.0))
    return results


def fd_jet(metric, site, index, h=None) -> complex:
    """Finite-difference value of a single Wirtinger jet."""
    return fd_jets(metric, site, [index], h=h)[0]
