"""Hash-consed expression trees for squared Finsler metrics G(z, zbar, v, vbar).

Every node is interned: two structurally equal trees are the same Python
object, so identity comparison is structural equality and common
subexpressions are shared for free.  Nodes are immutable.

z_i, zbar_i, v_a and vbar_a are independent formal variables.  ``conj`` is a
structural rewrite that swaps each variable with its bar-partner and is pushed
all the way down to the leaves by :func:`conj`.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import threading

KINDS = ("v", "vbar", "z", "zbar")
PARTNER = {"v": "vbar", "vbar": "v", "z": "zbar", "zbar": "z"}
# position of each kind in canonical multi-index ordering
KIND_ORDER = {k: i for i, k in enumerate(KINDS)}

FUNCTIONS = ("sqrt", "exp", "log")

_TABLE: dict = {}
_LOCK = threading.Lock()


class Node:
    """An interned expression node.

    ``op`` is one of ``const``, ``var``, ``add``, ``mul``, ``div``, ``pow``,
    ``sqrt``, ``exp``, ``log`` or ``conj``.  ``value`` holds the number of a
    constant, the ``(kind, index)`` pair of a variable or the integer exponent
    of a power; it is ``None`` otherwise.
    """

    __slots__ = ("op", "args", "value", "__weakref__")

    def __init__(self, op, args, value):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __repr__(self):
        try:
            return f"Node<{to_source(self)}>"
        except ValueError:
            return f"Node<{self.op}>"

    # Python operators, convenient for building trees in code and tests.
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return mul(const(-1.0), self)

    def __pow__(self, k):
        return power(self, k)

    @property
    def is_const(self):
        return self.op == "const"


def _lift(x):
    return x if isinstance(x, Node) else const(x)


def _intern(op, args, value):
    key = (op, args, value)
    node = _TABLE.get(key)
    if node is None:
        with _LOCK:
            node = _TABLE.setdefault(key, Node(op, args, value))
    return node


def _clean_number(x):
    x = complex(x)
    re, im = x.real, x.imag
    if re == 0.0:
        re = 0.0
    if im == 0.0:
        return re
    return complex(re, im)


def const(x) -> Node:
    x = _clean_number(x)
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError(f"non-finite constant {x!r}")
    return _intern("const", (), x)


ZERO = const(0.0)
ONE = const(1.0)


def var(kind: str, index: int) -> Node:
    if kind not in PARTNER:
        raise ValueError(f"unknown variable kind {kind!r}")
    if index < 1:
        raise ValueError("variable indices start at 1")
    return _intern("var", (), (kind, int(index)))


def partner(node: Node) -> Node:
    kind, index = node.value
    return var(PARTNER[kind], index)


def add(*terms) -> Node:
    flat = []
    total = 0.0
    have_const = False
    for t in terms:
        t = _lift(t)
        parts = t.args if t.op == "add" else (t,)
        for p in parts:
            if p.op == "const":
                total = total + p.value
                have_const = True
            else:
                flat.append(p)
    if have_const and _clean_number(total) != 0.0:
        flat.append(const(total))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return _intern("add", tuple(flat), None)


def mul(*factors) -> Node:
    flat = []
    coeff = 1.0
    for f in factors:
        f = _lift(f)
        parts = f.args if f.op == "mul" else (f,)
        for p in parts:
            if p.op == "const":
                coeff = coeff * p.value
            else:
                flat.append(p)
    coeff = _clean_number(coeff)
    if coeff == 0.0:
        return ZERO
    if coeff != 1.0:
        flat.insert(0, const(coeff))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return _intern("mul", tuple(flat), None)


def sub(a, b) -> Node:
    return add(a, mul(const(-1.0), b))


def div(a, b) -> Node:
    a, b = _lift(a), _lift(b)
    if b is ONE:
        return a
    if a is ZERO:
        return ZERO
    if a.op == "const" and b.op == "const" and b.value != 0:
        return const(a.value / b.value)
    return _intern("div", (a, b), None)


def power(a, k: int) -> Node:
    a = _lift(a)
    if int(k) != k:
        raise ValueError("only integer powers are supported")
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return a
    if a.op == "const" and not (a.value == 0 and k < 0):
        return const(a.value ** k)
    if a.op == "pow":
        return power(a.args[0], a.value * k)
    return _intern("pow", (a,), k)


def _real_positive(node):
    return node.op == "const" and isinstance(node.value, float) and node.value > 0


def sqrt(a) -> Node:
    a = _lift(a)
    if _real_positive(a):
        return const(math.sqrt(a.value))
    return _intern("sqrt", (a,), None)


def exp(a) -> Node:
    a = _lift(a)
    if a.op == "const" and isinstance(a.value, float):
        return const(math.exp(a.value))
    return _intern("exp", (a,), None)


def log(a) -> Node:
    a = _lift(a)
    if _real_positive(a):
        return const(math.log(a.value))
    return _intern("log", (a,), None)


def conj(a, keep: bool = False) -> Node:
    """Conjugate a subtree.

    By default the conjugation is pushed down to the leaves, where it swaps
    each variable with its bar-partner; this is exact on the principal branch
    away from the cut, which is where the catalog metrics live.  With
    ``keep=True`` an explicit ``conj`` node is built instead.
    """
    a = _lift(a)
    if keep:
        if a.op == "conj":
            return a.args[0]
        return _intern("conj", (a,), None)
    return _push_conj(a)


def _push_conj(a):
    op = a.op
    if op == "const":
        return const(complex(a.value).conjugate())
    if op == "var":
        return partner(a)
    if op == "add":
        return add(*[_push_conj(t) for t in a.args])
    if op == "mul":
        return mul(*[_push_conj(t) for t in a.args])
    if op == "div":
        return div(_push_conj(a.args[0]), _push_conj(a.args[1]))
    if op == "pow":
        return power(_push_conj(a.args[0]), a.value)
    if op == "sqrt":
        return sqrt(_push_conj(a.args[0]))
    if op == "exp":
        return exp(_push_conj(a.args[0]))
    if op == "log":
        return log(_push_conj(a.args[0]))
    if op == "conj":
        return a.args[0]
    raise AssertionError(op)


def abs2(a) -> Node:
    """``a * conj(a)``, the desugaring of ``abs2`` in the DSL."""
    return mul(a, conj(a))


def swap_bars(a) -> Node:
    """Exchange every variable with its bar-partner, leaving constants alone.

    For the real-coefficient trees produced by the parser this equals
    :func:`conj`.
    """
    op = a.op
    if op == "const":
        return a
    if op == "var":
        return partner(a)
    if op == "pow":
        return power(swap_bars(a.args[0]), a.value)
    rebuilt = [swap_bars(t) for t in a.args]
    return _rebuild(a, rebuilt)


def _rebuild(a, args):
    op = a.op
    if op == "add":
        return add(*args)
    if op == "mul":
        return mul(*args)
    if op == "div":
        return div(*args)
    if op == "pow":
        return power(args[0], a.value)
    if op == "sqrt":
        return sqrt(args[0])
    if op == "exp":
        return exp(args[0])
    if op == "log":
        return log(args[0])
    if op == "conj":
        return conj(args[0], keep=True)
    raise AssertionError(op)


def walk(root: Node):
    """Yield every distinct node reachable from ``root`` in post-order."""
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded or not node.args:
            seen.add(id(node))
            yield node
            continue
        stack.append((node, True))
        for child in reversed(node.args):
            if id(child) not in seen:
                stack.append((child, False))


def variables(root: Node) -> set:
    return {n.value for n in walk(root) if n.op == "var"}


def node_count(root: Node) -> int:
    return sum(1 for _ in walk(root))


def _fmt_const(value):
    if isinstance(value, complex):
        raise ValueError("complex constants have no DSL spelling")
    text = repr(float(value))
    return f"({text})" if value < 0 else text


def _atomic(node):
    if node.op == "const":
        return True
    if node.op == "var":
        return True
    return node.op in FUNCTIONS or node.op == "conj"


def to_source(node: Node) -> str:
    """Print a tree in DSL syntax; ``parse(to_source(t))`` rebuilds ``t``."""
    op = node.op
    if op == "const":
        return _fmt_const(node.value)
    if op == "var":
        kind, index = node.value
        if kind in ("z", "v"):
            return f"{kind}{index}"
        return f"conj({kind[0]}{index})"
    if op == "add":
        return " + ".join(_wrapped(t) for t in node.args)
    if op == "mul":
        return " * ".join(_wrapped(t) for t in node.args)
    if op == "div":
        return f"{_wrapped(node.args[0])} / {_wrapped(node.args[1])}"
    if op == "pow":
        return f"{_wrapped(node.args[0])}^{node.value}"
    if op in FUNCTIONS or op == "conj":
        return f"{op}({to_source(node.args[0])})"
    raise AssertionError(op)


def _wrapped(node):
    text = to_source(node)
    return text if _atomic(node) else f"({text})"


@dataclass(frozen=True)
class MetricAst:
    """A parsed squared metric G together with its complex dimension."""

    dimension: int
    root: Node

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        for kind, index in variables(self.root):
            if not 1 <= index <= self.dimension:
                raise ValueError(
                    f"variable {kind}{index} outside 1..{self.dimension}"
                )

    def source(self) -> str:
        return to_source(self.root)
