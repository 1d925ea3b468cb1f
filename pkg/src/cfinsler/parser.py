"""Recursive-descent parser for the metric expression language.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | factor
    factor := base ('^' ['-'] integer)?
    base   := number | ident | call | '(' expr ')'
    call   := ('sqrt' | 'exp' | 'log' | 'conj' | 'abs2') '(' expr ')'
    ident  := ('z' | 'v') digits | <named constant>

A metric file holds ``dim = n``, optional ``const name = value`` lines and
attribute lines (``name``, ``domain``, ``complete``), and ends with
``G = <expr>``.  ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import re

from . import ast
from .errors import (
    ArityError,
    IndexRangeError,
    MetricSyntaxError,
    UnknownIdentifierError,
)

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)

_CALLS = {
    "sqrt": ast.sqrt,
    "exp": ast.exp,
    "log": ast.log,
    "conj": ast.conj,
    "abs2": ast.abs2,
}
_VARIABLE = re.compile(r"([zv])(\d+)$")


@dataclass
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            stripped = len(source[pos:]) - len(source[pos:].lstrip())
            raise MetricSyntaxError(
                f"unexpected character {source[pos + stripped]!r}", pos + stripped
            )
        kind = m.lastgroup
        text = m.group(kind)
        tokens.append(_Token(kind, text, m.start(kind)))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, n, constants):
        self.tokens = _tokenize(source)
        self.i = 0
        self.n = n
        self.constants = constants

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.tok
        if tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise MetricSyntaxError(f"expected {text!r}, found {found}", tok.offset)
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise MetricSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            node = ast.add(node, rhs) if op == "+" else ast.sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            rhs = self.unary()
            node = ast.mul(node, rhs) if op == "*" else ast.div(node, rhs)
        return node

    def unary(self):
        if self.tok.text == "-":
            self.advance()
            return ast.mul(ast.const(-1.0), self.unary())
        return self.factor()

    def factor(self):
        node = self.base()
        if self.tok.text == "^":
            self.advance()
            sign = 1
            if self.tok.text == "-":
                self.advance()
                sign = -1
            tok = self.tok
            if tok.kind != "number" or not tok.text.isdigit():
                raise MetricSyntaxError("exponent must be an integer", tok.offset)
            self.advance()
            node = ast.power(node, sign * int(tok.text))
        return node

    def base(self):
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return ast.const(float(tok.text))
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.advance()
            if tok.text in _CALLS:
                return self.call(tok)
            if self.tok.text == "(":
                raise UnknownIdentifierError(f"unknown function {tok.text!r}", tok.offset)
            m = _VARIABLE.match(tok.text)
            if m:
                index = int(m.group(2))
                if not 1 <= index <= self.n:
                    raise IndexRangeError(
                        f"index {index} of {tok.text!r} outside 1..{self.n}", tok.offset
                    )
                return ast.var(m.group(1), index)
            if tok.text in self.constants:
                return ast.const(self.constants[tok.text])
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.offset)
        if tok.kind == "end":
            raise MetricSyntaxError("unexpected end of input", tok.offset)
        raise MetricSyntaxError(f"unexpected {tok.text!r}", tok.offset)

    def call(self, name_tok):
        self.expect("(")
        if self.tok.text == ")":
            raise ArityError(f"{name_tok.text} takes exactly one argument, got 0",
                             self.tok.offset)
        arg = self.expr()
        if self.tok.text == ",":
            raise ArityError(f"{name_tok.text} takes exactly one argument",
                             self.tok.offset)
        self.expect(")")
        return _CALLS[name_tok.text](arg)


def parse_expression(source: str, n: int, constants=None) -> ast.Node:
    if n < 1:
        raise ValueError("dimension must be a positive integer")
    if not source or not source.strip():
        raise MetricSyntaxError("empty metric source", 0)
    return _Parser(source, n, dict(constants or {})).parse()


def parse_metric(source: str, n: int, constants=None) -> ast.MetricAst:
    """Parse ``source`` into a normalized :class:`~cfinsler.ast.MetricAst`.

    >>> parse_metric("abs2(v1)", 1).source()
    'v1 * conj(v1)'
    """
    return ast.MetricAst(n, parse_expression(source, n, constants))


@dataclass
class MetricFile:
    """Contents of a metric definition file."""

    ast: ast.MetricAst
    name: str = "custom"
    constants: dict = field(default_factory=dict)
    domain: str = "all"
    complete: bool | None = None


_HEADER = re.compile(r"^\s*(const\s+)?([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(.*?)\s*$")


def parse_metric_file(text: str) -> MetricFile:
    dim = None
    constants = {}
    attrs = {}
    expr = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = _HEADER.match(line)
        if m is None:
            raise MetricSyntaxError(f"line {lineno}: expected 'key = value'")
        is_const, key, value = m.groups()
        if expr is not None:
            raise MetricSyntaxError(f"line {lineno}: content after the G line")
        if is_const:
            try:
                constants[key] = float(value)
            except ValueError:
                raise MetricSyntaxError(f"line {lineno}: constant {key} is not a number")
        elif key == "dim":
            try:
                dim = int(value)
            except ValueError:
                raise MetricSyntaxError(f"line {lineno}: dim must be an integer")
        elif key == "G":
            expr = value
        elif key in ("name", "domain", "complete"):
            attrs[key] = value
        else:
            raise MetricSyntaxError(f"line {lineno}: unknown header key {key!r}")
    if dim is None:
        raise MetricSyntaxError("metric file lacks a 'dim = n' line")
    if expr is None:
        raise MetricSyntaxError("metric file lacks a final 'G = <expr>' line")
    complete = attrs.get("complete")
    if complete is not None:
        if complete.lower() not in ("true", "false"):
            raise MetricSyntaxError("complete must be true or false")
        complete = complete.lower() == "true"
    domain = attrs.get("domain", "all")
    if domain not in ("all", "ball"):
        raise MetricSyntaxError(f"unknown domain {domain!r}; use 'all' or 'ball'")
    return MetricFile(
        ast=parse_metric(expr, dim, constants),
        name=attrs.get("name", "custom"),
        constants=constants,
        domain=domain,
        complete=complete,
    )
