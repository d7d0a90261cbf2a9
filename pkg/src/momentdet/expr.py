"""Scalar expression language for densities, rho functions, weights and targets.

Grammar (EBNF)::

    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so
``-x1^2`` is ``-(x1^2)``.  Identifiers are ``x1 .. xn``, ``pi``, ``e`` and
``norm(x)``, which expands to ``sqrt(x1^2 + ... + xn^2)`` at parse time.

Evaluation is total on the extended reals: ``log(t <= 0) = -inf``,
``a / 0 = ±inf`` by the sign of ``a`` and ``0 * inf = 0``.  Anything that
still produces NaN (``0/0``, ``sqrt(-1)``) is reported, never swallowed.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ExprSyntaxError

__all__ = [
    "Node",
    "Expression",
    "ExprNaNWarning",
    "parse_expression",
    "eval_expression",
    "to_text",
]

FUNCTIONS = {
    "exp": 1, "log": 1, "sin": 1, "cos": 1, "sqrt": 1, "abs": 1,
    "min": 2, "max": 2, "pow": 2,
}
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprNaNWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Node:
    kind: str  # 'num' | 'var' | 'neg' | 'bin' | 'call'
    value: object = None
    children: tuple = ()
    span: tuple = field(default=(0, 0), compare=False)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start, m.end()))
        pos = m.end()
    out.append(("end", None, len(text), len(text)))
    return out


class _Parser:
    def __init__(self, text, dimension, aliases):
        self.text = text
        self.n = dimension
        self.aliases = dict(aliases or {})
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprSyntaxError(f"expected {op!r}, found {what}", tok[2], self.text)
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected token {tok[1]!r}", tok[2], self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            node = Node("bin", op, (node, rhs), (node.span[0], rhs.span[1]))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            node = Node("bin", op, (node, rhs), (node.span[0], rhs.span[1]))
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            child = self.unary()
            return Node("neg", None, (child,), (tok[2], child.span[1]))
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            exponent = self.unary()
            return Node("bin", "^", (base, exponent), (base.span[0], exponent.span[1]))
        return base

    def atom(self):
        tok = self.take()
        kind, val, start, end = tok
        if kind == "num":
            return Node("num", float(val), (), (start, end))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "ident":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                return self.call(val, start)
            return self.identifier(val, start, end)
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", start, self.text)

    def identifier(self, name, start, end):
        if name in CONSTANTS:
            return Node("num", CONSTANTS[name], (), (start, end))
        if name in self.aliases:
            return Node("var", int(self.aliases[name]), (), (start, end))
        m = re.fullmatch(r"x(\d+)", name)
        if m:
            idx = int(m.group(1))
            if not 1 <= idx <= self.n:
                raise ExprSyntaxError(
                    f"variable {name} out of range for dimension {self.n}", start, self.text
                )
            return Node("var", idx, (), (start, end))
        raise ExprSyntaxError(f"unknown identifier {name!r}", start, self.text)

    def call(self, name, start):
        self.expect("(")
        if name == "norm":
            tok = self.take()
            if tok[0] != "ident" or tok[1] != "x":
                raise ExprSyntaxError("norm() takes the bare vector 'x'", tok[2], self.text)
            close = self.expect(")")
            span = (start, close[3])
            squares = [
                Node("bin", "^", (Node("var", k, (), span), Node("num", 2.0, (), span)), span)
                for k in range(1, self.n + 1)
            ]
            total = squares[0]
            for sq in squares[1:]:
                total = Node("bin", "+", (total, sq), span)
            return Node("call", "sqrt", (total,), span)
        if name not in FUNCTIONS:
            raise ExprSyntaxError(f"unknown function {name!r}", start, self.text)
        args = [self.expr()]
        while self.peek()[0] == "op" and self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        close = self.expect(")")
        if len(args) != FUNCTIONS[name]:
            raise ExprSyntaxError(
                f"{name}() takes {FUNCTIONS[name]} argument(s), got {len(args)}", start, self.text
            )
        return Node("call", name, tuple(args), (start, close[3]))


# ---------------------------------------------------------------------------
# evaluation

def _mul(a, b):
    out = a * b
    zero_inf = ((a == 0) & np.isinf(b)) | (np.isinf(a) & (b == 0))
    if np.any(zero_inf):
        out = np.where(zero_inf, 0.0, out)
    return out


def _log(a):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), -np.inf)


def _eval(node, X):
    k = node.kind
    if k == "num":
        return np.full(X.shape[0], node.value, dtype=float)
    if k == "var":
        return X[:, node.value - 1].astype(float, copy=False)
    if k == "neg":
        return -_eval(node.children[0], X)
    if k == "bin":
        a = _eval(node.children[0], X)
        b = _eval(node.children[1], X)
        op = node.value
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return _mul(a, b)
        if op == "/":
            return a / b
        return np.power(a, b)
    name = node.value
    args = [_eval(c, X) for c in node.children]
    if name == "exp":
        return np.exp(args[0])
    if name == "log":
        return _log(args[0])
    if name == "sin":
        return np.sin(args[0])
    if name == "cos":
        return np.cos(args[0])
    if name == "sqrt":
        return np.sqrt(args[0])
    if name == "abs":
        return np.abs(args[0])
    if name == "min":
        return np.minimum(args[0], args[1])
    if name == "max":
        return np.maximum(args[0], args[1])
    if name == "pow":
        return np.power(args[0], args[1])
    raise AssertionError(name)


def _sl(v):
    return np.sign(v), _log(np.abs(v))


def _logaddexp_signed(s1, l1, s2, l2):
    hi = np.maximum(l1, l2)
    hi_safe = np.where(np.isfinite(hi), hi, 0.0)
    total = s1 * np.exp(l1 - hi_safe) + s2 * np.exp(l2 - hi_safe)
    infinite = np.isinf(hi) & (hi > 0)
    if np.any(infinite):
        # inf + finite: keep the infinite term's sign; inf - inf is NaN
        t_inf = np.where(l1 == np.inf, s1, 0.0) + np.where(l2 == np.inf, s2, 0.0)
        both = (l1 == np.inf) & (l2 == np.inf) & (s1 != s2)
        t_inf = np.where(both, np.nan, t_inf)
        total = np.where(infinite, t_inf, total)
        hi_safe = np.where(infinite, 0.0, hi_safe)
    sign = np.sign(total)
    log = np.where(infinite, np.where(np.isnan(total), np.nan, np.inf), hi_safe + _log(np.abs(total)))
    return sign, log


def _pow_log(sa, la, b):
    """log-domain ``a ** b`` for arrays; b is evaluated normally."""
    sign = np.ones_like(la)
    log = b * la
    neg = sa < 0
    if np.any(neg):
        is_int = np.equal(np.mod(b, 1.0), 0.0)
        odd = is_int & (np.mod(b, 2.0) == 1.0)
        sign = np.where(neg, np.where(odd, -1.0, 1.0), sign)
        log = np.where(neg & ~is_int, np.nan, log)
    zero = sa == 0
    if np.any(zero):
        sign = np.where(zero, np.where(b > 0, 0.0, 1.0), sign)
        log = np.where(zero, np.where(b > 0, -np.inf, np.where(b == 0, 0.0, np.inf)), log)
    log = np.where(b == 0, 0.0, log)
    sign = np.where(b == 0, 1.0, sign)
    return sign, log


def _eval_log(node, X):
    k = node.kind
    if k in ("num", "var"):
        return _sl(_eval(node, X))
    if k == "neg":
        s, l = _eval_log(node.children[0], X)
        return -s, l
    if k == "bin":
        op = node.value
        if op == "^":
            sa, la = _eval_log(node.children[0], X)
            return _pow_log(sa, la, _eval(node.children[1], X))
        s1, l1 = _eval_log(node.children[0], X)
        s2, l2 = _eval_log(node.children[1], X)
        if op == "+":
            return _logaddexp_signed(s1, l1, s2, l2)
        if op == "-":
            return _logaddexp_signed(s1, l1, -s2, l2)
        if op == "*":
            zero = (s1 == 0) | (s2 == 0)
            return np.where(zero, 0.0, s1 * s2), np.where(zero, -np.inf, l1 + l2)
        # division
        den_zero = s2 == 0
        sign = np.where(den_zero, s1, s1 * s2)
        with np.errstate(invalid="ignore"):
            log = np.where(den_zero, np.where(s1 == 0, np.nan, np.inf), l1 - l2)
        log = np.where((s1 == 0) & ~den_zero, -np.inf, log)
        return sign, log
    name = node.value
    if name == "exp":
        v = _eval(node.children[0], X)
        return np.where(v == -np.inf, 0.0, 1.0), v
    if name == "sqrt":
        s, l = _eval_log(node.children[0], X)
        return s, np.where(s < 0, np.nan, 0.5 * l)
    if name == "abs":
        s, l = _eval_log(node.children[0], X)
        return np.abs(s), l
    if name == "pow":
        sa, la = _eval_log(node.children[0], X)
        return _pow_log(sa, la, _eval(node.children[1], X))
    if name == "log":
        s, l = _eval_log(node.children[0], X)
        v = np.where(s > 0, l, -np.inf)
        return _sl(v)
    return _sl(_eval(node, X))


def _report_nan(mask, text, on_nan):
    if on_nan == "ignore" or not np.any(mask):
        return
    msg = f"expression {text!r} produced NaN at {int(np.count_nonzero(mask))} point(s)"
    if on_nan == "raise":
        raise FloatingPointError(msg)
    warnings.warn(msg, ExprNaNWarning, stacklevel=3)


@dataclass(frozen=True)
class Expression:
    """A parsed expression bound to a dimension ``n``."""

    root: Node
    dimension: int
    text: str = field(default="", compare=False)

    def _points(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1) if X.shape[0] == self.dimension else X.reshape(-1, 1)
        if X.shape[1] != self.dimension:
            raise ValueError(f"points have dimension {X.shape[1]}, expression expects {self.dimension}")
        return X

    def evaluate(self, X, on_nan="warn"):
        """Vectorized evaluation at points ``X`` of shape ``(N, n)``."""
        X = self._points(X)
        with np.errstate(all="ignore"):
            v = _eval(self.root, X)
        _report_nan(np.isnan(v), self.text, on_nan)
        return v

    def evaluate_log(self, X, on_nan="warn"):
        """Return ``(sign, log|value|)`` computed without intermediate overflow.

        ``exp``, products, quotients, powers and square roots are combined in
        log space, so ``exp(x1^2)`` at ``x1 = 40`` gives ``log = 1600``.
        """
        X = self._points(X)
        with np.errstate(all="ignore"):
            s, l = _eval_log(self.root, X)
        bad = np.isnan(l) | np.isnan(s)
        _report_nan(bad, self.text, on_nan)
        return s, l

    def __call__(self, X):
        return self.evaluate(X)

    def variables(self):
        out = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.kind == "var":
                out.add(node.value)
            stack.extend(node.children)
        return out

    def __str__(self):
        return to_text(self.root)


def parse_expression(text: str, dimension: int, aliases=None) -> Expression:
    """Parse ``text`` into an expression over ``R^dimension``.

    ``aliases`` maps extra identifiers to variable indices, e.g.
    ``{"s": 1}`` so a rho function can be written in terms of ``s``.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text)
    if dimension < 1:
        raise ValueError("dimension must be positive")
    root = _Parser(text, dimension, aliases).parse()
    return Expression(root, dimension, text)


def eval_expression(expr: Expression, point) -> float:
    """Evaluate at a single point and return an extended real."""
    x = np.asarray(point, dtype=float).reshape(1, -1)
    return float(expr.evaluate(x)[0])


# ---------------------------------------------------------------------------
# pretty printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node):
    if node.kind == "bin":
        return _PREC[node.value]
    if node.kind == "neg":
        return _PREC["neg"]
    return 5


def _num_text(v):
    if v == math.inf:
        return "exp(1000)"
    return repr(float(v))


def to_text(node: Node) -> str:
    """Render a node as text that parses back to the same tree."""
    k = node.kind
    if k == "num":
        return _num_text(node.value)
    if k == "var":
        return f"x{node.value}"
    if k == "neg":
        child = node.children[0]
        inner = to_text(child)
        return f"-({inner})" if _prec(child) < 3 else f"-{inner}"
    if k == "call":
        return f"{node.value}(" + ", ".join(to_text(c) for c in node.children) + ")"
    op = node.value
    left, right = node.children
    lt, rt = to_text(left), to_text(right)
    p = _PREC[op]
    if op == "^":
        if _prec(left) <= 4:
            lt = f"({lt})"
        if _prec(right) < 3:
            rt = f"({rt})"
        return f"{lt}^{rt}"
    if _prec(left) < p:
        lt = f"({lt})"
    if _prec(right) <= p:
        rt = f"({rt})"
    return f"{lt} {op} {rt}"
