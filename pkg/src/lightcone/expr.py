"""Lagrangian expressions: tokenizer, recursive-descent parser, printer, evaluator.

Grammar (``^`` is right-associative and binds tighter than unary minus, so
``-v0^2`` means ``-(v0^2)``)::

    expr   := term { ("+" | "-") term }
    term   := factor { ("*" | "/") factor }
    factor := "-" factor | power
    power  := atom [ "^" factor ]
    atom   := NUMBER | VAR | IDENT | "(" expr ")" | FUNC "(" expr ")"
    VAR    := "v" DIGITS
    FUNC   := sqrt | exp | log | sin | cos

Any other identifier is a named parameter.  ``abs`` is deliberately not a
function: it breaks the smoothness a Finsler Lagrangian needs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from . import autodiff as ad
from .autodiff import DomainError

FUNCTIONS = {
    "sqrt": ad.sqrt,
    "exp": ad.exp,
    "log": ad.log,
    "sin": ad.sin,
    "cos": ad.cos,
}


class ExpressionError(ValueError):
    """Malformed expression text."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


# AST ------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Param, Neg, BinOp, Call]


@dataclass(frozen=True)
class LagrangianAst:
    """A parsed expression in the variables ``v0 .. v{dimension-1}``."""

    root: Node
    dimension: int
    parameters: tuple = field(default=())  # sorted (name, value) pairs

    @property
    def params(self) -> dict:
        return dict(self.parameters)

    def bind(self, **values) -> "LagrangianAst":
        merged = {**self.params, **{k: float(v) for k, v in values.items()}}
        return LagrangianAst(self.root, self.dimension, tuple(sorted(merged.items())))

    def parameter_names(self) -> set:
        return _param_names(self.root)

    def text(self) -> str:
        return to_text(self.root)

    def __call__(self, components, params: Mapping | None = None):
        return evaluate(self, components, params)


# tokenizer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tok = m.group()
            if tok == "**":
                tok = "^"
            tokens.append(_Token(kind, tok, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("end", "", line, pos - line_start + 1))
    return tokens


# parser ---------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, dimension: int):
        self.tokens = tokenize(text)
        self.pos = 0
        self.dimension = dimension

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ExpressionError(message, tok.line, tok.column)

    def accept(self, *ops):
        if self.tok.kind == "op" and self.tok.text in ops:
            tok = self.tok
            self.pos += 1
            return tok
        return None

    def expect(self, op):
        if not self.accept(op):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {op!r}, found {found!r}")

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while (tok := self.accept("+", "-")) is not None:
            node = BinOp(tok.text, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while (tok := self.accept("*", "/")) is not None:
            node = BinOp(tok.text, node, self.factor())
        return node

    def factor(self):
        if self.accept("-"):
            return Neg(self.factor())
        if self.accept("+"):
            return self.factor()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            self.pos += 1
            return Num(float(tok.text))
        if tok.kind == "name":
            self.pos += 1
            name = tok.text
            if self.tok.kind == "op" and self.tok.text == "(":
                if name not in FUNCTIONS:
                    raise self.error(f"unknown function {name!r}", tok)
                self.pos += 1
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            if name in FUNCTIONS:
                raise self.error(f"function {name!r} needs an argument", tok)
            m = re.fullmatch(r"v(\d+)", name)
            if m:
                index = int(m.group(1))
                if index >= self.dimension:
                    raise self.error(
                        f"variable {name} out of range for dimension {self.dimension}", tok
                    )
                return Var(index)
            return Param(name)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")


def parse(text: str, dimension: int, parameters: Mapping | None = None) -> LagrangianAst:
    """Parse ``text`` into a :class:`LagrangianAst` over ``dimension`` variables."""
    if dimension < 1:
        raise ValueError("dimension must be positive")
    root = _Parser(text, dimension).parse()
    params = tuple(sorted((k, float(v)) for k, v in (parameters or {}).items()))
    return LagrangianAst(root, dimension, params)


# printer --------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_text(node: Node) -> str:
    """Render ``node`` so that ``parse(to_text(n))`` rebuilds the same tree."""
    return _render(node)


def _render(node: Node, parent: int = 0) -> str:
    if isinstance(node, Num):
        value = float(node.value)
        text = str(int(value)) if value.is_integer() and abs(value) < 1e15 else repr(value)
        return f"({text})" if value < 0 else text
    if isinstance(node, Var):
        return f"v{node.index}"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_render(node.arg)})"
    if isinstance(node, Neg):
        text = "-" + _render(node.operand, 3)
        return f"({text})" if parent > 3 else text
    prec = _PREC[node.op]
    if node.op == "^":
        # right-associative: the exponent is a factor, the base an atom
        text = f"{_render(node.left, 5)}^{_render(node.right, 3)}"
    else:
        text = f"{_render(node.left, prec)} {node.op} {_render(node.right, prec + 1)}"
    return f"({text})" if prec < parent else text


# evaluation -----------------------------------------------------------------


def _param_names(node) -> set:
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, (Neg,)):
        return _param_names(node.operand)
    if isinstance(node, Call):
        return _param_names(node.arg)
    if isinstance(node, BinOp):
        return _param_names(node.left) | _param_names(node.right)
    return set()


def evaluate(ast: LagrangianAst, components, params: Mapping | None = None):
    """Evaluate ``ast`` on a sequence of coordinates (floats, arrays or Taylor2).

    Domain violations raise :class:`DomainError` naming the innermost failing
    sub-expression.
    """
    if len(components) != ast.dimension:
        raise ValueError(f"expected {ast.dimension} coordinates, got {len(components)}")
    env = ast.params
    if params:
        env.update(params)
    missing = ast.parameter_names() - env.keys()
    if missing:
        raise ExpressionError(f"unbound parameters: {', '.join(sorted(missing))}")
    return _eval(ast.root, components, env)


def _eval(node, xs, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return xs[node.index]
    if isinstance(node, Param):
        return env[node.name]
    try:
        if isinstance(node, Neg):
            return -_eval(node.operand, xs, env)
        if isinstance(node, Call):
            return FUNCTIONS[node.func](_eval(node.arg, xs, env))
        a = _eval(node.left, xs, env)
        b = _eval(node.right, xs, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return ad.divide(a, b)
        return ad.power(a, b)
    except DomainError as exc:
        if exc.expression is None:
            exc.expression = to_text(node)
        raise


# numerical checks -----------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    verdict: str  # PASS | FAIL | NOT_APPLICABLE
    residual: float
    trials: int

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def _values(ast, V, domain=None):
    """Values of ``ast`` at the rows of ``V``; NaN where undefined or outside ``domain``."""
    V = np.atleast_2d(V)
    ok = np.ones(len(V), dtype=bool)
    if domain is not None:
        ok &= _domain_mask(domain, V)
    out = np.full(len(V), np.nan)
    while ok.any():
        idx = np.flatnonzero(ok)
        try:
            out[idx] = np.broadcast_to(evaluate(ast, list(V[idx].T)), idx.shape)
            break
        except DomainError as exc:
            if exc.mask is None or exc.mask.shape != idx.shape:
                ok[idx] = False
                break
            ok[idx[exc.mask]] = False
    return out


def _domain_mask(domain, V):
    """Rows of ``V`` where the positivity expression ``domain`` holds strictly."""
    vals = np.full(len(V), -np.inf)
    try:
        vals = np.broadcast_to(evaluate(domain, list(V.T)), (len(V),))
    except DomainError:
        for i, row in enumerate(V):
            try:
                vals[i] = float(evaluate(domain, list(row)))
            except DomainError:
                pass
    return vals > 0


def _random_directions(rng, n, dim):
    V = rng.standard_normal((n, dim))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def validate_homogeneity(ast: LagrangianAst, trials: int = 100, seed: int = 0, domain=None,
                         tolerance: float = 1e-9) -> CheckResult:
    """Check ``L(s v) = s^2 L(v)`` at random unit ``v`` and ``s`` in [0.1, 10].

    The residual is ``|L(sv) - s^2 L(v)| / max(1, |L(v)|)``, maximised over the
    trials; PASS iff it is below ``tolerance``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    V = _random_directions(rng, 20 * trials, ast.dimension)
    s = rng.uniform(0.1, 10.0, len(V))
    base = _values(ast, V, domain)
    scaled = _values(ast, V * s[:, None], domain)
    good = np.flatnonzero(np.isfinite(base) & np.isfinite(scaled))[:trials]
    if good.size == 0:
        raise DomainError("no trial point fell inside the domain")
    res = np.abs(scaled[good] - s[good] ** 2 * base[good]) / np.maximum(1.0, np.abs(base[good]))
    worst = float(res.max())
    return CheckResult("PASS" if worst < tolerance else "FAIL", worst, int(good.size))


def check_reversibility(ast: LagrangianAst, trials: int = 100, seed: int = 0, domain=None,
                        tolerance: float = 1e-10) -> CheckResult:
    """Check ``L(v) = L(-v)``; NOT_APPLICABLE when the domain is not symmetric."""
    rng = np.random.default_rng(seed)
    V = _random_directions(rng, 20 * trials, ast.dimension)
    if domain is not None:
        inside = _domain_mask(domain, V)
        if (inside != _domain_mask(domain, -V)).any():
            return CheckResult("NOT_APPLICABLE", float("nan"), 0)
    plus = _values(ast, V, domain)
    minus = _values(ast, -V, domain)
    good = np.flatnonzero(np.isfinite(plus) & np.isfinite(minus))[:trials]
    if good.size == 0:
        return CheckResult("NOT_APPLICABLE", float("nan"), 0)
    worst = float(np.abs(plus[good] - minus[good]).max())
    return CheckResult("PASS" if worst < tolerance else "FAIL", worst, int(good.size))
