"""Symbolic expression trees over a fixed feature vector.

This module is the algebraic substrate for the whole package: white-box
models are sums of expression trees, ground-truth contributions are per-tree
evaluations, and the random model generator assembles trees from the operator
table defined here.

An expression is an immutable tree built from four node kinds::

    Constant(3.0)                    a real literal
    Variable(4)                      the 4th feature (indices are 1-based)
    Unary("exp", child)              exp, log, sqrt, sin, ...
    Binary("mul", left, right)       add, sub, mul, div, pow

The public operations are:

* :func:`evaluate` -- vectorized numpy evaluation with domain checking,
* :func:`expand` -- distribute products/powers over sums (exact rewrites
  only) so top-level additive structure is maximally exposed,
* :func:`decompose_additive` -- split an expanded expression into effects
  keyed by the set of features they touch,
* :func:`to_text` / :func:`parse_text` -- a round-trippable plain-text
  syntax used by the model file format.

No algebraic simplification beyond expansion is attempted: ``x1*x3 + x2*x3``
stays exactly that.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterator, Union

import numpy as np

from .errors import DomainViolation, ParseError

__all__ = [
    "Constant",
    "Variable",
    "Unary",
    "Binary",
    "Expr",
    "Signature",
    "Operator",
    "OperatorTable",
    "UNARY_OPS",
    "BINARY_OPS",
    "NONLINEAR_UNARY_OPS",
    "evaluate",
    "expand",
    "decompose_additive",
    "variables_of",
    "count_nonlinearities",
    "to_text",
    "parse_text",
]

# A signature is the sorted tuple of (1-based) feature indices an effect
# touches.  The empty tuple denotes a constant effect.
Signature = tuple[int, ...]


# ---------------------------------------------------------------------------
# Node types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Variable:
    """A reference to feature ``index`` (1-based, matching x1, x2, ...)."""

    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"variable indices are 1-based, got {self.index}")


@dataclass(frozen=True)
class Unary:
    op: str
    child: "Expr"

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary operator {self.op!r}")


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")


Expr = Union[Constant, Variable, Unary, Binary]


# ---------------------------------------------------------------------------
# Operator table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Operator:
    """One operator: numpy kernel, domain predicate, linearity class.

    ``valid`` maps operand array(s) to a boolean mask that is True where the
    operator is defined; ``None`` means the operator is total.
    """

    name: str
    arity: int
    fn: Callable[..., np.ndarray]
    valid: Callable[..., np.ndarray] | None = None
    nonlinear: bool = True


def _pow_valid(base: np.ndarray, expo: np.ndarray) -> np.ndarray:
    is_int = expo == np.floor(expo)
    return (base > 0) | (is_int & (base < 0)) | ((base == 0) & (expo >= 0))


UNARY_OPS: dict[str, Operator] = {
    "neg": Operator("neg", 1, np.negative, nonlinear=False),
    "abs": Operator("abs", 1, np.abs),
    "sqrt": Operator("sqrt", 1, np.sqrt, valid=lambda u: u >= 0),
    "exp": Operator("exp", 1, np.exp),
    "log": Operator("log", 1, np.log, valid=lambda u: u > 0),
    "sin": Operator("sin", 1, np.sin),
    "cos": Operator("cos", 1, np.cos),
    "reciprocal": Operator("reciprocal", 1, np.reciprocal, valid=lambda u: u != 0),
    "square": Operator("square", 1, np.square),
    "cube": Operator("cube", 1, lambda u: u * u * u),
}

BINARY_OPS: dict[str, Operator] = {
    "add": Operator("add", 2, np.add, nonlinear=False),
    "sub": Operator("sub", 2, np.subtract, nonlinear=False),
    "mul": Operator("mul", 2, np.multiply),
    "div": Operator("div", 2, np.divide, valid=lambda a, b: b != 0),
    "pow": Operator("pow", 2, np.power, valid=_pow_valid),
}

#: Unary operators that count as nonlinearities (everything but negation).
NONLINEAR_UNARY_OPS = frozenset(n for n, op in UNARY_OPS.items() if op.nonlinear)


@dataclass
class OperatorTable:
    """Sampling weights for the generator, one entry per operator.

    Weights are relative and non-negative; ops can be switched off by setting
    their weight to 0.  The default table is uniform.
    """

    unary_weights: dict[str, float]
    binary_weights: dict[str, float]

    @classmethod
    def default(cls) -> "OperatorTable":
        return cls(
            unary_weights={name: 1.0 for name in UNARY_OPS},
            binary_weights={name: 1.0 for name in BINARY_OPS},
        )

    def __post_init__(self):
        for name in self.unary_weights:
            if name not in UNARY_OPS:
                raise ValueError(f"unknown unary operator {name!r}")
        for name in self.binary_weights:
            if name not in BINARY_OPS:
                raise ValueError(f"unknown binary operator {name!r}")
        for name, w in {**self.unary_weights, **self.binary_weights}.items():
            if w < 0:
                raise ValueError(f"operator weight for {name!r} must be >= 0, got {w}")

    def replace_weights(self, unary: dict[str, float] | None = None,
                        binary: dict[str, float] | None = None) -> "OperatorTable":
        """Return a copy with some weights overridden."""
        return OperatorTable(
            unary_weights={**self.unary_weights, **(unary or {})},
            binary_weights={**self.binary_weights, **(binary or {})},
        )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate(expr: Expr, X: np.ndarray) -> np.ndarray:
    """Evaluate ``expr`` on every row of ``X`` (shape n x d).

    Returns a float vector of length n.  Raises :class:`DomainViolation`
    naming the operator and the first offending row when a partial-domain
    operator (log, sqrt, div, reciprocal, pow) is applied outside its domain.
    Overflow to inf is permitted here; finiteness is a model-validation
    concern, not an evaluation error.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d sample matrix, got shape {X.shape}")
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        return _eval(expr, X)


def _eval(expr: Expr, X: np.ndarray) -> np.ndarray:
    if isinstance(expr, Constant):
        return np.full(X.shape[0], expr.value)
    if isinstance(expr, Variable):
        if expr.index > X.shape[1]:
            raise ValueError(
                f"expression references x{expr.index} but data has {X.shape[1]} features"
            )
        return X[:, expr.index - 1].astype(float)
    if isinstance(expr, Unary):
        op = UNARY_OPS[expr.op]
        u = _eval(expr.child, X)
        _check_domain(op, u)
        return op.fn(u)
    if isinstance(expr, Binary):
        op = BINARY_OPS[expr.op]
        a = _eval(expr.left, X)
        b = _eval(expr.right, X)
        _check_domain(op, a, b)
        return op.fn(a, b)
    raise TypeError(f"not an expression node: {expr!r}")


def _check_domain(op: Operator, *operands: np.ndarray) -> None:
    if op.valid is None:
        return
    ok = op.valid(*operands)
    if not np.all(ok):
        bad = int(np.argmin(ok))
        raise DomainViolation(op.name, bad)


# ---------------------------------------------------------------------------
# Structure queries
# ---------------------------------------------------------------------------

def walk(expr: Expr) -> Iterator[Expr]:
    """Yield every node of the tree (pre-order)."""
    yield expr
    if isinstance(expr, Unary):
        yield from walk(expr.child)
    elif isinstance(expr, Binary):
        yield from walk(expr.left)
        yield from walk(expr.right)


def variables_of(expr: Expr) -> frozenset[int]:
    """The set of feature indices referenced anywhere in the tree."""
    return frozenset(n.index for n in walk(expr) if isinstance(n, Variable))


def signature_of(expr: Expr) -> Signature:
    """Canonical signature: sorted tuple of referenced feature indices."""
    return tuple(sorted(variables_of(expr)))


def count_nonlinearities(expr: Expr) -> int:
    """Count nonlinear operator applications.

    One count per unary op other than neg, per mul/div whose operands both
    reference variables, and per pow with a variable-bearing base.  Addition,
    subtraction, negation and scaling by a constant are linear.
    """
    total = 0
    for node in walk(expr):
        if isinstance(node, Unary) and UNARY_OPS[node.op].nonlinear:
            total += 1
        elif isinstance(node, Binary):
            if node.op in ("mul", "div"):
                if variables_of(node.left) and variables_of(node.right):
                    total += 1
            elif node.op == "pow":
                if variables_of(node.left):
                    total += 1
    return total


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------

def expand(expr: Expr) -> Expr:
    """Distribute products, quotients and small integer powers over sums.

    Only algebraically exact rewrites are applied:

    * ``(a + b) * c   -> a*c + b*c`` (either side)
    * ``(a + b) / c   -> a/c + b/c`` (numerator only)
    * ``(a + b) ^ k   -> repeated product, for integer k in {2, 3}``
    * ``square/cube`` of a sum likewise
    * ``neg(a + b)    -> neg(a) + neg(b)``
    * ``a - b         -> a + neg(b)``

    Powers above 3 and everything else are left untouched, so the result is
    numerically equivalent on the shared domain.  No like-term collection is
    performed.
    """
    if isinstance(expr, (Constant, Variable)):
        return expr
    if isinstance(expr, Unary):
        child = expand(expr.child)
        if expr.op == "neg":
            return _neg(child)
        if expr.op == "square" and _is_add(child):
            return _mul(child, child)
        if expr.op == "cube" and _is_add(child):
            return _mul(child, _mul(child, child))
        return Unary(expr.op, child)
    if isinstance(expr, Binary):
        left = expand(expr.left)
        right = expand(expr.right)
        if expr.op == "add":
            return Binary("add", left, right)
        if expr.op == "sub":
            return Binary("add", left, _neg(right))
        if expr.op == "mul":
            return _mul(left, right)
        if expr.op == "div":
            return _div(left, right)
        if expr.op == "pow":
            if isinstance(right, Constant) and right.value in (2.0, 3.0) and _is_add(left):
                k = int(right.value)
                out = left
                for _ in range(k - 1):
                    out = _mul(out, left)
                return out
            return Binary("pow", left, right)
    raise TypeError(f"not an expression node: {expr!r}")


def _is_add(e: Expr) -> bool:
    return isinstance(e, Binary) and e.op == "add"


def _neg(e: Expr) -> Expr:
    if _is_add(e):
        return Binary("add", _neg(e.left), _neg(e.right))
    return Unary("neg", e)


def _mul(l: Expr, r: Expr) -> Expr:
    if _is_add(l):
        return Binary("add", _mul(l.left, r), _mul(l.right, r))
    if _is_add(r):
        return Binary("add", _mul(l, r.left), _mul(l, r.right))
    return Binary("mul", l, r)


def _div(num: Expr, den: Expr) -> Expr:
    if _is_add(num):
        return Binary("add", _div(num.left, den), _div(num.right, den))
    return Binary("div", num, den)


# ---------------------------------------------------------------------------
# Additive decomposition
# ---------------------------------------------------------------------------

def decompose_additive(expr: Expr) -> list[tuple[Signature, Expr]]:
    """Split an *expanded* expression into per-signature effects.

    Top-level addition is flattened into terms; terms sharing the same set of
    referenced features are merged (summed) into a single effect.  Constant
    terms come out under the empty signature.  The result is sorted by
    (signature length, signature) so it is deterministic.

    The caller is responsible for expanding first; unexpanded residue such as
    ``log(x1*x4)`` stays one effect with the union signature, which is the
    intended behavior.
    """
    terms: list[Expr] = []
    _flatten_add(expr, terms)
    groups: dict[Signature, list[Expr]] = {}
    for term in terms:
        groups.setdefault(signature_of(term), []).append(term)
    out: list[tuple[Signature, Expr]] = []
    for sig in sorted(groups, key=lambda s: (len(s), s)):
        merged = reduce(lambda a, b: Binary("add", a, b), groups[sig])
        out.append((sig, merged))
    return out


def _flatten_add(expr: Expr, into: list[Expr]) -> None:
    if _is_add(expr):
        _flatten_add(expr.left, into)
        _flatten_add(expr.right, into)
    else:
        into.append(expr)


# ---------------------------------------------------------------------------
# Text syntax
# ---------------------------------------------------------------------------
#
#   expr    := term (('+'|'-') term)*
#   term    := factor (('*'|'/') factor)*
#   factor  := '-' factor | power
#   power   := atom ('^' factor)?              (right-associative)
#   atom    := NUMBER | 'x' DIGITS | NAME '(' expr ')' | '(' expr ')'
#
# Unary operators are written in function-call syntax (e.g. ``neg(x1)``);
# a prefix '-' is accepted on input and folds into the constant when applied
# to a literal.  Constants are emitted with repr(), which round-trips floats
# exactly.

_PREC = {"add": 10, "sub": 10, "mul": 20, "div": 20, "pow": 30}
_SYMBOL = {"add": " + ", "sub": " - ", "mul": "*", "div": "/", "pow": "^"}


def to_text(expr: Expr) -> str:
    """Render the tree in the plain-text syntax; parse_text inverts this."""
    return _format(expr, 0)


def _format(expr: Expr, parent_prec: int) -> str:
    if isinstance(expr, Constant):
        s = repr(expr.value)
        if expr.value < 0 and parent_prec > 0:
            return f"({s})"
        return s
    if isinstance(expr, Variable):
        return f"x{expr.index}"
    if isinstance(expr, Unary):
        return f"{expr.op}({_format(expr.child, 0)})"
    if isinstance(expr, Binary):
        p = _PREC[expr.op]
        if expr.op == "pow":
            left = _format(expr.left, p + 1)
            right = _format(expr.right, p)
        else:
            left = _format(expr.left, p)
            right = _format(expr.right, p + 1)
        s = f"{left}{_SYMBOL[expr.op]}{right}"
        return f"({s})" if p < parent_prec else s
    raise TypeError(f"not an expression node: {expr!r}")


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<symbol>[-+*/^(),])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise ParseError(bad_at, f"unexpected character {text[bad_at]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


_VAR_RE = re.compile(r"x([0-9]+)$")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, symbol: str) -> None:
        kind, text, pos = self.next()
        if kind != "symbol" or text != symbol:
            raise ParseError(pos, f"expected {symbol!r}, found {text or 'end of input'!r}")

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(pos, f"unexpected trailing input {text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "symbol" and text in "+-":
                self.next()
                rhs = self.term()
                e = Binary("add" if text == "+" else "sub", e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "symbol" and text in "*/":
                self.next()
                rhs = self.factor()
                e = Binary("mul" if text == "*" else "div", e, rhs)
            else:
                return e

    def factor(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "symbol" and text == "-":
            self.next()
            operand = self.factor()
            if isinstance(operand, Constant):
                return Constant(-operand.value)
            return Unary("neg", operand)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "symbol" and text == "^":
            self.next()
            expo = self.factor()
            return Binary("pow", base, expo)
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.next()
        if kind == "number":
            return Constant(float(text))
        if kind == "name":
            var = _VAR_RE.match(text)
            if var:
                index = int(var.group(1))
                if index < 1:
                    raise ParseError(pos, "variable indices start at x1")
                return Variable(index)
            if text in UNARY_OPS:
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return Unary(text, inner)
            raise ParseError(pos, f"unknown identifier {text!r}")
        if kind == "symbol" and text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        what = text if text else "end of input"
        raise ParseError(pos, f"expected a value, found {what!r}")


def parse_text(text: str) -> Expr:
    """Parse the plain-text syntax back into a tree.

    Raises :class:`ParseError` with the character position on malformed
    input, including truncated expressions like ``"x1 +"``.
    """
    return _Parser(text).parse()
