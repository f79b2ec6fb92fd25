"""Expression tree construction, evaluation, expansion, and text round-trips."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from addeval import (
    Binary,
    Constant,
    DomainViolation,
    ParseError,
    Unary,
    Variable,
    count_nonlinearities,
    decompose_additive,
    evaluate,
    expand,
    parse_text,
    signature_of,
    to_text,
    variables_of,
)
from addeval.expressions import BINARY_OPS, UNARY_OPS


def x(i):
    return Variable(i)


def c(v):
    return Constant(float(v))


# ---------------------------------------------------------------------------
# Node construction and evaluation
# ---------------------------------------------------------------------------


def test_variable_indices_are_one_based():
    with pytest.raises(ValueError):
        Variable(0)
    with pytest.raises(ValueError):
        Variable(-2)
    assert Variable(1).index == 1


def test_unknown_operator_rejected():
    with pytest.raises(ValueError):
        Unary("tanh", x(1))
    with pytest.raises(ValueError):
        Binary("mod", x(1), x(2))


def test_evaluate_is_vectorized():
    expr = Binary("add", x(1), Unary("exp", x(2)))
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, -1.0]])
    out = evaluate(expr, X)
    np.testing.assert_allclose(out, X[:, 0] + np.exp(X[:, 1]))


def test_evaluate_constant_broadcasts():
    out = evaluate(c(3.5), np.zeros((4, 2)))
    np.testing.assert_array_equal(out, np.full(4, 3.5))


@pytest.mark.parametrize("op,fn", [
    ("neg", lambda v: -v),
    ("abs", np.abs),
    ("exp", np.exp),
    ("sin", np.sin),
    ("cos", np.cos),
    ("square", np.square),
    ("cube", lambda v: v ** 3),
])
def test_unary_semantics(op, fn):
    X = np.linspace(-2, 2, 7).reshape(-1, 1)
    np.testing.assert_allclose(evaluate(Unary(op, x(1)), X), fn(X[:, 0]))


def test_log_requires_positive_argument():
    expr = Unary("log", x(1))
    np.testing.assert_allclose(
        evaluate(expr, np.array([[1.0], [np.e]])), [0.0, 1.0])
    with pytest.raises(DomainViolation) as err:
        evaluate(expr, np.array([[1.0], [-0.5]]))
    assert err.value.sample_index == 1


def test_sqrt_and_reciprocal_domains():
    with pytest.raises(DomainViolation):
        evaluate(Unary("sqrt", x(1)), np.array([[-1.0]]))
    with pytest.raises(DomainViolation):
        evaluate(Unary("reciprocal", x(1)), np.array([[0.0]]))


def test_division_by_zero_is_a_domain_violation():
    expr = Binary("div", x(1), x(2))
    with pytest.raises(DomainViolation):
        evaluate(expr, np.array([[1.0, 0.0]]))


def test_pow_domain_rules():
    # negative base is fine for integer exponents
    np.testing.assert_allclose(
        evaluate(Binary("pow", x(1), c(2)), np.array([[-3.0]])), [9.0])
    # fractional exponent of a negative base is not real
    with pytest.raises(DomainViolation):
        evaluate(Binary("pow", x(1), c(0.5)), np.array([[-3.0]]))
    # 0 ** negative is undefined
    with pytest.raises(DomainViolation):
        evaluate(Binary("pow", x(1), c(-1)), np.array([[0.0]]))


def test_variables_and_signature():
    expr = parse_text("x3 + log(x1*x4) + 2.0")
    assert variables_of(expr) == {1, 3, 4}
    assert signature_of(expr) == (1, 3, 4)
    assert signature_of(c(2)) == ()


# ---------------------------------------------------------------------------
# Nonlinearity counting
# ---------------------------------------------------------------------------


def test_count_nonlinearities_rules():
    # neg and scaling by constants are linear
    assert count_nonlinearities(parse_text("neg(x1) + 2*x2")) == 0
    # nonlinear unary ops count once each
    assert count_nonlinearities(parse_text("exp(x1) + sin(x2)")) == 2
    # products and quotients of variable-bearing operands count
    assert count_nonlinearities(parse_text("x1*x2")) == 1
    assert count_nonlinearities(parse_text("x1/x2")) == 1
    assert count_nonlinearities(parse_text("3*x1")) == 0
    # pow with a variable base counts; constant base does not
    assert count_nonlinearities(parse_text("x1^2")) == 1
    # nesting accumulates
    assert count_nonlinearities(parse_text("log(x1*x4)")) == 2


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------


def test_expand_distributes_product_over_sum():
    expr = parse_text("(x1 + x2) * x3")
    out = expand(expr)
    assert to_text(out) == "x1*x3 + x2*x3"


def test_expand_binomial_square():
    """(x1 + x2)^2 expands exactly; both forms agree numerically."""
    expr = parse_text("(x1 + x2)^2")
    out = expand(expr)
    rng = np.random.default_rng(0)
    X = rng.uniform(-2, 2, size=(100, 2))
    np.testing.assert_allclose(evaluate(out, X), evaluate(expr, X),
                               rtol=0, atol=1e-12)
    # every expanded term is a product, not a power
    assert "^" not in to_text(out)


def test_expand_division_splits_numerator_only():
    out = expand(parse_text("(x1 + x2) / x3"))
    assert to_text(out) == "x1/x3 + x2/x3"
    # denominator sums are left in place (1/(a+b) has no exact split)
    kept = expand(parse_text("x1 / (x2 + x3)"))
    assert to_text(kept) == "x1/(x2 + x3)"


def test_expand_subtraction_becomes_negated_addition():
    out = expand(parse_text("x1 - x2"))
    assert to_text(out) == "x1 + neg(x2)"


def test_expand_leaves_high_powers_alone():
    out = expand(parse_text("(x1 + x2)^5"))
    assert to_text(out) == "(x1 + x2)^5.0" or to_text(out) == "(x1 + x2)^5"


def _random_tree(rng, depth, n_vars):
    """Small random expression tree over safe operators (no domain holes)."""
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.25:
            return Constant(round(float(rng.uniform(-2, 2)), 3))
        return Variable(int(rng.integers(1, n_vars + 1)))
    pick = rng.random()
    if pick < 0.4:
        op = str(rng.choice(["neg", "abs", "sin", "cos", "square", "cube", "exp"]))
        return Unary(op, _random_tree(rng, depth - 1, n_vars))
    op = str(rng.choice(["add", "sub", "mul"]))
    return Binary(op, _random_tree(rng, depth - 1, n_vars),
                  _random_tree(rng, depth - 1, n_vars))


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_expand_preserves_value(seed):
    rng = np.random.default_rng(seed)
    expr = _random_tree(rng, depth=4, n_vars=3)
    X = rng.uniform(-1, 1, size=(50, 3))
    a = evaluate(expr, X)
    b = evaluate(expand(expr), X)
    np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-10)


# ---------------------------------------------------------------------------
# Additive decomposition
# ---------------------------------------------------------------------------


def test_decompose_merges_same_signature_terms():
    expr = parse_text("x1 + exp(x4) + log(x1*x4) + x4/x1")
    effects = decompose_additive(expand(expr))
    sigs = [sig for sig, _ in effects]
    assert sigs == [(1,), (4,), (1, 4)]
    merged = dict(effects)[(1, 4)]
    assert to_text(merged) == "log(x1*x4) + x4/x1"


def test_decompose_single_term():
    assert [sig for sig, _ in decompose_additive(x(1))] == [(1,)]


def test_decompose_constant_term_gets_empty_signature():
    effects = decompose_additive(Binary("add", c(3), x(2)))
    assert [sig for sig, _ in effects] == [(), (2,)]


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_decomposition_resums_to_the_original(seed):
    rng = np.random.default_rng(seed)
    expr = _random_tree(rng, depth=4, n_vars=3)
    expanded = expand(expr)
    effects = decompose_additive(expanded)
    assert len({sig for sig, _ in effects}) == len(effects)
    X = rng.uniform(-1, 1, size=(40, 3))
    total = sum(evaluate(e, X) for _, e in effects)
    np.testing.assert_allclose(total, evaluate(expr, X), rtol=1e-10, atol=1e-10)


# ---------------------------------------------------------------------------
# Text syntax
# ---------------------------------------------------------------------------


def test_parse_basic_grammar():
    expr = parse_text("log(x1*x4)")
    assert expr == Unary("log", Binary("mul", x(1), x(4)))


def test_parse_precedence_and_associativity():
    assert to_text(parse_text("x1 + x2 * x3")) == "x1 + x2*x3"
    # power binds tighter than product, right-associative
    assert parse_text("x1^2^3") == Binary("pow", x(1), Binary("pow", c(2), c(3)))
    # subtraction is left-associative
    assert evaluate(parse_text("4 - 2 - 1"), np.zeros((1, 1)))[0] == 1.0


def test_parse_unary_minus():
    assert parse_text("-2.5") == c(-2.5)
    out = evaluate(parse_text("-x1 + 1"), np.array([[2.0]]))
    assert out[0] == -1.0


def test_parse_errors_carry_position():
    with pytest.raises(ParseError):
        parse_text("x1 +")
    with pytest.raises(ParseError):
        parse_text("x1 @ x2")
    with pytest.raises(ParseError):
        parse_text("foo(x1)")
    with pytest.raises(ParseError):
        parse_text("(x1 + x2")
    with pytest.raises(ParseError):
        parse_text("x1 x2")


@pytest.mark.parametrize("text", [
    "x1 + exp(x4)",
    "log(x1*x4) + x4/x1",
    "(-1.282)*x3",
    "1.458*(x3*x2)",
    "x1^2 + sqrt(abs(x2) + 0.5)",
    "neg(x1)*cos(x2) - 3.25",
])
def test_round_trip_from_text(text):
    expr = parse_text(text)
    assert parse_text(to_text(expr)) == expr


@given(st.integers(0, 100_000))
@settings(max_examples=80, deadline=None)
def test_round_trip_random_trees(seed):
    rng = np.random.default_rng(seed)
    expr = _random_tree(rng, depth=5, n_vars=4)
    assert parse_text(to_text(expr)) == expr


def test_operator_tables_have_consistent_flags():
    # every generator-facing operator declares arity and linearity
    for name, op in UNARY_OPS.items():
        assert op.arity == 1, name
    for name, op in BINARY_OPS.items():
        assert op.arity == 2, name
    assert not UNARY_OPS["neg"].nonlinear
    assert UNARY_OPS["exp"].nonlinear
