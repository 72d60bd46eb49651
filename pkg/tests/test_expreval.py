"""Arithmetic evaluator: grammar, precedence, errors, and parity with Python."""

import math

import pytest

from planweave.expreval import ExpressionError, evaluate, tokenize, variables_in
from oracle_impls import run_expression_parity


def test_tokenizer_kinds():
    kinds = [(t.kind, t.text) for t in tokenize("2.5e3 + rate_x ** (7)")]
    assert kinds == [
        ("number", "2.5e3"),
        ("op", "+"),
        ("name", "rate_x"),
        ("op", "**"),
        ("op", "("),
        ("number", "7"),
        ("op", ")"),
    ]


def test_tokenizer_rejects_unknown_characters():
    with pytest.raises(ExpressionError) as err:
        tokenize("2 % 3")
    assert err.value.code == "bad-token"


@pytest.mark.parametrize(
    "text, want",
    [
        ("2+3*4", 14.0),
        ("2*3+4", 10.0),
        ("(1+2)*(3+4)", 21.0),
        ("7-4-2", 1.0),
        ("8/2/2", 2.0),
        ("-2**2", -4.0),
        ("(-2)**2", 4.0),
        ("2**-3", 0.125),
        ("2**3**2", 512.0),
        ("--5", 5.0),
        ("-(2+3)", -5.0),
        ("2e2+1", 201.0),
        ("1.5*4", 6.0),
        ("2 ** -3 ** 2", 2.0**-9),
        ("10/4", 2.5),
        ("+7", 7.0),
        ("- -3", 3.0),
    ],
)
def test_precedence_and_associativity(text, want):
    assert evaluate(text) == pytest.approx(want, rel=1e-15)


def test_variables_resolve_from_env():
    assert evaluate("price * (1 + rate)", {"price": 200.0, "rate": 0.1}) == pytest.approx(220.0)
    assert variables_in("price * (1 + rate)") == frozenset({"price", "rate"})
    assert variables_in("2 + 2") == frozenset()


def test_unbound_variable():
    with pytest.raises(ExpressionError) as err:
        evaluate("missing + 1", {"other": 2.0})
    assert err.value.code == "unbound-variable"


@pytest.mark.parametrize(
    "text",
    ["", "2+", "(2", "2)", "5 6", "*3", "()"],
)
def test_bad_expression(text):
    with pytest.raises(ExpressionError) as err:
        evaluate(text)
    assert err.value.code == "bad-expression"


def test_division_by_zero():
    for text in ("1/0", "x/(3-3)"):
        with pytest.raises(ExpressionError) as err:
            evaluate(text, {"x": 5.0})
        assert err.value.code == "division-by-zero"


def test_domain_errors():
    with pytest.raises(ExpressionError) as err:
        evaluate("(0-2)**0.5")
    assert err.value.code == "domain-error"
    with pytest.raises(ExpressionError) as err:
        evaluate("0**-1")
    assert err.value.code == "domain-error"
    # Intermediate overflow surfaces as a non-finite final value.
    with pytest.raises(ExpressionError) as err:
        evaluate("9e307*100")
    assert err.value.code == "domain-error"


def test_whitespace_insensitive():
    assert evaluate(" 2 +2* 3 ") == evaluate("2+2*3") == 8.0


def test_result_is_finite_float():
    value = evaluate("2**0.5")
    assert isinstance(value, float) and math.isfinite(value)
    assert value == pytest.approx(math.sqrt(2))


def test_parity_with_python_eval_sample():
    attempts, checked, worst = run_expression_parity(seed=4242, target_pairs=3000)
    assert checked == 3000
    assert worst <= 1e-12
    # Rejections exist but stay a small minority of draws.
    assert attempts < checked * 2
