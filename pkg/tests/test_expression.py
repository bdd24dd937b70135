import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sklsc.exceptions import ExpressionSyntaxError
from sklsc.expression import parse_expression
from sklsc.grid import TorusGrid


@pytest.mark.parametrize(
    "text, value",
    [
        ("1 + 2*3", 7.0),
        ("(1 + 2)*3", 9.0),
        ("2^3", 8.0),
        ("2*3^2", 18.0),
        ("8/4/2", 1.0),
        ("1 - 2 - 3", -4.0),
        ("-2^2", 4.0),
        ("- -3", 3.0),
        ("exp(0) + cos(0) + sin(0)", 2.0),
        ("2*pi", 2 * math.pi),
        ("1.5e2 + .5", 150.5),
    ],
)
def test_constant_expressions(text, value):
    assert parse_expression(text, variables=())() == pytest.approx(value, rel=1e-15)


def test_field_expression_on_grid():
    g = TorusGrid((8, 4))
    x1, x2 = g.coordinates()
    fld = parse_expression("sin(x1) - 0.2*cos(x2)^2", d=2).on_grid(g)
    assert np.array_equal(fld.values, np.sin(x1) - 0.2 * np.power(np.cos(x2), 2.0))
    const = parse_expression("3", d=2).on_grid(g)
    assert const.values.shape == g.shape and np.all(const.values == 3)


def test_parameter_function():
    f = parse_expression("1/(1-t)", variables=("t",)).as_function("t")
    assert f(0.5) == 2.0
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("x1 + t", variables=("t",))


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("2*", 1, 3),
        ("sin(x1", 1, 7),
        ("1 + $", 1, 5),
        ("x4", 1, 1),
        ("foo(1)", 1, 1),
        ("sin()", 1, 5),
        ("sin(1, 2)", 1, 6),
        ("2^x1", 1, 3),
        ("1\n+ * 2", 2, 3),
        ("(1 + 2))", 1, 8),
    ],
)
def test_syntax_errors_carry_position(text, line, column):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression(text, d=3)
    assert (info.value.line, info.value.column) == (line, column)
    assert f"line {line}, column {column}" in str(info.value)


@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(0.5, 50))
def test_matches_python_arithmetic(a, b, c):
    e = parse_expression(f"({a!r}) + ({b!r})*({c!r}) - ({a!r})/({c!r})", variables=())
    assert e() == pytest.approx(a + b * c - a / c, rel=1e-12, abs=1e-12)
