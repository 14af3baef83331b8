import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conelab.errors import ExpressionError
from conelab.expression import Expression, parse


def test_caret_is_power():
    assert parse("2^3")() == 8.0
    assert parse("2**3")() == 8.0


def test_variables_and_functions():
    e = parse("1 + 0.5*cos(theta)^2 + pow(x, 2) - abs(-z) + sqrt(e) * log(pi)")
    th = np.array([0.1, 0.7])
    val = e(theta=th, phi=0.0, x=0.3, y=0.0, z=0.2)
    ref = 1 + 0.5 * np.cos(th) ** 2 + 0.09 - 0.2 + math.sqrt(math.e) * math.log(math.pi)
    np.testing.assert_allclose(val, ref)


def test_unary_minus():
    assert parse("-(-3)")() == 3.0


@pytest.mark.parametrize("src, offset", [
    ("1 + 0.1*cos(theta", 11),
    ("foo(theta)", 0),
    ("1 + bar", 4),
    ("theta ^ ^ 2", 8),
    ("", 0),
    ("1 % 2", 0),
])
def test_errors_carry_offsets(src, offset):
    with pytest.raises(ExpressionError) as info:
        parse(src)
    assert info.value.offset == offset


def test_attribute_access_rejected():
    with pytest.raises(ExpressionError):
        parse("theta.real")


def test_wrong_arity():
    with pytest.raises(ExpressionError):
        parse("pow(theta)")


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_matches_python_arithmetic(a, b):
    e = parse(f"({a!r}) * x + ({b!r}) - x / 2")
    assert e(x=1.5) == pytest.approx(a * 1.5 + b - 0.75, abs=1e-12)
