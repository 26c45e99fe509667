import math
from fractions import Fraction

from geosolve import exact
from geosolve.exact import Num, PI


def n(x) -> Num:
    return Num(Fraction(x))


def test_four_minus_pi_is_exact_until_float():
    v = exact.sub(n(4), PI)
    assert isinstance(v, Num)
    assert v.rat == 4 and v.pi_coef == -1
    assert math.isclose(exact.to_float(v), 4 - math.pi, rel_tol=0, abs_tol=1e-15)


def test_pi_products_degrade_to_float():
    v = exact.mul(PI, PI)
    assert isinstance(v, float)
    assert math.isclose(v, math.pi**2)


def test_rational_times_pi_stays_exact():
    v = exact.mul(n(4), PI)
    assert isinstance(v, Num) and v.pi_coef == 4


def test_pi_ratio_is_rational():
    v = exact.div(exact.mul(n(4), PI), exact.mul(n(2), PI))
    assert isinstance(v, Num) and v.rat == 2 and v.pi_coef == 0


def test_sqrt_perfect_square_exact():
    v = exact.sqrt(n(Fraction(9, 4)))
    assert isinstance(v, Num) and v.rat == Fraction(3, 2)


def test_sqrt_non_square_is_float():
    v = exact.sqrt(n(2))
    assert isinstance(v, float)
    assert math.isclose(v, math.sqrt(2))


def test_division_exact():
    v = exact.div(n(1), n(3))
    assert isinstance(v, Num) and v.rat == Fraction(1, 3)


def test_pow_integer_exact():
    v = exact.pow_(n(Fraction(3, 2)), n(2))
    assert isinstance(v, Num) and v.rat == Fraction(9, 4)


def test_is_close_mixed():
    assert exact.is_close(n(5), 5.0)
    assert not exact.is_close(n(5), 5.1)
