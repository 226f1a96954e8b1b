import cmath
from fractions import Fraction

from hypothesis import given, strategies as st

from qorbits.cyclotomic import Cyclotomic, zeta


def test_roots_of_unity_sum_to_zero():
    for L in (1, 2, 3, 4, 6, 12, 30):
        total = Cyclotomic(L)
        for k in range(L):
            total = total + zeta(k, L)
        assert total.is_zero() == (L > 1)


def test_zeta_powers_and_conjugate():
    z = zeta(1, 5)
    assert z * z * z * z * z == Cyclotomic.rational(1)
    assert (z * z.conjugate()).rational_value() == 1
    assert zeta(1, 4) * zeta(1, 4) == Cyclotomic.rational(-1)


def test_mixed_levels_lift():
    s = zeta(1, 3) + zeta(1, 4)
    assert s.L == 12
    assert abs(complex(s) - (cmath.exp(2j * cmath.pi / 3) + 1j)) < 1e-14


def test_quadratic_gauss_sum_square_is_exact():
    # (sum of e(a^2/5))^2 = 5 with no floating point
    g = Cyclotomic(5)
    for a in range(5):
        g = g + zeta(a * a, 5)
    assert (g * g).rational_value() == 5


COEF = st.fractions(min_value=-20, max_value=20, max_denominator=9)


@given(st.integers(1, 24), st.lists(st.tuples(st.integers(0, 40), COEF), max_size=6),
       st.lists(st.tuples(st.integers(0, 40), COEF), max_size=6))
def test_arithmetic_matches_complex(L, xs, ys):
    x = Cyclotomic(L, {k: Fraction(v) for k, v in xs})
    y = Cyclotomic(L, {k: Fraction(v) for k, v in ys})
    for got, want in ((x + y, complex(x) + complex(y)), (x - y, complex(x) - complex(y)),
                      (x * y, complex(x) * complex(y))):
        assert abs(complex(got) - want) < 1e-9 * (1 + abs(want))
    assert (x - x).is_zero()
    assert abs(complex(x.abs2()) - abs(complex(x)) ** 2) < 1e-9 * (1 + abs(complex(x)) ** 2)
