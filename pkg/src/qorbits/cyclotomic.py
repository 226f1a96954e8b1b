"""Exact arithmetic in Q(zeta_L): Fraction-weighted sums of roots of unity."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from sympy import Poly, cyclotomic_poly, symbols

_x = symbols("x")


@lru_cache(maxsize=None)
def _cyclotomic_coeffs(L: int) -> tuple[int, ...]:
    """Coefficients of Phi_L, lowest degree first."""
    return tuple(int(c) for c in reversed(Poly(cyclotomic_poly(L, _x), _x).all_coeffs()))


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


class Cyclotomic:
    """sum_k c_k zeta_L^k with rational c_k, zeta_L = exp(2 pi i / L)."""

    __slots__ = ("L", "coeffs")

    def __init__(self, L: int = 1, coeffs: dict | None = None):
        self.L = L
        self.coeffs = {}
        for k, v in (coeffs or {}).items():
            if v:
                k %= L
                s = self.coeffs.get(k, 0) + v
                if s:
                    self.coeffs[k] = s
                else:
                    self.coeffs.pop(k, None)

    @classmethod
    def root(cls, num: int, L: int, coeff=1) -> "Cyclotomic":
        return cls(L, {num: Fraction(coeff)})

    @classmethod
    def rational(cls, r) -> "Cyclotomic":
        return cls(1, {0: Fraction(r)})

    def lift(self, L: int) -> "Cyclotomic":
        if L == self.L:
            return self
        if L % self.L:
            raise ValueError(f"cannot lift level {self.L} to {L}")
        f = L // self.L
        return Cyclotomic(L, {k * f: v for k, v in self.coeffs.items()})

    def _common(self, other):
        if not isinstance(other, Cyclotomic):
            other = Cyclotomic.rational(other)
        L = _lcm(self.L, other.L)
        return self.lift(L), other.lift(L), L

    def __add__(self, other):
        a, b, L = self._common(other)
        out = dict(a.coeffs)
        for k, v in b.coeffs.items():
            out[k] = out.get(k, 0) + v
        return Cyclotomic(L, out)

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic(self.L, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, Cyclotomic) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Cyclotomic):
            r = Fraction(other)
            return Cyclotomic(self.L, {k: v * r for k, v in self.coeffs.items()})
        a, b, L = self._common(other)
        out: dict = {}
        for k1, v1 in a.coeffs.items():
            for k2, v2 in b.coeffs.items():
                k = (k1 + k2) % L
                out[k] = out.get(k, 0) + v1 * v2
        return Cyclotomic(L, out)

    __rmul__ = __mul__

    def __truediv__(self, r):
        r = Fraction(r)
        return Cyclotomic(self.L, {k: v / r for k, v in self.coeffs.items()})

    def conjugate(self) -> "Cyclotomic":
        return Cyclotomic(self.L, {-k: v for k, v in self.coeffs.items()})

    def abs2(self) -> "Cyclotomic":
        return self * self.conjugate()

    def reduced(self) -> list[Fraction]:
        """Coefficient vector modulo Phi_L (length phi(L))."""
        phi = _cyclotomic_coeffs(self.L)
        deg = len(phi) - 1
        poly = [Fraction(0)] * max(self.L, deg + 1)
        for k, v in self.coeffs.items():
            poly[k] += v
        for i in range(len(poly) - 1, deg - 1, -1):
            c = poly[i]
            if c:
                for j in range(deg + 1):
                    poly[i - deg + j] -= c * phi[j]
        return poly[:deg]

    def is_zero(self) -> bool:
        if not self.coeffs:
            return True
        return not any(self.reduced())

    def __eq__(self, other):
        if not isinstance(other, (Cyclotomic, int, Fraction)):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def rational_value(self) -> Fraction | None:
        """The value as a rational if it lies in Q, else None."""
        red = self.reduced()
        if any(red[1:]):
            return None
        return Fraction(red[0]) if red else Fraction(0)

    def __complex__(self):
        re = math.fsum(float(v) * math.cos(2 * math.pi * k / self.L) for k, v in self.coeffs.items())
        im = math.fsum(float(v) * math.sin(2 * math.pi * k / self.L) for k, v in self.coeffs.items())
        return complex(re, im)

    def __repr__(self):
        terms = " + ".join(f"{v}*z^{k}" for k, v in sorted(self.coeffs.items())) or "0"
        return f"Cyclotomic(L={self.L}: {terms})"


def zeta(num: int, L: int) -> Cyclotomic:
    return Cyclotomic.root(num, L)


def to_complex(x) -> complex:
    if isinstance(x, Cyclotomic):
        return complex(x)
    return complex(x)


ZERO = Cyclotomic()
ONE = Cyclotomic.rational(1)
