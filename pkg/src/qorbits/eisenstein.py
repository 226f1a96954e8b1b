"""Weight-2 Eisenstein series and cusp form coefficient sources, Dedekind
sums, Eisenstein pairings of closed geodesics, modular symbols, Dirichlet
L-values at 0 and 1, local weights and the Birch-Stevens identities."""
from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .charsums import DirichletCharacter, divisors, gauss_sum, mobius
from .cyclotomic import Cyclotomic
from .modgroup import (EmbeddingSpec, UnimodularMatrix, embed, geodesic_coords, geodesic_data,
                       normalize)

TAIL_TOL = 1e-14


# arithmetic functions

def sigma1_table(n: int) -> np.ndarray:
    """sigma_1(k) for k = 0..n (sigma_1(0) := 0), exact int64 sieve."""
    out = np.zeros(n + 1, dtype=np.int64)
    for d in range(1, n + 1):
        out[d::d] += d
    return out


def sigma1(n: int) -> int:
    return sum(divisors(n)) if n >= 1 else 0


def eta_product_coefficients(nmax: int, levels: Sequence[int] = (1, 1, 11, 11)) -> list[int]:
    """Coefficients a_0..a_nmax of q^(sum(levels)/24) prod_k prod_m (1 - q^{k m})."""
    shift, r = divmod(sum(levels), 24)
    if r:
        raise ValueError("eta quotient is not a power series in q")
    poly = [0] * (nmax + 1)
    if shift <= nmax:
        poly[shift] = 1
    for k in levels:
        for m in range(1, nmax // k + 1):
            step = k * m
            for i in range(nmax, step - 1, -1):
                poly[i] -= poly[i - step]
    return poly


# coefficient sources

class CoefficientSource:
    """q-expansion sum_{n >= 0} a_n e(nz) of a weight-2 form, with an optional
    Hecke eigenvalue rule (classical normalization, eigenvalue of T_n on a
    newform with a_1 = 1)."""

    kind = "abstract"
    level = 1
    completed = False

    def __init__(self):
        self._lock = threading.Lock()
        self._table = np.zeros(0)

    def _compute(self, nmax: int) -> np.ndarray:
        raise NotImplementedError

    def coefficients(self, nmax: int) -> np.ndarray:
        """a_0..a_nmax as floats; memoized in an append-only table."""
        table = self._table
        if len(table) <= nmax:
            with self._lock:
                if len(self._table) <= nmax:
                    self._table = self._compute(max(nmax, 2 * len(self._table), 8))
                table = self._table
        return table[: nmax + 1]

    def coefficient(self, n: int):
        return self.coefficients(n)[n]

    @property
    def constant_term(self):
        return self.coefficient(0)

    @property
    def is_cuspidal(self) -> bool:
        return self.constant_term == 0

    def hecke_eigenvalue(self, n: int) -> int:
        raise ValueError(f"{self.kind} has no Hecke eigenvalue rule")

    def nebentypus(self, n: int) -> int:
        """Trivial character mod the level."""
        return 1 if math.gcd(n, self.level) == 1 else 0

    def truncation(self, y: float) -> int:
        """Smallest n with 25 n^2 e^{-2 pi n y} below the tail tolerance."""
        n = 1
        while 25.0 * n * n * math.exp(-2 * math.pi * n * y) > TAIL_TOL:
            n = max(n + 1, int(n * 1.2))
        return n

    def holomorphic(self, z) -> np.ndarray:
        """sum a_n e(n z), vectorized over z with a common truncation."""
        z = np.asarray(z, dtype=complex)
        if np.any(z.imag <= 0):
            raise ValueError("point not in the upper half-plane")
        nmax = self.truncation(float(np.min(z.imag)))
        a = self.coefficients(nmax)
        n = np.arange(1, nmax + 1)
        terms = a[1:] * np.exp(2j * np.pi * np.multiply.outer(z, n))
        return a[0] + terms.sum(axis=-1)

    def __call__(self, z):
        return self.holomorphic(z)


class E2Star(CoefficientSource):
    """1 - 3/(pi y) - 24 sum sigma_1(n) e(nz); weight-2 modular, not holomorphic.
    Hecke eigenvalues sigma_1(n) belong to the weight-2 level-1 Eisenstein newform."""

    kind = "E2Star"
    completed = True

    def _compute(self, nmax):
        a = -24.0 * sigma1_table(nmax).astype(float)
        a[0] = 1.0
        return a

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return self.holomorphic(z) - 3.0 / (np.pi * z.imag)

    def hecke_eigenvalue(self, n: int) -> int:
        return sigma1(n)


class E2Level(CoefficientSource):
    """(N E2*(Nz) - E2*(z)) / (N - 1): holomorphic weight 2 on Gamma_0(N), constant term 1."""

    kind = "E2Level"

    def __init__(self, N: int):
        super().__init__()
        if N < 2:
            raise ValueError("level must be >= 2")
        self.level = N

    def _compute(self, nmax):
        N = self.level
        s = sigma1_table(nmax).astype(float)
        a = s.copy()
        a[N::N] -= N * s[1: nmax // N + 1]
        a *= 24.0 / (N - 1)
        a[0] = 1.0
        return a


class EtaSquaredLevel11(CoefficientSource):
    """eta(z)^2 eta(11z)^2, the weight-2 newform of level 11."""

    kind = "EtaSquaredLevel11"
    level = 11

    def __init__(self):
        super().__init__()
        self._exact: list[int] = [0]

    def _compute(self, nmax):
        self._exact = eta_product_coefficients(nmax)
        return np.array(self._exact, dtype=float)

    def hecke_eigenvalue(self, n: int) -> int:
        self.coefficients(n)
        return self._exact[n]


class UserSupplied(CoefficientSource):
    kind = "UserSupplied"

    def __init__(self, coefficients: Sequence, level: int = 1):
        super().__init__()
        self._given = [c for c in coefficients]
        self.level = level

    def _compute(self, nmax):
        if nmax >= len(self._given):
            nmax = len(self._given) - 1
        return np.array(self._given[: nmax + 1], dtype=float)

    def coefficients(self, nmax):
        if nmax >= len(self._given):
            raise ValueError(f"only {len(self._given)} coefficients supplied, need {nmax + 1}")
        return super().coefficients(nmax)

    def hecke_eigenvalue(self, n: int):
        a = self._given
        if n >= len(a):
            raise ValueError(f"coefficient {n} not supplied")
        check_multiplicative(a)
        return a[n]


def check_multiplicative(a: Sequence, bound: int | None = None):
    """Reject sequences that are not normalized multiplicative (a_1 = 1,
    a_mn = a_m a_n for coprime m, n)."""
    bound = min(bound or len(a) - 1, len(a) - 1)
    if bound >= 1 and a[1] != 1:
        raise ValueError("coefficient source is not Hecke-normalized (a_1 != 1)")
    for m in range(2, bound + 1):
        for n in range(m + 1, bound // m + 1):
            if math.gcd(m, n) == 1 and a[m * n] != a[m] * a[n]:
                raise ValueError(f"coefficient source is not multiplicative: a_{m * n} != a_{m} a_{n}")


# Dedekind sums and the Rademacher function

def _sawtooth(x: Fraction) -> Fraction:
    if x.denominator == 1:
        return Fraction(0)
    return x - math.floor(x) - Fraction(1, 2)


def dedekind_sum_direct(d: int, c: int) -> Fraction:
    return sum((_sawtooth(Fraction(k, c)) * _sawtooth(Fraction(k * d, c)) for k in range(1, c)), Fraction(0))


def dedekind_sum(d: int, c: int) -> Fraction:
    """s(d, c) via the reciprocity law, exact."""
    if c < 1:
        raise ValueError(f"c must be positive, got {c}")
    if math.gcd(d, c) != 1:
        raise ValueError(f"gcd({d}, {c}) = {math.gcd(d, c)} != 1")
    h, k = d % c, c
    total, sign = Fraction(0), 1
    while h:
        total += sign * (Fraction(h * h + k * k + 1, 12 * h * k) - Fraction(1, 4))
        sign = -sign
        h, k = k % h, h
    return total


def rademacher_phi(g: UnimodularMatrix) -> Fraction:
    g = normalize(g)
    if g.c == 0:
        return Fraction(g.b, g.d)
    return Fraction(g.a + g.d, g.c) - 12 * dedekind_sum(g.d, g.c)


def rademacher_phi_numeric(g: UnimodularMatrix) -> float:
    """Integral of the holomorphic level-1 series E2 along the horizontal
    segment from -d/c + i/c to a/c + i/c = g(-d/c + i/c), integrated term by term."""
    g = normalize(g)
    if g.c == 0:
        return g.b / g.d
    a, c, d = g.a, g.c, g.d
    y = 1.0 / c
    nmax = E2_HOLOMORPHIC.truncation(y)
    s = sigma1_table(nmax)[1:].astype(float)
    n = np.arange(1, nmax + 1)
    ea = np.exp(2j * np.pi * ((n * a) % c) / c)
    ed = np.exp(-2j * np.pi * ((n * d) % c) / c)
    terms = s * np.exp(-2 * np.pi * n * y) * (ea - ed) / (2j * np.pi * n)
    return ((a + d) / c - 24.0 * complex(np.sum(terms))).real


class _E2Holomorphic(CoefficientSource):
    kind = "E2"

    def _compute(self, nmax):
        a = -24.0 * sigma1_table(nmax).astype(float)
        a[0] = 1.0
        return a


E2_HOLOMORPHIC = _E2Holomorphic()


# Eisenstein pairing

def _check_level(g: UnimodularMatrix, N: int):
    if N < 3 or any(N % p == 0 for p in range(2, int(math.isqrt(N)) + 1)):
        raise ValueError(f"level must be a prime >= 3, got {N}")
    if g.c % N:
        raise ValueError(f"{g} is not in Gamma_0({N})")


def eisenstein_pairing(g: UnimodularMatrix, N: int) -> Fraction:
    """Pairing of the class of g in Gamma_0(N) with the Eisenstein class of E_{2,N}:
    (Phi(g_N) - Phi(g)) / (N - 1), g_N = (a, bN; c/N, d)."""
    g = normalize(g)
    _check_level(g, N)
    gN = normalize((g.a, g.b * N, g.c // N, g.d))
    return (rademacher_phi(gN) - rademacher_phi(g)) / (N - 1)


def eisenstein_pairing_numeric(g: UnimodularMatrix, N: int, tol: float = 1e-10) -> float:
    """tr/c + i int_{1/c}^inf (E_{2,N}(-d/c + iy) - 1) dy - i int_{1/c}^inf (E_{2,N}(a/c + iy) - 1) dy."""
    g = normalize(g)
    _check_level(g, N)
    if g.c == 0:
        return float(g.b)
    E = E2Level(N)
    c = g.c
    xm, xp = -g.d / c, g.a / c

    def integrand(y):
        return (1j * (E(xm + 1j * y) - 1.0) - 1j * (E(xp + 1j * y) - 1.0)).real

    y0 = 1.0 / c
    ymax = y0 + 40.0 / (2 * math.pi)
    val, err = integrate.quad(integrand, y0, ymax, epsabs=tol, epsrel=0, limit=500)
    return g.trace / c + val


def pairing_dual(g: UnimodularMatrix, N: int, tol: float = 1e-6) -> tuple[Fraction, float]:
    exact = eisenstein_pairing(g, N)
    numeric = eisenstein_pairing_numeric(g, N)
    if abs(float(exact) - numeric) > tol:
        raise ArithmeticError(f"pairing modes disagree for {g}: {exact} vs {numeric}")
    return exact, numeric


# modular symbols

def _twist_tail(f: CoefficientSource, x: Fraction, h: float) -> complex:
    """2 pi i int_{x + ih}^{i inf} f(z) dz = -sum a_n e(nx) e^{-2 pi n h} / n."""
    n_max = 1
    while math.exp(-2 * math.pi * n_max * h) * n_max > 1e-16:
        n_max = max(n_max + 1, int(n_max * 1.25))
    a = f.coefficients(n_max)[1:]
    n = np.arange(1, n_max + 1)
    num = (n * x.numerator) % x.denominator
    phase = np.exp(2j * np.pi * num / x.denominator)
    return complex(-np.sum(a * phase * np.exp(-2 * np.pi * n * h) / n))


def modular_symbol(f: CoefficientSource, g: UnimodularMatrix, N: int | None = None,
                   height: float | None = None) -> complex:
    """2 pi i int_{g inf}^{i inf} f(z) dz for a cusp form f on Gamma_0(N), split at
    height h above g(inf) and 1/(c^2 h) above g^{-1}(inf) (default h = 1/c)."""
    if not f.is_cuspidal:
        raise ValueError("modular symbols need a cuspidal source")
    g = normalize(g)
    N = f.level if N is None else N
    if g.c < 1 or g.c % N:
        raise ValueError(f"{g} is not in Gamma_0({N}) with nonzero lower-left entry")
    c = g.c
    h = 1.0 / c if height is None else height
    return _twist_tail(f, Fraction(g.a, c), h) - _twist_tail(f, Fraction(-g.d, c), 1.0 / (c * c * h))


def geodesic_period(f: CoefficientSource, g: UnimodularMatrix, nodes: int = 400) -> complex:
    """int_0^L y f(z) e^{2 i theta} dt over one period of the closed geodesic of g,
    by Gauss-Legendre in t. Since y e^{2 i theta} dt = -i dz along the flow, this is
    modular_symbol(f, g) / (2 pi) = -L(1/2, f, g(inf)) / (2 pi)."""
    g = normalize(g)
    L = geodesic_data(g).length
    t, w = np.polynomial.legendre.leggauss(nodes)
    t, w = t * L / 2, w * L / 2
    x, y, th = geodesic_coords(g, t)
    return complex(np.sum(w * y * f.holomorphic(x + 1j * y) * np.exp(2j * th)))


def additive_twist(f: CoefficientSource, a: int, q: int) -> complex:
    """L(1/2, f, a/q) = sum a_n e(na/q)/n (classical coefficients, lambda_f(n) = a_n/sqrt n),
    evaluated as minus the modular symbol of a Gamma_0(N) matrix with g(inf) = a/q."""
    g, _ = embed(a, EmbeddingSpec(q))
    return -modular_symbol(f, g)


# Dirichlet L-values

def _require_nonprincipal(chi: DirichletCharacter):
    if chi.is_principal:
        raise ValueError("principal character: pole bookkeeping is not supported")


def dirichlet_L0_exact(chi: DirichletCharacter) -> Cyclotomic:
    """L(0, chi) = -(1/m) sum_{a=1}^{m} chi(a) a."""
    _require_nonprincipal(chi)
    total = Cyclotomic()
    for a in range(1, chi.q + 1):
        n = int(chi.numerators[a % chi.q])
        if n >= 0:
            total = total + Cyclotomic.root(n, chi.L, a)
    return total * Fraction(-1, chi.q)


def dirichlet_L0_sawtooth(chi: DirichletCharacter) -> Cyclotomic:
    """-sum_a chi(a) ((a/m)), the same value through the sawtooth function."""
    _require_nonprincipal(chi)
    total = Cyclotomic()
    for a in range(1, chi.q):
        n = int(chi.numerators[a])
        if n >= 0:
            total = total + Cyclotomic.root(n, chi.L, _sawtooth(Fraction(a, chi.q)))
    return -total


def dirichlet_L1(chi: DirichletCharacter) -> complex:
    """L(1, chi) = -(1/tau(conj chi)) sum_a conj chi(a) log(1 - e(a/m)), chi primitive."""
    _require_nonprincipal(chi)
    if not chi.is_primitive:
        raise ValueError("L(1, chi) is only evaluated for primitive characters")
    m = chi.q
    a = chi.group.units
    vals = np.conj(chi.values()[a])
    logs = np.log(2 * np.sin(np.pi * a / m)) + 1j * (np.pi * a / m - np.pi / 2)
    return complex(-np.sum(vals * logs) / gauss_sum(chi.conj()))


def dirichlet_L1_series(chi: DirichletCharacter, blocks: int = 64, order: int = 14) -> complex:
    """Partial sum over n <= blocks*m plus the tail expanded in Hurwitz zeta values."""
    _require_nonprincipal(chi)
    m = chi.q
    vals = chi.values()
    n = np.arange(1, blocks * m + 1)
    head = np.sum(vals[n % m] / n)
    r = np.arange(1, m + 1)
    w = vals[r % m]
    tail = 0j
    for j in range(1, order + 1):
        moment = np.sum(w * (r / m) ** j)
        tail += (-1) ** j * moment / m * special.zeta(j + 1, blocks)
    return complex(head + tail)


def dirichlet_L(chi: DirichletCharacter, point: int) -> complex:
    if point == 0:
        return complex(dirichlet_L0_exact(chi))
    if point == 1:
        return dirichlet_L1(chi)
    raise ValueError("only the points 0 and 1 are supported")


@dataclass(frozen=True)
class LValueBundle:
    chi: DirichletCharacter
    L0: complex
    L1: complex | None


def l_values(chi: DirichletCharacter) -> LValueBundle:
    return LValueBundle(chi, dirichlet_L(chi, 0), dirichlet_L1(chi) if chi.is_primitive else None)


# local weights

def _char_exact(chi: DirichletCharacter | None, n: int) -> Cyclotomic:
    if chi is None:
        return Cyclotomic.rational(1)
    return chi.exact(n)


def local_weight_exact(f: CoefficientSource, chi: DirichletCharacter, n: int, ell: int = 1) -> Cyclotomic:
    """The triple divisor sum defining nu_{1/2}(f, chi, n; ell), exact.

    At s = 1/2 the powers of n2, n3 and (n3, ell) combine with lambda_f(m) = A(m)/sqrt(m)
    into (n3, ell) * A(n3 / (n3, ell)), with A the classical Hecke eigenvalue."""
    if n < 1 or ell < 1:
        raise ValueError("n and ell must be positive")
    total = Cyclotomic()

    def vanishes(m):
        return chi is not None and chi.angle(m) is None

    for n1 in divisors(n):
        mu1 = mobius(n1)
        if not mu1 or vanishes(n1):
            continue
        for n2 in divisors(n // n1):
            mu2 = mobius(n2)
            eta = f.nebentypus(n2)
            if not mu2 or not eta or vanishes(n2):
                continue
            n3 = n // (n1 * n2)
            if n3 % math.gcd(n2 * n3, ell):
                continue
            g = math.gcd(n3, ell)
            if vanishes(ell // g):
                continue
            coeff = g * f.hecke_eigenvalue(n3 // g)
            if not coeff:
                continue
            term = (_char_exact(chi, n1).conjugate() * _char_exact(chi, n2)
                    * _char_exact(chi, ell // g)) * (mu1 * mu2 * eta * coeff)
            total = total + term
    return total


def local_weight(f: CoefficientSource, chi: DirichletCharacter, n: int, ell: int = 1, s: float = 0.5) -> complex:
    """nu_s(f, chi, n; ell) as a complex number."""
    if s == 0.5:
        return complex(local_weight_exact(f, chi, n, ell))
    total = 0j
    for n1 in divisors(n):
        for n2 in divisors(n // n1):
            n3 = n // (n1 * n2)
            if n3 % math.gcd(n2 * n3, ell):
                continue
            g = math.gcd(n3, ell)
            m = n3 // g
            lam = f.hecke_eigenvalue(m) / math.sqrt(m)
            total += (mobius(n1) * np.conj(chi(n1)) * n2 ** (1 - 2 * s) * f.nebentypus(n2) * mobius(n2)
                      * chi(n2) * n3 ** (1 - s) * lam * g ** s * chi(ell // g))
    return complex(total)


EISENSTEIN = E2Star()


def nu(chi: DirichletCharacter, q: int, ell: int = 1) -> Cyclotomic:
    """nu(chi, q; ell) for the level-1 Eisenstein newform, exact."""
    return local_weight_exact(EISENSTEIN, chi, q, ell)


def nu_prime_power_closed_form(chi: DirichletCharacter, p: int, m: int) -> Cyclotomic:
    """(p^{m-1} |p - chi(p)|^2 - |1 - chi(p)|^2) / (p - 1), m >= 1."""
    if m < 1:
        raise ValueError("m must be >= 1")
    x = chi.exact(p)
    return ((p - x).abs2() * p ** (m - 1) - (1 - x).abs2()) / (p - 1)


@dataclass(frozen=True)
class WeightDifference:
    chi: DirichletCharacter
    q: int
    ell: int
    difference: Cyclotomic
    predicted: Cyclotomic

    @property
    def holds(self) -> bool:
        return (self.difference - self.predicted).is_zero()


def _strip(q: int, p: int) -> int:
    while q % p == 0:
        q //= p
    return q


def local_weight_difference_check(chi: DirichletCharacter, q: int, ell: int) -> WeightDifference:
    diff = nu(chi, q, ell) - nu(chi, q, 1)
    x = chi.exact(ell)
    if q % ell:
        pred = -(1 - x) * nu(chi, q, 1)
    else:
        pred = -(1 - x).abs2() * nu(chi, _strip(q, ell), 1)
    return WeightDifference(chi, q, ell, diff, pred)


# Birch-Stevens identities

@dataclass
class BirchStevensReport:
    N: int
    q: int
    chi: DirichletCharacter
    lhs: complex
    rhs: complex
    residual: float
    pairings: list = field(default_factory=list)
    trace_term: complex = 0j
    eisenstein_term: float = 0.0
    seconds: float = 0.0

    def to_json_dict(self, timing: bool = True) -> dict:
        out = {
            "N": self.N, "q": self.q, "chi_exponents": list(self.chi.exponents),
            "lhs": {"real": self.lhs.real, "imag": self.lhs.imag},
            "rhs": {"real": self.rhs.real, "imag": self.rhs.imag},
            "residual": self.residual,
            "pairings": [{"a": a, "value": f"{p.numerator}/{p.denominator}"} for a, p in self.pairings],
        }
        if timing:
            out["timing"] = {"seconds": self.seconds}
        return out


def birch_stevens_eisenstein(N: int, q: int, chi: DirichletCharacter,
                             spec: EmbeddingSpec | None = None) -> BirchStevensReport:
    """lhs = sum_a conj chi(a) <C_a, omega_E(N)>; rhs = Eisenstein L-value term + sum_a conj chi(a) tr/q."""
    start = time.perf_counter()
    if q % N:
        raise ValueError(f"level {N} does not divide q = {q}")
    if chi.q != q:
        raise ValueError("character modulus must equal q")
    spec = spec or EmbeddingSpec(q)
    if spec.q != q:
        raise ValueError("embedding modulus must equal q")
    lhs = Cyclotomic()
    trace_term = Cyclotomic()
    pairings = []
    for a in (int(v) for v in chi.group.units):
        g, _ = embed(a, spec)
        p = eisenstein_pairing(g, N)
        pairings.append((a, p))
        w = chi.exact(a).conjugate()
        lhs = lhs + w * p
        trace_term = trace_term + w * Fraction(g.trace, q)
    eis = 0.0
    if not chi.is_principal and chi.is_odd:
        star = chi.primitive()
        c = star.q
        qs = q // c
        weight = complex(nu(star, qs // (qs // _strip(qs, N)), 1)).real
        L1 = dirichlet_L1(star)
        eis = (12.0 / math.pi ** 2) * abs(star(N) - 1) ** 2 / (N - 1) * abs(L1) ** 2 * c * weight
    lhs_c = complex(lhs)
    rhs_c = eis + complex(trace_term)
    return BirchStevensReport(N, q, chi, lhs_c, rhs_c, abs(lhs_c - rhs_c), pairings,
                              complex(trace_term), eis, time.perf_counter() - start)


@dataclass
class CuspConsistency:
    q: int
    q2: int
    sum_q: complex
    sum_q2: complex
    weight_q: complex
    weight_q2: complex
    status: str

    @property
    def ratio(self) -> complex:
        return self.sum_q / self.sum_q2 if abs(self.sum_q2) >= 1e-12 else complex("nan")

    @property
    def predicted(self) -> complex:
        return self.weight_q / self.weight_q2 if abs(self.weight_q2) >= 1e-12 else complex("nan")


def twisted_twist_sum(f: CoefficientSource, chi_star: DirichletCharacter, q: int) -> complex:
    """sum over a in (Z/qZ)^x of conj chi*(a) L(1/2, f, a/q)."""
    total = []
    for a in range(1, q):
        if math.gcd(a, q) == 1:
            total.append(np.conj(chi_star(a)) * additive_twist(f, a, q))
    return complex(np.sum(total))


def birch_stevens_cuspform_consistency(f: CoefficientSource, chi: DirichletCharacter, q: int, q2: int,
                                       tol: float = 1e-6) -> CuspConsistency:
    star = chi.primitive()
    c = star.q
    for m in (q, q2):
        if m % c or m % f.level:
            raise ValueError(f"{m} must be a multiple of the conductor {c} and the level {f.level}")
    s1, s2 = twisted_twist_sum(f, star, q), twisted_twist_sum(f, star, q2)
    w1 = complex(local_weight_exact(f, star, q // c))
    w2 = complex(local_weight_exact(f, star, q2 // c))
    if abs(w2) < 1e-12 or abs(s2) < 1e-12:
        status = "inconclusive"
    else:
        status = "pass" if abs(s1 / s2 - w1 / w2) <= tol * max(1.0, abs(w1 / w2)) else "fail"
    return CuspConsistency(q, q2, s1, s2, w1, w2, status)


def e2star_at_i() -> float:
    return abs(complex(EISENSTEIN(1j)))
