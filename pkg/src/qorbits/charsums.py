"""Unit groups mod q, Dirichlet characters with exact rational angles,
Gauss sums and (twisted, coset) Kloosterman sums."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
from sympy import factorint, primitive_root

from .cyclotomic import Cyclotomic


def euler_phi(q: int) -> int:
    out = q
    for p in factorint(q):
        out -= out // p
    return out


def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def _crt_lift(residue: int, pk: int, q: int) -> int:
    """x = residue mod pk, x = 1 mod q/pk."""
    rest = q // pk
    if rest == 1:
        return residue % q
    return (residue * rest * pow(rest, -1, pk) + pk * pow(pk, -1, rest)) % q


@dataclass(frozen=True)
class Factor:
    """One cyclic factor of (Z/qZ)^x, living on the p-part p^k."""
    p: int
    k: int
    kind: str  # "cyclic" (odd p), "minus1" or "five" (p = 2)
    order: int


class UnitGroup:
    def __init__(self, q: int):
        if q < 1:
            raise ValueError(f"modulus must be positive, got {q}")
        self.q = q
        gens, factors = [], []
        for p, k in sorted(factorint(q).items()):
            pk = p ** k
            if p == 2:
                if k >= 2:
                    gens.append(_crt_lift(pk - 1, pk, q))
                    factors.append(Factor(2, k, "minus1", 2))
                if k >= 3:
                    gens.append(_crt_lift(5, pk, q))
                    factors.append(Factor(2, k, "five", 2 ** (k - 2)))
            else:
                gens.append(_crt_lift(int(primitive_root(pk)), pk, q))
                factors.append(Factor(p, k, "cyclic", pk - pk // p))
        self.generators = tuple(gens)
        self.factors = tuple(factors)
        self.orders = tuple(f.order for f in factors)
        self.order = math.prod(self.orders)
        self.exponent = _lcm(self.orders)

    def __repr__(self):
        return f"UnitGroup(q={self.q}, generators={self.generators}, orders={self.orders})"

    @cached_property
    def dlog(self) -> np.ndarray:
        """dlog[a] = exponent vector of a in the generators; -1 rows for non-units."""
        q, r = self.q, len(self.orders)
        if r == 0:
            return np.zeros((q, 0), dtype=np.int64)
        table = np.full((q, r), -1, dtype=np.int64)
        for exps in itertools.product(*(range(o) for o in self.orders)):
            v = 1
            for g, e in zip(self.generators, exps):
                v = v * pow(g, e, q) % q
            table[v] = exps
        return table

    @cached_property
    def units(self) -> np.ndarray:
        return np.array([a for a in range(self.q) if math.gcd(a, self.q) == 1], dtype=np.int64)

    @cached_property
    def inverses(self) -> np.ndarray:
        return np.array([pow(int(a), -1, self.q) if self.q > 1 else 0 for a in self.units], dtype=np.int64)

    def is_unit(self, a: int) -> bool:
        return math.gcd(a, self.q) == 1


@lru_cache(maxsize=4096)
def unit_group(q: int) -> UnitGroup:
    return UnitGroup(q)


class DirichletCharacter:
    """chi(g_i) = e(e_i / ord_i) on the generators of unit_group(q)."""

    def __init__(self, q: int, exponents: Sequence[int]):
        G = unit_group(q)
        exponents = tuple(int(e) % o for e, o in zip(exponents, G.orders))
        if len(exponents) != len(G.orders):
            raise ValueError(f"expected {len(G.orders)} exponents for q={q}")
        self.q = q
        self.group = G
        self.exponents = exponents

    def __eq__(self, other):
        return (isinstance(other, DirichletCharacter) and self.q == other.q
                and self.exponents == other.exponents)

    def __hash__(self):
        return hash((self.q, self.exponents))

    def __repr__(self):
        return f"DirichletCharacter(q={self.q}, exponents={self.exponents})"

    @property
    def L(self) -> int:
        return self.group.exponent

    @cached_property
    def numerators(self) -> np.ndarray:
        """Angle numerators over L for each residue mod q, -1 for non-units."""
        G = self.group
        w = np.array([e * (G.exponent // o) for e, o in zip(self.exponents, G.orders)], dtype=np.int64)
        num = (G.dlog @ w) % G.exponent if len(w) else np.zeros(self.q, dtype=np.int64)
        if len(w):
            num[G.dlog[:, 0] < 0] = -1
        else:
            num = np.where(np.gcd(np.arange(self.q), self.q) == 1, 0, -1)
        return num

    def angle(self, a: int) -> Fraction | None:
        """chi(a) = e(angle), or None when gcd(a, q) > 1."""
        n = int(self.numerators[a % self.q])
        return None if n < 0 else Fraction(n, self.L)

    def exact(self, a: int) -> Cyclotomic:
        n = int(self.numerators[a % self.q])
        return Cyclotomic() if n < 0 else Cyclotomic.root(n, self.L)

    def __call__(self, a: int) -> complex:
        n = int(self.numerators[a % self.q])
        if n < 0:
            return 0j
        return _e(n, self.L)

    def values(self) -> np.ndarray:
        """Complex values at 0..q-1."""
        num = self.numerators
        out = np.exp(2j * np.pi * np.where(num < 0, 0, num) / self.L)
        out[num < 0] = 0
        return out

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(self.q, [-e for e in self.exponents])

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.q != self.q:
            raise ValueError("characters of different moduli")
        return DirichletCharacter(self.q, [a + b for a, b in zip(self.exponents, other.exponents)])

    @property
    def is_principal(self) -> bool:
        return not any(self.exponents)

    @property
    def parity(self) -> int:
        """chi(-1) as +1 or -1."""
        if self.q <= 2:
            return 1
        n = int(self.numerators[self.q - 1])
        return 1 if n == 0 else -1

    @property
    def is_odd(self) -> bool:
        return self.parity == -1

    @cached_property
    def conductor(self) -> int:
        G = self.group
        cond = 1
        two = {}
        for e, f in zip(self.exponents, G.factors):
            if f.kind == "cyclic":
                o = f.order // math.gcd(e, f.order)
                if o > 1:
                    cond *= f.p ** (1 + _vp(o, f.p))
            else:
                two[f.kind] = (e, f.order)
        if two:
            e5, o5 = two.get("five", (0, 1))
            o = o5 // math.gcd(e5, o5)
            if o > 1:
                cond *= 2 ** (_vp(o, 2) + 2)
            elif two["minus1"][0] % 2:
                cond *= 4
        return cond

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.q

    def primitive(self) -> "DirichletCharacter":
        """The primitive character mod conductor inducing self."""
        c = self.conductor
        if c == self.q:
            return self
        H = unit_group(c)
        exps = []
        for g, o in zip(H.generators, H.orders):
            x = g
            while math.gcd(x, self.q) != 1:
                x += c
            num = int(self.numerators[x % self.q])
            e, r = divmod(num * o, self.L)
            assert r == 0
            exps.append(e)
        return DirichletCharacter(c, exps)


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _e(num: int, den: int) -> complex:
    """e(num/den) with the angle reduced exactly first."""
    num %= den
    t = 2 * math.pi * num / den
    return complex(math.cos(t), math.sin(t))


def _e_array(num: np.ndarray, den: int) -> np.ndarray:
    t = 2 * np.pi * (np.mod(num, den) / den)
    return np.cos(t) + 1j * np.sin(t)


@lru_cache(maxsize=256)
def _characters(q: int) -> tuple[DirichletCharacter, ...]:
    G = unit_group(q)
    return tuple(DirichletCharacter(q, e) for e in itertools.product(*(range(o) for o in G.orders)))


def characters(q: int) -> list[DirichletCharacter]:
    return list(_characters(q))


def principal_character(q: int) -> DirichletCharacter:
    return DirichletCharacter(q, [0] * len(unit_group(q).orders))


def conductor(chi: DirichletCharacter) -> int:
    return chi.conductor


def primitive_inducing(chi: DirichletCharacter) -> DirichletCharacter:
    return chi.primitive()


def conductor_by_divisors(chi: DirichletCharacter) -> int:
    """Least m | q with chi trivial on units = 1 mod m (slow reference)."""
    q = chi.q
    for m in sorted(d for d in range(1, q + 1) if q % d == 0):
        if all(chi.numerators[a] == 0 for a in range(1, q, m) if math.gcd(a, q) == 1):
            return m
    return q


def gauss_sum(chi: DirichletCharacter, shift: int = 1) -> complex:
    """sum_a chi(a) e(shift*a/m)."""
    m, L = chi.q, chi.L
    units = chi.group.units
    if m == 1:
        return 1 + 0j
    num = chi.numerators[units] * m + ((shift * units) % m) * L
    return complex(np.sum(_e_array(num, L * m)))


def kloosterman(m: int, n: int, q: int, chi: DirichletCharacter | None = None) -> complex:
    """sum over units a of chi(a) e((m a + n abar)/q); real for chi omitted."""
    G = unit_group(q)
    a, ab = G.units, G.inverses
    lin = (m * a + n * ab) % q
    if chi is None:
        t = 2 * np.pi * lin / q
        re, im = float(np.sum(np.cos(t))), float(np.sum(np.sin(t)))
        if abs(im) > 1e-12 * max(1, len(a)):
            raise ArithmeticError(f"plain Kloosterman sum has imaginary part {im}")
        return complex(re, 0.0)
    if chi.q != q:
        raise ValueError("character modulus differs from q")
    L = chi.L
    num = chi.numerators[a] * q + lin * L
    return complex(np.sum(_e_array(num, L * q)))


def kloosterman_table(q: int) -> np.ndarray:
    """Array K[m, n] = S(m, n; q) for all residues, via FFT along n."""
    G = unit_group(q)
    W = np.zeros((q, q), dtype=complex)
    m = np.arange(q)[:, None]
    W[:, G.inverses] = _e_array(m * G.units[None, :], q)
    return q * np.fft.ifft(W, axis=1)


# subgroups and cosets

@dataclass(frozen=True)
class CosetSpec:
    q: int
    subgroup_generators: tuple = ()
    coset_rep: int = 1

    def __post_init__(self):
        object.__setattr__(self, "subgroup_generators", tuple(int(g) % self.q for g in self.subgroup_generators))
        for g in self.subgroup_generators + (self.coset_rep,):
            if math.gcd(g, self.q) != 1:
                raise ValueError(f"{g} is not a unit mod {self.q}")

    @classmethod
    def full(cls, q: int) -> "CosetSpec":
        return cls(q, tuple(unit_group(q).generators))

    @classmethod
    def squares(cls, q: int) -> "CosetSpec":
        return cls(q, tuple(g * g % q for g in unit_group(q).generators))

    def fingerprint(self) -> str:
        H = enumerate_subgroup(self)
        return f"q{self.q}-H{len(H)}-{'.'.join(map(str, _canonical_generators(H, self.q)))}-c{min(self.elements())}"

    def subgroup(self) -> list[int]:
        return enumerate_subgroup(self)

    def elements(self) -> list[int]:
        return sorted(self.coset_rep * h % self.q for h in enumerate_subgroup(self))


def _closure(gens, q: int) -> frozenset:
    elems = {1 % q}
    frontier = [1 % q]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x * g % q
                if y not in elems:
                    elems.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(elems)


def enumerate_subgroup(spec: CosetSpec) -> list[int]:
    return sorted(_closure(spec.subgroup_generators, spec.q))


def _canonical_generators(H, q: int) -> list[int]:
    gens, cur = [], frozenset({1 % q})
    for h in sorted(H):
        if h not in cur:
            gens.append(h)
            cur = _closure(gens, q)
    return gens


def all_subgroups(q: int) -> list[tuple[int, ...]]:
    """Every subgroup of (Z/qZ)^x, each as a tuple of generators."""
    units = [int(a) for a in unit_group(q).units]
    found = {_closure([a], q) for a in units}
    frontier = set(found)
    while frontier:
        new = set()
        for A in frontier:
            for B in list(found):
                J = _closure(sorted(A | B), q)
                if J not in found:
                    new.add(J)
        found |= new
        frontier = new
    return sorted((tuple(_canonical_generators(H, q)) for H in found), key=lambda g: (len(_closure(g, q)), g))


@dataclass(frozen=True)
class CosetSum:
    direct: complex
    via_characters: complex

    @property
    def discrepancy(self) -> float:
        return abs(self.direct - self.via_characters)


def characters_trivial_on(spec: CosetSpec) -> list[DirichletCharacter]:
    return [chi for chi in _characters(spec.q)
            if all(chi.numerators[h] == 0 for h in spec.subgroup_generators)]


def coset_kloosterman(spec: CosetSpec, m: int, n: int, check: float | None = 1e-8) -> CosetSum:
    q = spec.q
    elems = np.array(spec.elements(), dtype=np.int64)
    inv = np.array([pow(int(a), -1, q) for a in elems], dtype=np.int64)
    direct = complex(np.sum(_e_array(m * elems + n * inv, q)))
    H = enumerate_subgroup(spec)
    chars = characters_trivial_on(spec)
    terms = np.array([np.conj(chi(spec.coset_rep)) * kloosterman(m, n, q, chi) for chi in chars])
    dual = complex(len(H) / euler_phi(q) * np.sum(terms))
    out = CosetSum(direct, dual)
    if check is not None and out.discrepancy > check:
        raise ArithmeticError(f"coset sum paths disagree by {out.discrepancy:.3e}")
    return out


def weil_bound(m: int, n: int, p: int) -> float:
    return 2.0 * math.sqrt(math.gcd(math.gcd(m, n), p)) * math.sqrt(p)


# twisted Ramanujan sums

def mobius(n: int) -> int:
    f = factorint(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def divisors(n: int) -> list[int]:
    out = [1]
    for p, e in factorint(n).items():
        out = [d * p ** i for d in out for i in range(e + 1)]
    return sorted(out)


def twisted_ramanujan_sum(chi: DirichletCharacter, k: int) -> complex:
    """sum_a conj(chi(a)) e(k a / q)."""
    return gauss_sum(chi.conj(), k)


def twisted_ramanujan_expansion(chi: DirichletCharacter, k: int) -> complex:
    """tau(conj chi*) * sum_{d | (k, q*)} d conj chi*(q*/d) mu(q*/d) chi*(k/d), q* = q/cond."""
    star = chi.primitive()
    qs = chi.q // star.conductor
    total = 0j
    for d in divisors(math.gcd(k, qs)):
        mu = mobius(qs // d)
        if mu:
            total += d * np.conj(star(qs // d)) * mu * star(k // d)
    return gauss_sum(star.conj()) * total


# export

def kloosterman_csv_rows(rows) -> str:
    """rows of (q, m, n, subgroup_id, coset_rep, value)."""
    lines = ["q,m,n,subgroup-id,coset-rep,real,imag"]
    for q, m, n, sid, c, v in rows:
        lines.append(f"{q},{m},{n},{sid},{c},{format(v.real, '.17g')},{format(v.imag, '.17g')}")
    return "\n".join(lines) + "\n"
