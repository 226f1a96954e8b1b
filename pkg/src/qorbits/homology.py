"""Words in Gamma_0(N), rational abelianization, homology classes of q-orbits
and concentration toward the cusp class."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import sympy

from .eisenstein import eisenstein_pairing
from .modgroup import (IDENTITY, S, T, EmbeddingSpec, UnimodularMatrix, embed, inverse_mod, negative_inverse_matrix,
                       normalize)


def _is_prime(n: int) -> bool:
    return n >= 2 and sympy.isprime(n)


def _power(g: UnimodularMatrix, k: int) -> UnimodularMatrix:
    """g^k by repeated squaring; negative k through the inverse."""
    if k < 0:
        g, k = g.inverse(), -k
    out, base = IDENTITY, g
    while k:
        if k & 1:
            out = out @ base
        base = base @ base
        k >>= 1
    return out


# level one

def psl2z_decompose(g) -> list[tuple[str, int]]:
    """Tokens ('T', k) and ('S', 1) whose ordered product equals g in PSL_2(Z).
    Nearest-integer continued fraction of a/c, so the length is O(log max|entry|)."""
    a, b, c, d = normalize(g).entries()
    tokens: list[tuple[str, int]] = []
    while c:
        k = math.floor(Fraction(a, c) + Fraction(1, 2))
        a1, b1 = a - k * c, b - k * d
        if k:
            tokens.append(("T", k))
        tokens.append(("S", 1))
        # T^{-k} g = S (c, d; -a1, -b1)
        a, b, c, d = c, d, -a1, -b1
    n = a * b
    if n:
        tokens.append(("T", n))
    return tokens


def word_product(tokens: Iterable[tuple[str, int]]) -> UnimodularMatrix:
    out = IDENTITY
    for name, k in tokens:
        out = out @ (S if name == "S" else _power(T, k))
    return out


# cosets of Gamma_0(N) and Schreier generators

def p1_canonical(c: int, d: int, N: int) -> tuple[int, int]:
    """(0:1) or (1:v): scale by the unit making the first nonzero coordinate 1."""
    c, d = c % N, d % N
    if c == 0:
        return (0, 1)
    return (1, d * inverse_mod(c, N) % N)


@dataclass(frozen=True)
class Word:
    """Run-length word: (generator index, nonzero integer exponent) pairs."""
    letters: tuple[tuple[int, int], ...]

    def exponent_sums(self, size: int) -> list[int]:
        out = [0] * size
        for i, e in self.letters:
            out[i] += e
        return out

    def __len__(self):
        return len(self.letters)


@dataclass
class GeneratorSet:
    N: int
    generators: tuple[UnimodularMatrix, ...]
    coset_table: dict
    basis: tuple[UnimodularMatrix, ...]
    basis_raw: tuple[tuple[int, ...], ...]
    projection: tuple[tuple[Fraction, ...], ...]
    relations: tuple[tuple[int, ...], ...]
    rank: int
    degraded: bool
    integral: bool

    @property
    def genus(self) -> int:
        return (self.rank - 1) // 2

    @property
    def t_index(self) -> int:
        """Position of T in the basis."""
        return 0

    def fingerprints(self) -> list[str]:
        return [",".join(str(v) for v in g.entries()) for g in self.basis]

    def metadata(self) -> dict:
        return {"N": self.N, "rank": self.rank, "degraded": self.degraded, "integral": self.integral,
                "basis": self.fingerprints(), "basis_rule": "T, then lexicographically smallest (a,b,N,d) of full rank"}


def _edge_index(p: tuple[int, int], letter: str, N: int) -> int | None:
    """Schreier generator index of the edge p --letter--> p.letter, None when trivial.

    Transversal: r(0:1) = I, r(1:v) = S T^v. Index 0 is T itself, index 1 the cusp-0
    parabolic S T^N S^{-1}, and index 1 + v the S-edge leaving (1:v), v = 1..N-1."""
    if letter == "T":
        if p == (0, 1):
            return 0
        return 1 if p[1] == N - 1 else None
    if p == (0, 1) or p[1] == 0:
        return None
    return 1 + p[1]


def _act(p: tuple[int, int], letter: str, N: int) -> tuple[int, int]:
    c, d = p
    if letter == "T":
        return p1_canonical(c, c + d, N)
    return p1_canonical(d, -c, N)


def _rep(p: tuple[int, int]) -> UnimodularMatrix:
    if p == (0, 1):
        return IDENTITY
    return S @ _power(T, p[1])


def _schreier_matrices(N: int) -> list[UnimodularMatrix]:
    gens = [T, normalize(S @ _power(T, N) @ S.inverse())]
    for v in range(1, N):
        p = (1, v)
        q = _act(p, "S", N)
        gens.append(normalize(_rep(p) @ S @ _rep(q).inverse()))
    return gens


def _rewrite(tokens, N: int) -> Word:
    p = (0, 1)
    out: list[list[int]] = []

    def emit(i, e):
        if i is None or not e:
            return
        if out and out[-1][0] == i:
            out[-1][1] += e
            if not out[-1][1]:
                out.pop()
        else:
            out.append([i, e])

    for name, k in tokens:
        if name == "S":
            emit(_edge_index(p, "S", N), 1)
            p = _act(p, "S", N)
        elif p == (0, 1):
            emit(0, k)
        else:
            v = p[1]
            emit(1, (v + k) // N)
            p = (1, (v + k) % N)
    if p != (0, 1):
        raise ValueError(f"matrix is not in Gamma_0({N})")
    return Word(tuple((i, e) for i, e in out))


def _relators(N: int, size: int) -> list[list[int]]:
    rows = []
    cosets = [(0, 1)] + [(1, v) for v in range(N)]
    for rel in ("SS", "STSTST"):
        for p0 in cosets:
            row = [0] * size
            p = p0
            for letter in rel:
                i = _edge_index(p, letter, N)
                if i is not None:
                    row[i] += 1
                p = _act(p, letter, N)
            if any(row):
                rows.append(row)
    return rows


def sigma_matrix(a: int, N: int) -> UnimodularMatrix:
    """(a, -(a a* + 1)/N; N, -a*) with a* in [1, N) and a a* = -1 mod N."""
    s = (-inverse_mod(a, N)) % N
    return UnimodularMatrix(a, -(a * s + 1) // N, N, -s)


@lru_cache(maxsize=None)
def schreier_generators(N: int) -> GeneratorSet:
    if not _is_prime(N) or N < 3:
        raise ValueError(f"level must be a prime >= 3, got {N}")
    gens = _schreier_matrices(N)
    size = len(gens)
    rels = _relators(N, size)
    R = sympy.Matrix(rels).T if rels else sympy.zeros(size, 0)
    rank = size - R.rank()

    def raw(g):
        return _rewrite(psl2z_decompose(g), N).exponent_sums(size)

    basis, cols = [T], [raw(T)]
    current = sympy.Matrix.hstack(R, sympy.Matrix(cols[0])).rank()
    for a in range(1, N):
        if len(basis) == rank:
            break
        g = sigma_matrix(a, N)
        v = raw(g)
        trial = sympy.Matrix.hstack(R, *[sympy.Matrix(c) for c in cols + [v]]).rank()
        if trial > current:
            basis.append(g)
            cols.append(v)
            current = trial
    if len(basis) != rank:
        raise ArithmeticError(f"no basis of rank {rank} among the sigma matrices for N = {N}")

    # P [B | R'] = [I | 0] with R' a column basis of the relation span
    Rp = R.columnspace() if R.cols else []
    M = sympy.Matrix.hstack(*[sympy.Matrix(c) for c in cols], *Rp)
    P = sympy.Matrix.hstack(sympy.eye(rank), sympy.zeros(rank, M.cols - rank)) * M.inv()
    proj = tuple(tuple(Fraction(int(x.p), int(x.q)) for x in P.row(i)) for i in range(rank))
    integral = all(x.denominator == 1 for row in proj for x in row)
    coset_table = {(0, 1): IDENTITY, **{(1, v): _rep((1, v)) for v in range(N)}}
    return GeneratorSet(N, tuple(gens), coset_table, tuple(basis), tuple(tuple(c) for c in cols), proj,
                        tuple(tuple(r) for r in rels), rank, N % 12 != 11, integral)


def gamma0_decompose(g, gs: GeneratorSet) -> Word:
    """Word in the Schreier generators of gs; the product is checked against g."""
    g = normalize(g)
    if g.c % gs.N:
        raise ValueError(f"{g} is not in Gamma_0({gs.N})")
    word = _rewrite(psl2z_decompose(g), gs.N)
    if evaluate_word(word, gs) != g:
        raise ArithmeticError(f"decomposition of {g} does not multiply back")
    return word


def evaluate_word(word: Word, gs: GeneratorSet) -> UnimodularMatrix:
    out = IDENTITY
    for i, e in word.letters:
        out = out @ _power(gs.generators[i], e)
    return out


# homology vectors

@dataclass(frozen=True)
class HomologyVector:
    coordinates: tuple[Fraction, ...]
    N: int
    degraded: bool = False

    T_INDEX = 0

    def __add__(self, other: "HomologyVector") -> "HomologyVector":
        return HomologyVector(tuple(x + y for x, y in zip(self.coordinates, other.coordinates)),
                              self.N, self.degraded or other.degraded)

    def __neg__(self):
        return HomologyVector(tuple(-x for x in self.coordinates), self.N, self.degraded)

    @property
    def t_coordinate(self) -> Fraction:
        return self.coordinates[self.T_INDEX]

    def sup_norm(self) -> Fraction:
        return max(abs(x) for x in self.coordinates)

    def is_zero(self) -> bool:
        return not any(self.coordinates)

    def to_json_dict(self, gs: GeneratorSet) -> dict:
        return {fp: _frac_str(x) for fp, x in zip(gs.fingerprints(), self.coordinates)}


def _frac_str(x: Fraction):
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def zero_vector(gs: GeneratorSet) -> HomologyVector:
    return HomologyVector(tuple(Fraction(0) for _ in range(gs.rank)), gs.N, gs.degraded)


def homology_of(g, gs: GeneratorSet) -> HomologyVector:
    raw = gamma0_decompose(g, gs).exponent_sums(len(gs.generators))
    coords = tuple(sum((p * r for p, r in zip(row, raw) if r), Fraction(0)) for row in gs.projection)
    return HomologyVector(coords, gs.N, gs.degraded)


def homology_class(spec: EmbeddingSpec, a: int, N: int) -> HomologyVector:
    if spec.q % N:
        raise ValueError(f"level {N} does not divide q = {spec.q}")
    g, _ = embed(a, spec)
    return homology_of(g, schreier_generators(N))


def orbit_sum(H: Iterable[int], spec: EmbeddingSpec, N: int) -> HomologyVector:
    gs = schreier_generators(N)
    total = zero_vector(gs)
    for a in sorted(H):
        total = total + homology_class(spec, a, N)
    return total


def concentration_distance(v: HomologyVector) -> float:
    """sup-norm of v/|v| - e_T, with |.| the sup norm in the chosen basis."""
    if v.is_zero():
        raise ValueError("concentration distance of the zero vector")
    n = v.sup_norm()
    diff = [x / n - (1 if i == v.T_INDEX else 0) for i, x in enumerate(v.coordinates)]
    return float(max(abs(x) for x in diff))


def basis_pairings(gs: GeneratorSet) -> list[Fraction]:
    return [eisenstein_pairing(g, gs.N) for g in gs.basis]


def pairing_from_homology(v: HomologyVector, gs: GeneratorSet) -> Fraction:
    return sum((x * p for x, p in zip(v.coordinates, basis_pairings(gs))), Fraction(0))


# obstruction checker

@dataclass
class CorollaryVerdict:
    product: UnimodularMatrix
    vector: HomologyVector
    t_coordinate: Fraction
    pairing: Fraction
    verdict: str

    def to_json_dict(self, gs: GeneratorSet) -> dict:
        return {"product": list(self.product.entries()), "class": self.vector.to_json_dict(gs),
                "t_coordinate": _frac_str(self.t_coordinate), "pairing": _frac_str(self.pairing),
                "verdict": self.verdict}


def corollary_check(a_list: Sequence[int], q: int, N: int, gs: GeneratorSet | None = None,
                    spec: EmbeddingSpec | None = None, exponents: Sequence[int] | None = None) -> CorollaryVerdict:
    """Ordered product of psi(a_i)^{e_i}; a nonzero T-coordinate of its class means no conjugate
    of the product lies in the subgroup generated by the remaining basis generators.
    With spec=None the factors are (a, -(a a* + 1)/q; q, -a*)."""
    gs = gs or schreier_generators(N)
    if len(set(a_list)) != len(a_list):
        raise ValueError("the a_i must be distinct")
    if q % N:
        raise ValueError(f"level {N} does not divide q = {q}")
    exponents = list(exponents) if exponents is not None else [1] * len(a_list)
    prod = IDENTITY
    for a, e in zip(a_list, exponents):
        if math.gcd(a, q) != 1:
            raise ValueError(f"{a} is not a unit mod {q}")
        m = embed(a, spec)[0] if spec is not None else negative_inverse_matrix(a, q)
        prod = prod @ _power(m, e)
    if prod.c % N:
        raise ValueError("product is not in Gamma_0(N)")
    v = homology_of(prod, gs)
    verdict = "obstruction" if v.t_coordinate else "no obstruction"
    return CorollaryVerdict(prod, v, v.t_coordinate, eisenstein_pairing(prod, N) if N >= 3 else Fraction(0), verdict)


def concentration_csv(rows: Sequence[tuple]) -> str:
    lines = ["q,|H|,distance,sum_n_psi,sum_length"]
    for q, h, dist, npsi, length in rows:
        lines.append(f"{q},{h},{format(dist, '.17g')},{npsi},{format(length, '.17g')}")
    return "\n".join(lines) + "\n"
