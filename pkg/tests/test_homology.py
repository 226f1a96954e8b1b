import math
import random
from fractions import Fraction

import pytest

from qorbits.charsums import CosetSpec
from qorbits.eisenstein import eisenstein_pairing
from qorbits.homology import (HomologyVector, Word, basis_pairings, concentration_csv, concentration_distance,
                              corollary_check, evaluate_word, gamma0_decompose, homology_class, homology_of,
                              orbit_sum, p1_canonical, pairing_from_homology, psl2z_decompose, schreier_generators,
                              sigma_matrix, word_product, zero_vector)
from qorbits.modgroup import EmbeddingSpec, S, T, UnimodularMatrix, embed, normalize

GS11 = schreier_generators(11)


def random_gamma0(rng, N, bound):
    while True:
        c = N * rng.randrange(1, bound // N + 1)
        d = rng.randrange(-bound, bound + 1)
        if math.gcd(c, d) == 1:
            a = pow(d, -1, c) + c * rng.randrange(-3, 4)
            return normalize((a, (a * d - 1) // c, c, d))


def test_psl2z_examples():
    assert psl2z_decompose(T) == [("T", 1)]
    assert psl2z_decompose(S) == [("S", 1)]
    g = UnimodularMatrix(2, 1, 5, 3)
    assert word_product(psl2z_decompose(g)) == g


def test_psl2z_word_length_is_logarithmic():
    rng = random.Random(1)
    for _ in range(200):
        g = random_gamma0(rng, 1, 10 ** 12)
        w = psl2z_decompose(g)
        assert word_product(w) == g
        assert len(w) <= 4 * math.log2(max(abs(v) for v in g.entries()) + 2) + 4


def test_p1_canonical():
    assert p1_canonical(0, 5, 11) == (0, 1)
    assert p1_canonical(3, 6, 11) == (1, 2)
    assert p1_canonical(-1, 4, 7) == (1, 3)


def test_generator_set_level_11():
    assert len(GS11.coset_table) == 12
    assert all(g.c % 11 == 0 for g in GS11.generators)
    assert GS11.rank == 3 and GS11.genus == 1 and not GS11.degraded
    assert GS11.basis[0] == T
    assert all(b.c == 11 for b in GS11.basis[1:])
    assert GS11.metadata()["basis"][0] == "1,1,0,1"


@pytest.mark.parametrize("N,rank", [(23, 5), (47, 9)])
def test_generator_set_rank_equals_2g_plus_1(N, rank):
    gs = schreier_generators(N)
    assert gs.rank == rank and not gs.degraded


def test_degraded_levels_flagged():
    for N in (5, 7, 13):
        assert schreier_generators(N).degraded
    with pytest.raises(ValueError):
        schreier_generators(9)


def test_sigma_matrix_shape():
    for N in (11, 23):
        for a in range(1, N):
            s = sigma_matrix(a, N)
            assert s.c == N and s.a == a and (a * -s.d) % N == N - 1 % N


def test_each_generator_decomposes_to_itself():
    for i, g in enumerate(GS11.generators):
        if g == UnimodularMatrix(1, 0, 0, 1):
            continue
        w = gamma0_decompose(g, GS11)
        assert evaluate_word(w, GS11) == g


def test_multiply_back_random_large_entries():
    rng = random.Random(14)
    for _ in range(500):
        g = random_gamma0(rng, 11, 10 ** 6)
        assert evaluate_word(gamma0_decompose(g, GS11), GS11) == g


def test_decompose_rejects_non_members():
    with pytest.raises(ValueError):
        gamma0_decompose(UnimodularMatrix(2, 1, 5, 3), GS11)


def test_embedded_matrix_decomposes():
    g, _ = embed(2, EmbeddingSpec(55))
    assert evaluate_word(gamma0_decompose(g, GS11), GS11) == g


def test_homomorphism_and_conjugation_invariance():
    rng = random.Random(15)
    for _ in range(100):
        g, h = random_gamma0(rng, 11, 5000), random_gamma0(rng, 11, 5000)
        assert homology_of(g @ h, GS11) == homology_of(g, GS11) + homology_of(h, GS11)
        assert homology_of(h @ g @ h.inverse(), GS11) == homology_of(g, GS11)
        assert homology_of(g.inverse(), GS11) == -homology_of(g, GS11)


def test_torsion_free_coordinates_are_integral():
    rng = random.Random(16)
    assert GS11.integral
    for _ in range(50):
        v = homology_of(random_gamma0(rng, 11, 1000), GS11)
        assert all(x.denominator == 1 for x in v.coordinates)


def test_basis_classes_are_unit_vectors():
    for i, b in enumerate(GS11.basis):
        v = homology_of(b, GS11)
        assert v.coordinates == tuple(Fraction(int(j == i)) for j in range(GS11.rank))
    assert homology_of(T, GS11).t_coordinate == 1


def test_pairing_through_homology():
    rng = random.Random(17)
    assert basis_pairings(GS11)[0] == 1
    for _ in range(100):
        g = random_gamma0(rng, 11, 2000)
        assert pairing_from_homology(homology_of(g, GS11), GS11) == eisenstein_pairing(g, 11)


def test_orbit_sum_is_sum_of_classes():
    spec = EmbeddingSpec(55)
    H = CosetSpec.squares(55).elements()
    total = orbit_sum(H, spec, 11)
    acc = zero_vector(GS11)
    for a in H:
        acc = acc + homology_class(spec, a, 11)
    assert total == acc
    want = sum(eisenstein_pairing(embed(a, spec)[0], 11) for a in H)
    assert pairing_from_homology(total, GS11) == want
    with pytest.raises(ValueError):
        homology_class(EmbeddingSpec(35), 2, 11)


def test_concentration_distance_examples():
    e = homology_of(T, GS11)
    three = e + e + e
    assert concentration_distance(three) == 0
    assert concentration_distance(-e) == 2
    with pytest.raises(ValueError):
        concentration_distance(zero_vector(GS11))
    v = HomologyVector((Fraction(2), Fraction(-1), Fraction(0)), 11)
    assert concentration_distance(v) == 0.5


def test_corollary_check():
    v = corollary_check([1], 55, 11)
    assert evaluate_word(gamma0_decompose(v.product, GS11), GS11) == v.product
    assert v.verdict == ("obstruction" if v.t_coordinate else "no obstruction")
    back = corollary_check([2, 3], 55, 11, exponents=[1, -1])
    assert back.product != UnimodularMatrix(1, 0, 0, 1)
    same = corollary_check([2], 55, 11, exponents=[0])
    assert same.vector.is_zero() and same.verdict == "no obstruction"
    with pytest.raises(ValueError):
        corollary_check([2, 2], 55, 11)
    with pytest.raises(ValueError):
        corollary_check([11], 55, 11)


def test_corollary_check_inverse_pair_cancels():
    g = corollary_check([2], 55, 11).product
    spec = EmbeddingSpec(55)
    prod = corollary_check([2, 3], 55, 11, spec=spec, exponents=[1, 1]).product
    assert prod == embed(2, spec)[0] @ embed(3, spec)[0]
    assert homology_of(g @ g.inverse(), GS11).is_zero()


def test_word_exponent_sums():
    w = Word(((0, 3), (2, -1), (0, -1)))
    assert w.exponent_sums(3) == [2, 0, -1] and len(w) == 3


def test_concentration_csv():
    text = concentration_csv([(143, 60, 0.25, -1, 123.5)])
    assert text.splitlines() == ["q,|H|,distance,sum_n_psi,sum_length", "143,60,0.25,-1,123.5"]
