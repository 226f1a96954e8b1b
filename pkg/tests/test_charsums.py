import cmath
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qorbits.charsums import (CosetSpec, DirichletCharacter, all_subgroups, characters, conductor_by_divisors,
                              coset_kloosterman, enumerate_subgroup, euler_phi, gauss_sum, kloosterman,
                              kloosterman_csv_rows, kloosterman_table, principal_character, twisted_ramanujan_expansion,
                              twisted_ramanujan_sum, unit_group)


def e(x):
    return cmath.exp(2j * math.pi * x)


def brute_kloosterman(m, n, q, chi=None):
    return sum((chi(a) if chi else 1) * e((m * a + n * pow(a, -1, q)) / q)
               for a in range(1, q) if math.gcd(a, q) == 1)


def quadratic(q):
    """The real nonprincipal character mod an odd prime q."""
    return next(c for c in characters(q) if c.exponents == ((q - 1) // 2,))


def test_unit_group_examples():
    G = unit_group(5)
    assert G.orders == (4,) and pow(G.generators[0], 2, 5) != 1
    assert sorted(unit_group(8).orders) == [2, 2]
    assert unit_group(2).orders in ((), (1,))


@pytest.mark.parametrize("q", list(range(1, 120)) + [256, 1000, 1024, 2310, 4096, 9999])
def test_unit_group_generates(q):
    G = unit_group(q)
    assert math.prod(G.orders) == euler_phi(q)
    span = {1 % q}
    for g, o in zip(G.generators, G.orders):
        span = {x * pow(g, k, q) % q for x in span for k in range(o)}
    assert span == {a % q for a in range(q) if math.gcd(a, q) == 1}


def test_conductor_examples():
    assert principal_character(12).conductor == 1
    assert quadratic(5).conductor == 5
    chi10 = next(c for c in characters(10) if all(abs(c(a) - quadratic(5)(a)) < 1e-12 for a in (1, 3, 7, 9)))
    assert chi10.conductor == 5
    assert chi10.primitive() == quadratic(5)


@pytest.mark.parametrize("q", range(1, 130))
def test_conductor_matches_divisor_search(q):
    for chi in characters(q):
        assert chi.conductor == conductor_by_divisors(chi)
        star = chi.primitive()
        assert star.q == chi.conductor and star.is_primitive
        for a in range(q):
            if math.gcd(a, q) == 1:
                assert star.angle(a) == chi.angle(a)


def test_character_count_and_orthogonality():
    for q in range(1, 201):
        chars = characters(q)
        assert len(chars) == euler_phi(q)
        # exact angle check: sum_chi chi(a) = phi(q) [a == 1] via the numerator table
        total = np.zeros(q, dtype=complex)
        for chi in chars:
            total += chi.values()
        want = np.zeros(q)
        want[1 % q] = euler_phi(q)
        assert np.allclose(total, want, atol=1e-8)


def test_multiplicativity_exact():
    rng = random.Random(7)
    for _ in range(10_000):
        q = rng.randrange(2, 400)
        chi = rng.choice(characters(q))
        a, b = rng.randrange(q), rng.randrange(q)
        if math.gcd(a * b, q) != 1:
            assert chi.angle(a * b) is None
            continue
        assert chi.angle(a * b) == (chi.angle(a) + chi.angle(b)) % 1


def test_parity():
    for q in (3, 4, 5, 7, 8, 12, 15):
        for chi in characters(q):
            assert chi(q - 1) == pytest.approx(chi.parity)


def test_gauss_sum_examples():
    assert gauss_sum(quadratic(5)) == pytest.approx(math.sqrt(5), abs=1e-12)
    assert gauss_sum(quadratic(3)) == pytest.approx(1j * math.sqrt(3), abs=1e-12)


def test_gauss_sum_modulus_primitive():
    for m in range(1, 301):
        for chi in characters(m):
            if chi.is_primitive:
                assert abs(abs(gauss_sum(chi)) - math.sqrt(m)) < 1e-9


def test_kloosterman_examples():
    assert kloosterman(1, 1, 5) == pytest.approx(0.3819660112501051, abs=1e-12)
    assert kloosterman(1, 1, 5).real == pytest.approx(2 + 2 * math.cos(4 * math.pi / 5))
    assert kloosterman(1, 0, 5) == pytest.approx(-1)
    assert kloosterman(1, 1, 5).imag == 0.0


def test_weil_bound_all_primes_below_500():
    from sympy import primerange
    for p in primerange(2, 500):
        K = kloosterman_table(p)
        K[0, 0] = 0  # (m, n, p) = p excluded
        assert np.max(np.abs(K)) <= 2 * math.sqrt(p) + 1e-9


@pytest.mark.parametrize("q", [2, 7, 12, 25, 30, 64, 77])
def test_kloosterman_table_matches_loop(q):
    K = kloosterman_table(q)
    for m in range(q):
        for n in range(q):
            assert abs(K[m, n] - brute_kloosterman(m, n, q)) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 100), st.integers(-50, 50), st.integers(-50, 50), st.data())
def test_kloosterman_symmetries(q, m, n, data):
    s = kloosterman(m, n, q)
    assert abs(s - kloosterman(n, m, q)) < 1e-9
    assert abs(s - brute_kloosterman(m, n, q)) < 1e-9
    chi = data.draw(st.sampled_from(characters(q)))
    t = kloosterman(m, n, q, chi)
    assert abs(t - brute_kloosterman(m, n, q, chi)) < 1e-9
    # swapping a and its inverse conjugates the twist
    assert abs(kloosterman(n, m, q, chi.conj()) - t) < 1e-9
    assert abs(np.conj(kloosterman(-m, -n, q, chi.conj())) - t) < 1e-9


def test_subgroup_examples():
    assert enumerate_subgroup(CosetSpec.squares(7)) == [1, 2, 4]
    assert enumerate_subgroup(CosetSpec(5, (-1,))) == [1, 4]
    assert enumerate_subgroup(CosetSpec(5, (2,))) == [1, 2, 3, 4]
    with pytest.raises(ValueError):
        CosetSpec(10, (2,))


def test_coset_kloosterman_examples():
    full = coset_kloosterman(CosetSpec.full(5), 1, 1)
    assert abs(full.direct - kloosterman(1, 1, 5)) < 1e-12
    one = coset_kloosterman(CosetSpec(5, ()), 1, 1)
    assert abs(one.direct - e(2 / 5)) < 1e-12 and one.discrepancy < 1e-12


@pytest.mark.parametrize("q", [7, 8, 12, 15, 21, 36, 40])
def test_coset_paths_agree_for_every_subgroup(q):
    for gens in all_subgroups(q):
        for c in (1, q - 1):
            for m, n in ((1, 1), (2, 3), (0, 1)):
                r = coset_kloosterman(CosetSpec(q, gens, c), m, n, check=None)
                assert r.discrepancy < 1e-9
                H = enumerate_subgroup(CosetSpec(q, gens))
                want = sum(e((m * c * h + n * pow(c * h, -1, q)) / q) for h in H)
                assert abs(r.direct - want) < 1e-9


def test_all_subgroups_counts():
    # cyclic group of order n has d(n) subgroups; (Z/8)^x = C2 x C2 has 5
    assert len(all_subgroups(7)) == 4
    assert len(all_subgroups(11)) == 4
    assert len(all_subgroups(8)) == 5


def test_coset_bound_trend_squares():
    from sympy import primerange
    ratios = []
    for q in list(primerange(100, 2000))[::10]:
        spec = CosetSpec.squares(q)
        H = len(enumerate_subgroup(spec))
        s = abs(coset_kloosterman(spec, 1, 1, check=1e-8).direct)
        ratios.append(s / (math.sqrt(q) * H ** 0.25))
    assert max(ratios) < 2.0


def test_twisted_ramanujan_expansion():
    for q in range(1, 101):
        for chi in characters(q):
            for k in range(1, 2 * q + 1, max(1, q // 7)):
                assert abs(twisted_ramanujan_sum(chi, k) - twisted_ramanujan_expansion(chi, k)) < 1e-9


def test_csv_rows():
    text = kloosterman_csv_rows([(5, 1, 1, "full", 1, complex(0.5, -0.25))])
    assert text.splitlines() == ["q,m,n,subgroup-id,coset-rep,real,imag", "5,1,1,full,1,0.5,-0.25"]
