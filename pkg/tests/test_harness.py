import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from qorbits.eisenstein import EtaSquaredLevel11, modular_symbol
from qorbits.harness import (DEFAULT_SUITE, ConfigError, ExperimentConfig, OrbitCache, cached_orbit, geodesic_integral,
                             haar_integral, haar_monte_carlo, observable, orbit_observable_integrals,
                             recompute_ratios, reduce_level1, reduce_tangent, run_experiment)
from qorbits.torusstats import smooth_step
from qorbits.modgroup import EmbeddingSpec, UnimodularMatrix, embed, geodesic_coords, geodesic_data, orbit


def test_reduce_level1_examples():
    w, M = reduce_level1(1j)
    assert w == 1j and M == UnimodularMatrix(1, 0, 0, 1)
    w, M = reduce_level1(5 + 1j)
    assert abs(w - 1j) < 1e-15 and abs(M.act(5 + 1j) - w) < 1e-15
    w, M = reduce_level1(0.5j)
    assert abs(w - 2j) < 1e-15


def test_reduce_level1_lands_in_domain():
    rng = np.random.default_rng(0)
    for _ in range(500):
        z = complex(rng.uniform(-20, 20), 10 ** rng.uniform(-4, 1))
        w, M = reduce_level1(z)
        assert abs(w.real) <= 0.5 + 1e-12 and abs(w) >= 1 - 1e-12
        assert abs(M.act(z) - w) < 1e-8 * max(1, abs(w))
    with pytest.raises(ValueError):
        reduce_level1(1 - 1j)


def test_reduce_tangent_matches_matrix_action():
    rng = np.random.default_rng(1)
    x = rng.uniform(-3, 3, 200)
    y = 10 ** rng.uniform(-3, 0.5, 200)
    th = rng.uniform(0, np.pi, 200)
    X, Y, TH = reduce_tangent(x, y, th)
    for i in range(200):
        w, M = reduce_level1(complex(x[i], y[i]))
        assert abs(complex(X[i], Y[i]) - w) < 1e-9 * max(1, abs(w))
        # angle rotates by -arg(c z + d), defined mod pi on the projective bundle
        want = np.mod(th[i] - np.angle(M.c * complex(x[i], y[i]) + M.d), np.pi)
        assert min(abs(TH[i] - want), np.pi - abs(TH[i] - want)) < 1e-8


def test_haar_constant_and_angular_modes():
    one = haar_integral(lambda x, y, t: np.ones_like(t))
    assert abs(one.value - 1) < 1e-8 and one.tail_bound == 0
    for k in (2, 4, 6):
        assert abs(haar_integral(lambda x, y, t, k=k: np.cos(k * t)).value) < 1e-10


@pytest.mark.parametrize("name", ["height_gauss", "height_exp", "cusp_bump", "cusp_bump_cos2pix"])
def test_haar_against_monte_carlo(name):
    obs = observable(name)
    exact = haar_integral(obs).value
    mc = haar_monte_carlo(obs, 4_000_000, seed=2024)
    assert abs(exact - mc) < 1e-3


def test_haar_smoothed_band():
    # a smoothed band in y inside (1, inf) covers full x-width, so the Haar mass is a 1D integral
    band = lambda x, y, t: smooth_step(np.asarray(y) - 2.0, 8)
    got = haar_integral(band).value
    ref, _ = integrate.quad(lambda y: smooth_step(y - 2.0, 8) / y ** 2, 1.8, 3.2, epsabs=1e-13)
    assert abs(got - 3 / math.pi * ref) < 1e-8
    assert abs(got - haar_monte_carlo(band, 4_000_000, seed=7)) < 1e-3


def test_observable_lookup():
    assert set(DEFAULT_SUITE) == {"height_gauss", "height_exp", "cusp_bump", "cusp_bump_cos4theta",
                                  "cusp_bump_cos2pix"}
    with pytest.raises(ConfigError):
        observable("nope")


def test_geodesic_integral_of_one_is_length():
    for a, q in ((2, 5), (3, 7), (10, 101)):
        g, _ = embed(a, EmbeddingSpec(q))
        L = geodesic_data(g).length
        assert abs(geodesic_integral(g, lambda x, y, t: np.ones_like(x)) - L) < 1e-8
        assert abs(L - 2 * math.log((abs(g.trace) + math.sqrt(g.trace ** 2 - 4)) / 2)) < 1e-12


def test_geodesic_integral_orientation_symmetry():
    g, _ = embed(7, EmbeddingSpec(31))
    obs = observable("height_gauss")
    v1 = geodesic_integral(g, obs, reduce=True)
    v2 = geodesic_integral(g.inverse(), obs, reduce=True)
    assert abs(v1 - v2) < 1e-7


def test_geodesic_integral_period_oracle():
    f = EtaSquaredLevel11()
    g, _ = embed(2, EmbeddingSpec(33))
    val = geodesic_integral(g, lambda x, y, t: y * f.holomorphic(x + 1j * y) * np.exp(2j * t))
    assert abs(val - modular_symbol(f, g) / (2 * math.pi)) < 1e-5


def test_panel_quadrature_matches_adaptive():
    # the default panel rule has a ~1e-5 error budget from kinks at the domain boundary;
    # refined panels converge to the adaptive value
    entries = orbit(EmbeddingSpec(53), range(1, 53))
    obs = [observable(n) for n in DEFAULT_SUITE]
    fast = orbit_observable_integrals(entries, obs)
    fine = orbit_observable_integrals(entries, obs, panel=0.01, nodes=12)
    for i in (0, 7, 25):
        for k, o in enumerate(obs):
            slow = geodesic_integral(entries[i].matrix, o, reduce=True, tol=1e-11).real
            assert abs(fine[i, k] - slow) < 1e-7
            assert abs(fast[i, k] - slow) < 1e-4


def test_config_validation():
    with pytest.raises(ConfigError, match="q"):
        ExperimentConfig("orbit", ()).validate()
    with pytest.raises(ConfigError, match="level"):
        ExperimentConfig("orbit", (10,), N=3).validate()
    with pytest.raises(ConfigError, match="prime"):
        ExperimentConfig("homology", (44,), N=4).validate()
    with pytest.raises(ConfigError, match="tol"):
        ExperimentConfig("orbit", (7,), tol=0).validate()
    with pytest.raises(ConfigError, match="variant"):
        ExperimentConfig("orbit", (7,), variant="bogus").validate()
    with pytest.raises(ConfigError, match="unit"):
        ExperimentConfig("kloosterman", (10,), subgroup=(2,)).validate()
    with pytest.raises(ConfigError, match="kind"):
        ExperimentConfig("plot", (7,)).validate()


def test_report_reproducible_and_thread_independent():
    cfg = dict(kind="equidist", qs=(101, 103, 107))
    a = run_experiment(ExperimentConfig(**cfg))
    b = run_experiment(ExperimentConfig(**cfg, threads=3))
    assert a.to_json(timing=False) == b.to_json(timing=False)
    assert a.digest == b.digest
    assert "timing" not in json.loads(a.to_json(timing=False))


def test_aggregates_match_records():
    rep = run_experiment(ExperimentConfig("equidist", (211,)))
    r = rep.results[0]
    again = recompute_ratios(r)
    assert all(abs(again[n] - r["ratios"][n]) <= 1e-12 for n in again)
    assert abs(r["sum_length"] - math.fsum(x["length"] for x in r["records"])) < 1e-9


def test_empty_observables_leave_length_statistics():
    r = run_experiment(ExperimentConfig("equidist", (31,), observables=())).results[0]
    assert r["ratios"] == {} and r["sum_length"] > 0 and r["max_deviation"] == 0


def test_cache_roundtrip_and_corruption(tmp_path):
    cfg = ExperimentConfig("orbit", (97,), cache=str(tmp_path))
    cache = OrbitCache(cfg.cache)
    first = cached_orbit(cfg, 97, cache)
    files = list(Path(tmp_path).rglob("*.json"))
    assert len(files) == 1
    again = cached_orbit(cfg, 97, cache)
    assert [(e.a, e.matrix) for e in again] == [(e.a, e.matrix) for e in first]
    blob = json.loads(files[0].read_text())
    blob["payload"][0][1] += 1
    files[0].write_text(json.dumps(blob))
    key = cache.key(97, 1, "minimal", cfg.coset_spec(97).fingerprint())
    assert cache.load(key) is None
    rebuilt = cached_orbit(cfg, 97, cache)
    assert [(e.a, e.matrix) for e in rebuilt] == [(e.a, e.matrix) for e in first]


def test_length_lower_bound_grid():
    for q in (101, 199, 307, 401, 503):
        r = run_experiment(ExperimentConfig("orbit", (q,))).results[0]
        assert r["sum_length"] >= 0.3 * r["size"] * math.log(q)


def test_eps_regularization_envelope():
    eps = 0.1
    worst = 0.0
    for q in (101, 211, 307, 401):
        base = run_experiment(ExperimentConfig("equidist", (q,))).results[0]
        reg = run_experiment(ExperimentConfig("equidist", (q,), variant=f"epsreg:{eps}")).results[0]
        H = base["size"]
        envelope = q ** -eps + q ** (0.5 + 3 * eps) / H ** 0.75
        for n in base["ratios"]:
            worst = max(worst, abs(base["ratios"][n] - reg["ratios"][n]) / envelope)
    assert worst <= 10


def test_other_kinds_run():
    for kind, kw in (("kloosterman", dict(qs=(35,), m_values=(1, 2))), ("birch-stevens", dict(qs=(35,), N=5)),
                     ("homology", dict(qs=(55,), N=11, subgroup="squares")), ("torus", dict(qs=(101,)))):
        rep = run_experiment(ExperimentConfig(kind, **kw))
        assert rep.results and rep.csv
    hom = run_experiment(ExperimentConfig("homology", (55,), N=11, subgroup="squares")).results[0]
    assert hom["basis"]["rank"] == 3 and not hom["degraded"]
