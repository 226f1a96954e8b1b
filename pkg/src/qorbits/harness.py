"""Experiment orchestration: fundamental-domain reduction, integrals along
geodesics and against Haar measure, cached orbit construction and reports."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import charsums, eisenstein, homology, modgroup, torusstats
from .modgroup import EmbeddingSpec, OrbitEntry, UnimodularMatrix, geodesic_data, parse_variant

log = logging.getLogger(__name__)

KINDS = ("orbit", "equidist", "kloosterman", "birch-stevens", "homology", "torus")


class ConfigError(ValueError):
    pass


class ConsistencyError(ArithmeticError):
    pass


# level-one reduction

def reduce_level1(z: complex) -> tuple[complex, UnimodularMatrix]:
    """(w, M) with w = M z in the standard fundamental domain |x| <= 1/2, |w| >= 1."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("point not in the upper half-plane")
    M = modgroup.IDENTITY
    for _ in range(10_000):
        n = math.floor(z.real + 0.5)
        if n:
            z -= n
            M = _tpow(-n) @ M
        if abs(z) < 1 - 1e-15:
            z = -1 / z
            M = modgroup.S @ M
        else:
            return z, M
    raise ArithmeticError("reduction did not terminate")


def _tpow(n: int) -> UnimodularMatrix:
    return UnimodularMatrix(1, n, 0, 1)


def reduce_tangent(x, y, theta, max_iter: int = 200):
    """Vectorized reduction of unit tangent vectors (x, y, theta) to the level-1 domain."""
    x = np.array(x, dtype=float, copy=True)
    y = np.array(y, dtype=float, copy=True)
    theta = np.array(theta, dtype=float, copy=True)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        xs = x[idx] - np.floor(x[idx] + 0.5)
        ys = y[idx]
        r2 = xs * xs + ys * ys
        inv = r2 < 1 - 1e-15
        # z -> -1/z, theta -> theta - arg z
        th = theta[idx]
        th[inv] -= np.arctan2(ys[inv], xs[inv])
        xs[inv], ys[inv] = -xs[inv] / r2[inv], ys[inv] / r2[inv]
        x[idx], y[idx], theta[idx] = xs, ys, th
        active[idx[~inv]] = False
    else:
        raise ArithmeticError("vectorized reduction did not terminate")
    return x, y, np.mod(theta, np.pi)


# observables on the unit tangent bundle of the level-1 surface

@dataclass(frozen=True)
class Observable:
    name: str
    func: Callable  # (x, y, theta) arrays -> array, on reduced coordinates
    angular: bool = True  # whether theta enters

    def __call__(self, x, y, theta):
        return self.func(x, y, theta)


def _cusp_bump(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    m = (y > 1.2) & (y < 3.0)
    out[m] = np.exp(-0.5 / ((y[m] - 1.2) * (3.0 - y[m])))
    return out


OBSERVABLES = {
    "height_gauss": Observable("height_gauss", lambda x, y, t: np.exp(-(y - 1.0) ** 2), False),
    "height_exp": Observable("height_exp", lambda x, y, t: np.exp(-y), False),
    "cusp_bump": Observable("cusp_bump", lambda x, y, t: _cusp_bump(y), False),
    # orbits are closed under inversion, which turns theta into theta + pi/2, so odd
    # multiples of 2 theta average to zero on every orbit; 4 theta is the first informative mode
    "cusp_bump_cos4theta": Observable("cusp_bump_cos4theta", lambda x, y, t: _cusp_bump(y) * np.cos(4 * t)),
    "cusp_bump_cos2pix": Observable("cusp_bump_cos2pix", lambda x, y, t: _cusp_bump(y) * np.cos(2 * np.pi * x), False),
}
DEFAULT_SUITE = tuple(OBSERVABLES)


def observable(name: str) -> Observable:
    try:
        return OBSERVABLES[name]
    except KeyError:
        raise ConfigError(f"unknown observable {name!r}; choose from {', '.join(OBSERVABLES)}") from None


@dataclass(frozen=True)
class HaarValue:
    value: float
    error: float
    tail_bound: float


def haar_integral(obs, tol: float = 1e-10, angles: int = 16) -> HaarValue:
    """(3/pi) int_F <obs>_theta dx dy / y^2 over the level-1 domain. With u = 1/y the
    domain becomes the bounded region 0 <= u <= (1 - x^2)^{-1/2}, so nothing is truncated
    and the reported tail bound is 0. The angle average is the trapezoid rule, exact for
    trigonometric polynomials of degree < angles."""
    if isinstance(obs, Observable):
        f, angular = obs.func, obs.angular
    else:
        f, angular = obs, True
    th = np.arange(angles) * (np.pi / angles) if angular else np.zeros(1)

    def inner(u, x):
        if u <= 0:
            return 0.0
        vals = np.asarray(f(np.full(th.shape, x), np.full(th.shape, 1.0 / u), th), dtype=complex)
        return float(np.mean(vals).real)

    val, err = integrate.dblquad(inner, -0.5, 0.5, lambda x: 0.0, lambda x: 1.0 / math.sqrt(1 - x * x),
                                 epsabs=tol, epsrel=tol)
    if not math.isfinite(val):
        raise ValueError("observable is not integrable against Haar measure")
    return HaarValue(3.0 / math.pi * val, 3.0 / math.pi * err, 0.0)


def haar_monte_carlo(obs, samples: int, seed: int) -> float:
    """Monte Carlo oracle for haar_integral; the only randomized routine."""
    rng = np.random.default_rng(seed)
    f = obs.func if isinstance(obs, Observable) else obs
    umax = 2 / math.sqrt(3)
    x = rng.uniform(-0.5, 0.5, samples)
    u = rng.uniform(0.0, umax, samples)
    th = rng.uniform(0.0, math.pi, samples)
    keep = (u * u * (1 - x * x) <= 1) & (u > 0)
    return float(np.mean(np.asarray(f(x[keep], 1 / u[keep], th[keep])).real))


# integrals along closed geodesics

def geodesic_integral(g: UnimodularMatrix, obs: Callable, reduce: bool = False, tol: float = 1e-8) -> complex:
    """int_{-L/2}^{L/2} obs(x_t, y_t, theta_t) dt by adaptive Gauss-Kronrod; obs sees reduced
    coordinates when reduce is set."""
    data = geodesic_data(g)
    L = data.length

    def point(t):
        x, y, th = modgroup.geodesic_coords(g, np.atleast_1d(t))
        if reduce:
            x, y, th = reduce_tangent(x, y, th)
        return complex(np.asarray(obs(x, y, th))[0])

    step = min(0.01, L / 1000)
    pieces = max(1, int(math.ceil(L / max(step * 50, 1e-3))))
    edges = np.linspace(-L / 2, L / 2, min(pieces, 200) + 1)
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        re, _ = integrate.quad(lambda t: point(t).real, lo, hi, epsabs=tol / len(edges), limit=200)
        im, _ = integrate.quad(lambda t: point(t).imag, lo, hi, epsabs=tol / len(edges), limit=200)
        total += complex(re, im)
    return total


def _gauss_panels(lengths: np.ndarray, panel: float, nodes: int):
    """Composite Gauss-Legendre nodes on [-L/2, L/2] for every length; returns owner, t, w."""
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    counts = np.maximum(1, np.ceil(lengths / panel).astype(np.int64))
    owner_panel = np.repeat(np.arange(lengths.size), counts)
    local = np.arange(owner_panel.size) - np.repeat(np.cumsum(counts) - counts, counts)
    h = lengths[owner_panel] / counts[owner_panel]
    lo = -lengths[owner_panel] / 2 + local * h
    t = (lo[:, None] + h[:, None] * (gx[None, :] + 1) / 2).ravel()
    w = (h[:, None] * gw[None, :] / 2).ravel()
    owner = np.repeat(owner_panel, nodes)
    return owner, t, w


def orbit_observable_integrals(entries: Sequence[OrbitEntry], observables: Sequence[Observable],
                               panel: float = 0.125, nodes: int = 8) -> np.ndarray:
    """Per-geodesic integrals of each observable over the reduced closed geodesic, shape (len(entries), k)."""
    if not entries or not observables:
        return np.zeros((len(entries), len(observables)))
    L = np.array([e.data.length for e in entries])
    owner, t, w = _gauss_panels(L, panel, nodes)
    center = np.array([e.data.center for e in entries])[owner]
    r = np.array([e.data.radius for e in entries])[owner]
    eps = np.array([e.data.epsilon for e in entries], dtype=float)[owner]
    x = center + eps * r * np.tanh(t)
    y = r / np.cosh(t)
    th = np.mod(np.arctan2(-np.exp(t), eps), np.pi)
    x, y, th = reduce_tangent(x, y, th)
    out = np.zeros((len(entries), len(observables)))
    for k, obs in enumerate(observables):
        vals = np.asarray(obs(x, y, th), dtype=float) * w
        out[:, k] = np.bincount(owner, weights=vals, minlength=len(entries))
    return out


# configuration

@dataclass
class ExperimentConfig:
    kind: str
    qs: tuple[int, ...]
    N: int = 1
    variant: str = "minimal"
    subgroup: tuple[int, ...] | str | None = None
    coset: int = 1
    observables: tuple[str, ...] = DEFAULT_SUITE
    tol: float = 1e-8
    out: str | None = None
    format: str = "json"
    cache: str | None = None
    threads: int = 1
    seed: int | None = None
    m_values: tuple[int, ...] = (1,)
    n_values: tuple[int, ...] = (1,)
    timing: bool = True

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind: unknown experiment {self.kind!r}")
        if not self.qs:
            raise ConfigError("q: no moduli given (use --q or --q-range)")
        for q in self.qs:
            if q < 2:
                raise ConfigError(f"q: modulus {q} must be >= 2")
            if q > modgroup.Q_LIMIT:
                raise ConfigError(f"q: modulus {q} exceeds 2^40")
        if self.N < 1:
            raise ConfigError(f"level: {self.N} must be positive")
        needs_level = self.kind in ("orbit", "equidist", "birch-stevens", "homology")
        if needs_level:
            bad = [q for q in self.qs if q % self.N]
            if bad:
                raise ConfigError(f"q: {bad} not divisible by level {self.N}")
        if self.kind in ("birch-stevens", "homology") and (self.N < 3 or not homology._is_prime(self.N)):
            raise ConfigError(f"level: {self.kind} needs a prime level >= 3, got {self.N}")
        if not self.tol > 0:
            raise ConfigError(f"tol: must be positive, got {self.tol}")
        if self.threads < 1:
            raise ConfigError(f"threads: must be >= 1, got {self.threads}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format: {self.format!r} is not json or csv")
        try:
            parse_variant(self.variant)
        except ValueError as exc:
            raise ConfigError(f"variant: {exc}") from None
        for name in self.observables:
            observable(name)
        if isinstance(self.subgroup, str) and self.subgroup != "squares":
            raise ConfigError(f"subgroup: {self.subgroup!r} is not a generator list or 'squares'")
        for q in self.qs:
            gens = self.subgroup if isinstance(self.subgroup, tuple) else ()
            for g in gens + (self.coset,):
                if math.gcd(g, q) != 1:
                    raise ConfigError(f"subgroup/coset: {g} is not a unit mod {q}")
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("cache")
        d.pop("threads")
        d.pop("timing")
        d["qs"] = list(self.qs)
        return d

    def coset_spec(self, q: int) -> charsums.CosetSpec:
        if self.subgroup == "squares":
            return charsums.CosetSpec(q, charsums.CosetSpec.squares(q).subgroup_generators, self.coset % q)
        gens = tuple(self.subgroup) if self.subgroup else charsums.unit_group(q).generators
        return charsums.CosetSpec(q, tuple(g % q for g in gens), self.coset % q)

    def embedding(self, q: int) -> EmbeddingSpec:
        return EmbeddingSpec(q, parse_variant(self.variant))


# content-addressed orbit cache

class OrbitCache:
    def __init__(self, root: str | None):
        self.root = Path(root) if root else None

    @staticmethod
    def key(q: int, N: int, variant: str, fingerprint: str) -> str:
        return hashlib.sha256(f"{q}|{N}|{variant}|{fingerprint}".encode()).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def load(self, key: str):
        if self.root is None:
            return None
        path = self._path(key)
        if not path.exists():
            return None
        try:
            blob = json.loads(path.read_text())
            payload = json.dumps(blob["payload"], sort_keys=True, separators=(",", ":"))
            if blob["key"] != key or hashlib.sha256(payload.encode()).hexdigest() != blob["checksum"]:
                raise ValueError("checksum mismatch")
            return blob["payload"]
        except (ValueError, KeyError) as exc:
            log.warning("discarding corrupt cache entry %s: %s", path, exc)
            return None

    def store(self, key: str, payload) -> None:
        if self.root is None:
            return
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        blob = {"key": key, "checksum": hashlib.sha256(text.encode()).hexdigest(), "payload": payload}
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            json.dump(blob, fh, sort_keys=True)
        os.replace(tmp, path)


def cached_orbit(config: ExperimentConfig, q: int, cache: OrbitCache) -> list[OrbitEntry]:
    spec = config.embedding(q)
    cs = config.coset_spec(q)
    key = cache.key(q, config.N, str(spec.variant), cs.fingerprint())
    payload = cache.load(key)
    if payload is None:
        entries = modgroup.orbit(spec, cs.elements(), config.N)
        cache.store(key, [[e.a, *e.matrix.entries(), e.n_psi, e.t_a] for e in entries])
        return entries
    out = []
    for a, ma, mb, mc, md, n, t in payload:
        m = UnimodularMatrix(ma, mb, mc, md)
        out.append(OrbitEntry(a, m, n, t, geodesic_data(m)))
    return out


# reports

def _num(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, complex):
        return {"real": x.real, "imag": x.imag}
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_num)


@dataclass
class OrbitReport:
    kind: str
    config: dict
    results: list
    csv: str = ""
    side_files: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return hashlib.sha256(canonical_json({"config": self.config, "results": self.results}).encode()).hexdigest()

    def to_json(self, timing: bool = True) -> str:
        body = {"kind": self.kind, "config": self.config, "results": self.results, "report_hash": self.digest}
        if timing:
            body["timing"] = self.timing
        return json.dumps(json.loads(canonical_json(body)), sort_keys=True, indent=1) + "\n"


def _orbit_record(e: OrbitEntry) -> dict:
    return {"a": e.a, "matrix": list(e.matrix.entries()), "trace": e.matrix.trace, "t_a": e.t_a,
            "n_psi": e.n_psi, "length": e.data.length}


def _run_orbit(config, q, cache):
    entries = cached_orbit(config, q, cache)
    q_res = {
        "q": q, "size": len(entries), "sum_length": modgroup.total_length(entries),
        "sum_n_psi": sum(e.n_psi for e in entries),
        "max_trace_ratio": max((abs(e.matrix.trace) / q for e in entries), default=0.0),
        "records": [_orbit_record(e) for e in entries],
    }
    return q_res, modgroup.orbit_jsonl(entries)


_HAAR: dict = {}


def _haar(name: str) -> float:
    if name not in _HAAR:
        _HAAR[name] = haar_integral(observable(name)).value
    return _HAAR[name]


def _run_equidist(config, q, cache):
    entries = cached_orbit(config, q, cache)
    obs = [observable(n) for n in config.observables]
    per = orbit_observable_integrals(entries, obs)
    lengths = [e.data.length for e in entries]
    total = math.fsum(lengths)
    ratios = {o.name: math.fsum(per[:, k]) / total for k, o in enumerate(obs)}
    deviation = {o.name: ratios[o.name] - _haar(o.name) for o in obs}
    return {
        "q": q, "size": len(entries), "sum_length": total, "sum_n_psi": sum(e.n_psi for e in entries),
        "max_trace_ratio": max(abs(e.matrix.trace) / q for e in entries),
        "ratios": ratios, "haar": {o.name: _haar(o.name) for o in obs}, "deviation": deviation,
        "max_deviation": max((abs(v) for v in deviation.values()), default=0.0),
        "records": [{"a": e.a, "length": e.data.length, "integrals": {o.name: per[i, k] for k, o in enumerate(obs)}}
                    for i, e in enumerate(entries)],
    }, None


def recompute_ratios(result: dict) -> dict:
    total = math.fsum(r["length"] for r in result["records"])
    names = result["ratios"].keys()
    return {n: math.fsum(r["integrals"][n] for r in result["records"]) / total for n in names}


def _run_kloosterman(config, q, cache):
    cs = config.coset_spec(q)
    rows = []
    for m in config.m_values:
        for n in config.n_values:
            s = charsums.coset_kloosterman(cs, m, n, check=None)
            if s.discrepancy > config.tol:
                raise ConsistencyError(f"coset sum paths disagree for q={q}, m={m}, n={n}: {s.discrepancy:.3e}")
            rows.append({"q": q, "m": m, "n": n, "subgroup": cs.fingerprint(), "coset": cs.coset_rep,
                         "value": s.direct, "discrepancy": s.discrepancy})
    return {"q": q, "rows": rows}, None


def _run_birch_stevens(config, q, cache):
    spec = config.embedding(q)
    reps = []
    for chi in charsums.characters(q):
        r = eisenstein.birch_stevens_eisenstein(config.N, q, chi, spec)
        if r.residual > max(config.tol, 1e-6):
            raise ConsistencyError(f"Birch-Stevens residual {r.residual:.3e} for q={q}, chi={chi.exponents}")
        reps.append(r.to_json_dict(timing=False))
    return {"q": q, "reports": reps, "max_residual": max(r["residual"] for r in reps)}, None


def _run_homology(config, q, cache):
    gs = homology.schreier_generators(config.N)
    cs = config.coset_spec(q)
    spec = config.embedding(q)
    H = cs.elements()
    v = homology.orbit_sum(H, spec, config.N)
    entries = cached_orbit(config, q, cache)
    minus_one = (q - 1) in set(cs.subgroup())
    return {
        "q": q, "size": len(H), "class": [{"generator": list(g.entries()), "coordinate": _num(x) if x.denominator > 1 else int(x)}
                                            for g, x in zip(gs.basis, v.coordinates)],
        "distance": homology.concentration_distance(v) if not v.is_zero() else None,
        "sum_n_psi": sum(e.n_psi for e in entries), "sum_length": modgroup.total_length(entries),
        "minus_one_in_H": minus_one, "degraded": gs.degraded, "basis": gs.metadata(),
    }, None


def _run_torus(config, q, cache):
    cs = config.coset_spec(q)
    st = torusstats.trace_stats(cs)
    ratios = [t / q for t in st.traces]
    return {
        "q": q, "size": st.size, "trace_mean": st.trace_mean, "lift_mean": st.lift_mean,
        "fraction_large": st.fraction_large(), "normalized_trace_mean": float(st.trace_mean) / st.size,
    }, torusstats.histogram_csv(ratios, np.linspace(-0.5, 0.5, 21))


_RUNNERS = {"orbit": _run_orbit, "equidist": _run_equidist, "kloosterman": _run_kloosterman,
            "birch-stevens": _run_birch_stevens, "homology": _run_homology, "torus": _run_torus}


def _csv(config: ExperimentConfig, results: list, sides: list) -> str:
    k = config.kind
    if k == "orbit":
        lines = ["q,a,a11,a12,a21,a22,trace,t_a,n_psi,length"]
        for r in results:
            for e in r["records"]:
                lines.append(",".join(map(str, [r["q"], e["a"], *e["matrix"], e["trace"], e["t_a"], e["n_psi"],
                                                format(e["length"], ".17g")])))
        return "\n".join(lines) + "\n"
    if k == "equidist":
        lines = ["q,observable,ratio,haar,deviation"]
        for r in results:
            for n, v in r["ratios"].items():
                lines.append(f"{r['q']},{n},{v:.17g},{r['haar'][n]:.17g},{r['deviation'][n]:.17g}")
        return "\n".join(lines) + "\n"
    if k == "kloosterman":
        rows = [(x["q"], x["m"], x["n"], x["subgroup"], x["coset"], complex(x["value"]["real"], x["value"]["imag"]))
                for r in results for x in r["rows"]]
        return charsums.kloosterman_csv_rows(rows)
    if k == "birch-stevens":
        lines = ["q,N,chi,lhs_real,lhs_imag,rhs_real,rhs_imag,residual"]
        for r in results:
            for b in r["reports"]:
                chi = ";".join(map(str, b["chi_exponents"]))
                lines.append(f"{b['q']},{b['N']},{chi},{b['lhs']['real']:.17g},{b['lhs']['imag']:.17g},"
                             f"{b['rhs']['real']:.17g},{b['rhs']['imag']:.17g},{b['residual']:.3e}")
        return "\n".join(lines) + "\n"
    if k == "homology":
        return homology.concentration_csv([(r["q"], r["size"], r["distance"] if r["distance"] is not None else float("nan"),
                                            r["sum_n_psi"], r["sum_length"]) for r in results])
    return "".join(s for s in sides if s)


def run_experiment(config: ExperimentConfig) -> OrbitReport:
    config.validate()
    cache = OrbitCache(config.cache)
    runner = _RUNNERS[config.kind]
    timing = {}

    def work(q):
        start = time.perf_counter()
        res = runner(config, q, cache)
        timing[str(q)] = time.perf_counter() - start
        return res

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            outs = list(pool.map(work, config.qs))
    else:
        outs = [work(q) for q in config.qs]
    results = [json.loads(canonical_json(r)) for r, _ in outs]
    sides = [s for _, s in outs]
    side_files = {}
    if config.kind == "orbit":
        side_files["orbit.jsonl"] = "".join(s for s in sides)
    report = OrbitReport(config.kind, json.loads(canonical_json(config.as_dict())), results,
                         _csv(config, results, sides), side_files, {"per_q_seconds": timing})
    if config.kind == "equidist":
        for r in report.results:
            again = recompute_ratios(r)
            if any(abs(again[n] - r["ratios"][n]) > 1e-12 for n in again):
                raise ConsistencyError(f"aggregate ratios do not match records for q={r['q']}")
    return report
