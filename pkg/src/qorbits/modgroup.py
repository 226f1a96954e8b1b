"""Integer matrices in PSL2(Z), double coset embeddings a -> psi(a), and
the closed geodesics they carry."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Q_LIMIT = 2 ** 40


class NotHyperbolicError(ValueError):
    pass


@dataclass(frozen=True)
class UnimodularMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if det != 1:
            raise ValueError(f"determinant is {det}, expected 1")

    @property
    def trace(self) -> int:
        return self.a + self.d

    def entries(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        a, b, c, d = self.entries()
        e, f, g, h = other.entries()
        return normalize((a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h))

    def inverse(self) -> "UnimodularMatrix":
        return normalize((self.d, -self.b, -self.c, self.a))

    def act(self, z):
        """Moebius action on a point (complex or real); c*z+d = 0 maps to inf."""
        num = self.a * z + self.b
        den = self.c * z + self.d
        if den == 0:
            return math.inf
        return num / den

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    def __str__(self):
        return f"({self.a},{self.b};{self.c},{self.d})"


def normalize(m) -> UnimodularMatrix:
    """Canonical sign: c > 0, or c == 0 and a > 0."""
    if isinstance(m, UnimodularMatrix):
        a, b, c, d = m.entries()
    else:
        a, b, c, d = (int(v) for v in np.asarray(m, dtype=object).ravel())
    det = a * d - b * c
    if det != 1:
        raise ValueError(f"determinant is {det}, expected 1")
    if c < 0 or (c == 0 and a < 0):
        a, b, c, d = -a, -b, -c, -d
    return UnimodularMatrix(a, b, c, d)


T = UnimodularMatrix(1, 1, 0, 1)
S = UnimodularMatrix(0, -1, 1, 0)
IDENTITY = UnimodularMatrix(1, 0, 0, 1)


def _check_q(q: int):
    if q < 2:
        raise ValueError(f"modulus must be >= 2, got {q}")
    if q > Q_LIMIT:
        raise ValueError(f"modulus {q} exceeds the supported limit 2**40")


def inverse_mod(a: int, q: int) -> int:
    _check_q(q)
    g = math.gcd(a, q)
    if g != 1:
        raise ValueError(f"{a} is not invertible mod {q}: common factor {g}")
    return pow(a, -1, q)


def minimal_trace(a: int, q: int) -> int:
    """Representative of a + abar mod q in [-q/2, q/2)."""
    t = (a + inverse_mod(a, q)) % q
    if 2 * t >= q:
        t -= q
    return t


# embedding variants

@dataclass(frozen=True)
class MinimalTrace:
    def __str__(self):
        return "minimal"


@dataclass(frozen=True)
class ExplicitShift:
    n: int

    def __str__(self):
        return f"explicit:{self.n}"


@dataclass(frozen=True)
class EpsRegular:
    eps: float
    base: object = MinimalTrace()

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0,1), got {self.eps}")

    def __str__(self):
        return f"epsreg:{self.eps!r}"


@dataclass(frozen=True)
class InverseLift:
    """psi(a) = (a, (a*abar-1)/q; q, abar) with 0 < a, abar < q, and
    psi(+-1) = (+-1, 1; q, +-(q+1))."""

    def __str__(self):
        return "inverse-lift"


@dataclass(frozen=True)
class NegativeInverseLift:
    """psi(a) = (a, -(a*astar+1)/q; q, -astar) with a*astar = -1 mod q and
    0 < a, astar < q. embed rejects the a where this is not hyperbolic."""

    def __str__(self):
        return "negative-inverse-lift"


@dataclass(frozen=True)
class EmbeddingSpec:
    q: int
    variant: object = MinimalTrace()

    def __post_init__(self):
        _check_q(self.q)


def parse_variant(text: str):
    text = text.strip()
    if text == "minimal":
        return MinimalTrace()
    if text == "inverse-lift":
        return InverseLift()
    if text == "negative-inverse-lift":
        return NegativeInverseLift()
    kind, _, arg = text.partition(":")
    if kind == "explicit" and arg:
        return ExplicitShift(int(arg))
    if kind == "epsreg" and arg:
        return EpsRegular(float(arg))
    raise ValueError(f"unknown embedding variant {text!r}")


def _from_trace(a: int, q: int, tr: int) -> UnimodularMatrix:
    a1 = a % q
    d = tr - a1
    b, r = divmod(a1 * d - 1, q)
    assert r == 0
    return UnimodularMatrix(a1, b, q, d)


def _minimal_admissible(t: int, q: int) -> int:
    best = None
    for k in range(-3, 4):
        tr = t + k * q
        if abs(tr) <= 2:
            continue
        if best is None or abs(tr) < abs(best) or (abs(tr) == abs(best) and tr > best):
            best = tr
    return best


def negative_inverse_matrix(a: int, q: int) -> UnimodularMatrix:
    """(a, -(a a* + 1)/q; q, -a*) with 0 < a, a* < q and a a* = -1 mod q. The trace
    a - a* may be small, so this is not always hyperbolic."""
    a1 = a % q
    star = (-inverse_mod(a1, q)) % q
    return UnimodularMatrix(a1, -((a1 * star + 1) // q), q, -star)


def embed(a: int, spec: EmbeddingSpec) -> tuple[UnimodularMatrix, int]:
    """Return (psi(a), n_psi) with tr psi(a) = t_a + q*n_psi."""
    q = spec.q
    v = spec.variant
    t = minimal_trace(a, q)
    if isinstance(v, MinimalTrace):
        m = _from_trace(a, q, _minimal_admissible(t, q))
    elif isinstance(v, ExplicitShift):
        tr = t + q * v.n
        if abs(tr) <= 2:
            raise NotHyperbolicError(f"shift {v.n} gives trace {tr} for a={a}, q={q}")
        m = _from_trace(a, q, tr)
    elif isinstance(v, EpsRegular):
        m, _ = embed(a, EmbeddingSpec(q, v.base))
        if abs(m.trace) < q ** (1 - v.eps):
            m = UnimodularMatrix(m.a, m.a + m.b, m.c, m.c + m.d)
    elif isinstance(v, InverseLift):
        a1 = a % q
        if a1 == 1:
            m = UnimodularMatrix(1, 1, q, q + 1)
        elif a1 == q - 1:
            m = UnimodularMatrix(-1, 1, q, -(q + 1))
        else:
            ab = inverse_mod(a1, q)
            m = UnimodularMatrix(a1, (a1 * ab - 1) // q, q, ab)
    elif isinstance(v, NegativeInverseLift):
        m = negative_inverse_matrix(a, q)
    else:
        raise TypeError(f"unknown embedding variant {v!r}")
    if abs(m.trace) <= 2:
        raise NotHyperbolicError(f"psi({a}) = {m} has trace {m.trace}")
    n, r = divmod(m.trace - t, q)
    assert r == 0
    return m, n


# geodesics

@dataclass(frozen=True)
class GeodesicData:
    epsilon: int
    radius: float
    base: np.ndarray
    length: float
    apex_height: float
    center: float

    def endpoints(self) -> tuple[float, float]:
        """(repelling, attracting) endpoints on the real line."""
        return (self.center - self.epsilon * self.radius,
                self.center + self.epsilon * self.radius)


@dataclass(frozen=True)
class TangentPoint:
    x: float
    y: float
    theta: float

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


def geodesic_length(tr: int) -> float:
    return 2.0 * math.acosh(abs(tr) / 2.0)


def geodesic_data(g: UnimodularMatrix) -> GeodesicData:
    tr = g.trace
    if abs(tr) <= 2:
        raise NotHyperbolicError(f"{g} is not hyperbolic (trace {tr})")
    if g.c == 0:
        raise NotHyperbolicError("translation class has no closed geodesic")
    c = g.c
    eps = 1 if c * tr > 0 else -1
    # r^2 = (tr^2 - 4) / (4 c^2), evaluated without cancellation
    r = math.sqrt(tr * tr - 4) / (2 * abs(c))
    center = (g.a - g.d) / (2 * c)
    s = 1.0 / math.sqrt(2 * r)
    base = s * np.array([[center + eps * r, eps * center - r], [1.0, float(eps)]])
    return GeodesicData(eps, r, base, geodesic_length(tr), 2 * r / abs(tr), center)


def flow(t) -> np.ndarray:
    """a_t = diag(e^{t/2}, e^{-t/2}); vectorized in t with shape (..., 2, 2)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (2, 2))
    out[..., 0, 0] = np.exp(t / 2)
    out[..., 1, 1] = np.exp(-t / 2)
    return out


def iwasawa(m: np.ndarray):
    """(x, y, theta) with m = n(x) a(y) k(theta), k(t) = [[cos, sin], [-sin, cos]],
    theta reduced mod pi. Vectorized over leading axes."""
    A, B = m[..., 0, 0], m[..., 0, 1]
    C, D = m[..., 1, 0], m[..., 1, 1]
    n2 = C * C + D * D
    x = (A * C + B * D) / n2
    y = 1.0 / n2
    theta = np.mod(np.arctan2(-C, D), np.pi)
    return x, y, theta


def geodesic_frames(g: UnimodularMatrix, t) -> np.ndarray:
    data = geodesic_data(g)
    return data.base @ flow(t)


def geodesic_point(g: UnimodularMatrix, t: float) -> TangentPoint:
    # closed forms of the Iwasawa coordinates of g_gamma a_t
    data = geodesic_data(g)
    x = data.center + data.epsilon * data.radius * math.tanh(t)
    y = data.radius / math.cosh(t)
    theta = math.atan2(-math.exp(t), data.epsilon) % math.pi
    return TangentPoint(x, y, theta)


def geodesic_coords(g: UnimodularMatrix, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized geodesic_point."""
    data = geodesic_data(g)
    t = np.asarray(t, dtype=float)
    x = data.center + data.epsilon * data.radius * np.tanh(t)
    y = data.radius / np.cosh(t)
    theta = np.mod(np.arctan2(-np.exp(t), data.epsilon), np.pi)
    return x, y, theta


def act_tangent(g: UnimodularMatrix, p: TangentPoint) -> TangentPoint:
    """Left action of g on a unit tangent vector: z -> gz, theta -> theta - arg(cz+d)."""
    z = p.z
    j = g.c * z + g.d
    w = (g.a * z + g.b) / j
    return TangentPoint(w.real, w.imag, (p.theta - math.atan2(j.imag, j.real)) % math.pi)


def hyperbolic_distance(z: complex, w: complex) -> float:
    return 2.0 * math.asinh(abs(z - w) / (2.0 * math.sqrt(z.imag * w.imag)))


def closure_defect(g: UnimodularMatrix, t: float, dps: int | None = None) -> float:
    """Distance between g.point(t) and point(t + L) in the unit tangent bundle
    (hyperbolic distance of base points plus the angle gap mod pi).

    Points near the ends of long geodesics sit at heights ~1/(c tr^2), below
    what double precision resolves; pass dps to evaluate with mpmath."""
    if dps is None:
        data = geodesic_data(g)
        p0 = act_tangent(g, geodesic_point(g, t))
        p1 = geodesic_point(g, t + data.length)
        x0, y0, th0 = p0.x, p0.y, p0.theta
        x1, y1, th1 = p1.x, p1.y, p1.theta
        dist = hyperbolic_distance(p0.z, p1.z)
    else:
        import mpmath
        with mpmath.workdps(dps):
            x0, y0, th0, x1, y1, th1 = _closure_points_mp(g, mpmath.mpf(t), mpmath)
            dist = 2 * mpmath.asinh(mpmath.sqrt((x0 - x1) ** 2 + (y0 - y1) ** 2)
                                    / (2 * mpmath.sqrt(y0 * y1)))
    dth = abs(float(th0) - float(th1))
    dth = min(dth, math.pi - dth)
    return float(dist) + dth


def _closure_points_mp(g, t, mp):
    a, b, c, d = (mp.mpf(v) for v in g.entries())
    tr = a + d
    eps = 1 if g.c * g.trace > 0 else -1
    r = mp.sqrt(tr * tr - 4) / (2 * abs(c))
    center = (a - d) / (2 * c)
    s = 1 / mp.sqrt(2 * r)
    base = mp.matrix([[s * (center + eps * r), s * (eps * center - r)], [s, s * eps]])
    length = 2 * mp.acosh(abs(tr) / 2)

    def frame(u):
        return base * mp.matrix([[mp.exp(u / 2), 0], [0, mp.exp(-u / 2)]])

    def coords(m):
        A, B, C, D = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        n2 = C * C + D * D
        return (A * C + B * D) / n2, 1 / n2, mp.atan2(-C, D) % mp.pi

    m0 = mp.matrix([[a, b], [c, d]]) * frame(t)
    return coords(m0) + coords(frame(t + length))


# orbits

@dataclass(frozen=True)
class OrbitEntry:
    a: int
    matrix: UnimodularMatrix
    n_psi: int
    t_a: int
    data: GeodesicData


def orbit(spec: EmbeddingSpec, coset: Iterable[int], N: int = 1) -> list[OrbitEntry]:
    q = spec.q
    if N < 1 or q % N:
        raise ValueError(f"level {N} does not divide q = {q}")
    out = []
    for a in sorted(set(int(x) % q for x in coset)):
        m, n = embed(a, spec)
        out.append(OrbitEntry(a, m, n, minimal_trace(a, q), geodesic_data(m)))
    return out


def total_length(entries: Sequence[OrbitEntry]) -> float:
    return math.fsum(e.data.length for e in entries)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def orbit_jsonl(entries: Sequence[OrbitEntry]) -> str:
    """One JSON object per line; floats written with 17 significant digits."""
    lines = []
    for e in entries:
        m, g = e.matrix, e.data
        base = ",".join(_fmt(v) for v in g.base.ravel())
        lines.append(
            f'{{"a": {e.a}, "matrix": [{m.a}, {m.b}, {m.c}, {m.d}], '
            f'"trace": {m.trace}, "t_a": {e.t_a}, "n_psi": {e.n_psi}, '
            f'"epsilon": {g.epsilon}, "radius": {_fmt(g.radius)}, '
            f'"length": {_fmt(g.length)}, "apex_height": {_fmt(g.apex_height)}, '
            f'"base": [{base}]}}'
        )
    return "\n".join(lines) + ("\n" if lines else "")
