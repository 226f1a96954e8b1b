"""Statistics of the points (a/q, abar/q) on the torus: smooth steps,
smoothed sums against observables, and minimal-trace statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np
from scipy import integrate

from .charsums import CosetSpec
from .modgroup import minimal_trace


def _bump_raw(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def bump_mass() -> float:
    with mpmath.workdps(30):
        val = mpmath.quad(lambda t: mpmath.exp(-1 / (1 - t * t)), [-1, 0, 1])
    return float(val)


def bump(x):
    """Unit-mass mollifier supported on (-1, 1)."""
    return _bump_raw(x) / bump_mass()


_PANELS = 128
_DEGREE = 20


@lru_cache(maxsize=1)
def _cdf_table() -> np.ndarray:
    """Chebyshev coefficients of the bump CDF on 128 equal panels of [-1, 1]."""
    gx, gw = np.polynomial.legendre.leggauss(40)
    edges = np.linspace(-1.0, 1.0, _PANELS + 1)

    def integral(lo, hi):
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        return half * np.sum(gw * _bump_raw(mid + half * gx))

    starts = np.concatenate([[0.0], np.cumsum([integral(a, b) for a, b in zip(edges[:-1], edges[1:])])])
    coeffs = np.empty((_PANELS, _DEGREE + 1))
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        def local(s, lo=lo, hi=hi, base=starts[i]):
            return np.array([base + integral(lo, lo + (hi - lo) * (v + 1) / 2) for v in np.atleast_1d(s)])
        coeffs[i] = np.polynomial.chebyshev.chebinterpolate(local, _DEGREE)
    return coeffs / starts[-1]


def bump_cdf(u):
    """int_{-1}^{u} bump, vectorized; piecewise Chebyshev interpolant."""
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    coeffs = _cdf_table()
    pos = (u + 1.0) * (_PANELS / 2.0)
    idx = np.minimum(pos.astype(np.int64), _PANELS - 1)
    s = 2.0 * (pos - idx) - 1.0
    c = coeffs[idx]
    # Clenshaw recurrence, vectorized over points
    b1 = np.zeros_like(s)
    b2 = np.zeros_like(s)
    for k in range(_DEGREE, 0, -1):
        b1, b2 = 2.0 * s * b1 - b2 + c[..., k], b1
    out = s * b1 - b2 + c[..., 0]
    return np.where(u >= 1.0, 1.0, np.where(u <= -1.0, 0.0, out))


def smooth_step(y, T: float):
    """psi_T = 1_[0,1] * phi_T with phi_T(x) = T phi(T x)."""
    if T < 2:
        raise ValueError(f"sharpness T must be >= 2, got {T}")
    y = np.asarray(y, dtype=float)
    out = bump_cdf(T * y) - bump_cdf(T * (y - 1.0))
    return float(out) if out.ndim == 0 else out


def smooth_step_moment(T: float, m: int) -> float:
    """int psi_T(x) x^m dx; equals 1/(m+1) + O(1/T)."""
    val, _ = integrate.quad(lambda x: smooth_step(x, T) * x ** m, -1.0 / T, 1 + 1.0 / T,
                            points=[1.0 / T, 1 - 1.0 / T], epsabs=1e-13, limit=200)
    return val


# observables on (R/Z)^2

@dataclass
class TorusObservable:
    func: Callable
    name: str = "obs"
    derivative_bounds: tuple = ()
    _integral: complex | None = field(default=None, repr=False)

    def __call__(self, x, y):
        return self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def integral(self, tol: float = 1e-10) -> complex:
        if self._integral is None:
            self._integral = tensor_quadrature(self.func, tol)
        return self._integral

    def l1_norm(self, tol: float = 1e-10) -> float:
        return float(tensor_quadrature(lambda x, y: np.abs(self.func(x, y)), tol).real)

    @classmethod
    def constant(cls, value: float = 1.0) -> "TorusObservable":
        return cls(lambda x, y: np.full(np.broadcast(x, y).shape, value), "constant", (abs(value),))

    @classmethod
    def fourier_mode(cls, h: int, k: int) -> "TorusObservable":
        bounds = tuple((2 * math.pi * math.hypot(h, k)) ** n for n in range(4))
        return cls(lambda x, y: np.exp(2j * np.pi * (h * x + k * y)), f"e({h}x+{k}y)", bounds)

    @classmethod
    def plateau_sum(cls, lo: float, hi: float, T: float) -> "TorusObservable":
        """Smoothed indicator of x + y mod 1 in (lo, hi) with sharpness T."""
        width = hi - lo
        if not 0 < width < 1:
            raise ValueError("need 0 < hi - lo < 1")

        def f(x, y):
            u = np.mod(x + y - lo, 1.0)
            u = np.where(u > 1 - (1 - width) / 2, u - 1, u)
            return smooth_step(u / width, T)

        return cls(f, f"plateau({lo},{hi};T={T})", tuple((T / width) ** n for n in range(4)))

    @classmethod
    def plateau_x(cls, lo: float, hi: float, T: float) -> "TorusObservable":
        obs = cls.plateau_sum(lo, hi, T)
        g = obs.func
        return cls(lambda x, y: g(x, np.zeros_like(x)), f"plateau_x({lo},{hi};T={T})", obs.derivative_bounds)


def tensor_quadrature(f: Callable, tol: float = 1e-10, nodes: int = 8, max_depth: int = 12) -> complex:
    """Integral over [0,1]^2 by tensor Gauss-Legendre on squares, refined
    adaptively: a square is split in four until the children agree with it
    to tol times its area."""
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    ux, uw = (gx + 1) / 2, gw / 2

    def rule(x0, y0, h):
        # x0, y0, h arrays of squares; returns one value per square
        X = x0[:, None, None] + h[:, None, None] * ux[None, :, None]
        Y = y0[:, None, None] + h[:, None, None] * ux[None, None, :]
        vals = np.asarray(f(X, Y), dtype=complex)
        return h * h * np.einsum("i,j,sij->s", uw, uw, vals)

    n0 = 8
    g = np.arange(n0) / n0
    x0 = np.repeat(g, n0)
    y0 = np.tile(g, n0)
    h = np.full(x0.size, 1.0 / n0)
    coarse = rule(x0, y0, h)
    total = 0j
    for _ in range(max_depth):
        cx = np.concatenate([x0, x0 + h / 2, x0, x0 + h / 2])
        cy = np.concatenate([y0, y0, y0 + h / 2, y0 + h / 2])
        ch = np.tile(h / 2, 4)
        fine_parts = rule(cx, cy, ch).reshape(4, -1)
        fine = fine_parts.sum(axis=0)
        ok = np.abs(fine - coarse) <= tol * h * h
        total += np.sum(fine[ok])
        if ok.all():
            return complex(total)
        keep = np.tile(~ok, 4)
        x0, y0, h, coarse = cx[keep], cy[keep], ch[keep], fine_parts.ravel()[keep]
    raise ArithmeticError(f"2D quadrature did not reach {tol}")


@dataclass(frozen=True)
class TorusSum:
    total: complex
    gap: complex
    size: int


def torus_points(spec: CosetSpec) -> tuple[np.ndarray, np.ndarray]:
    q = spec.q
    a = np.array(spec.elements(), dtype=np.int64)
    ab = np.array([pow(int(v), -1, q) for v in a], dtype=np.int64)
    return a / q, ab / q


def torus_sum(spec: CosetSpec, obs: TorusObservable) -> TorusSum:
    x, y = torus_points(spec)
    total = complex(np.sum(obs(x, y)))
    return TorusSum(total, total - len(x) * obs.integral(), len(x))


# trace statistics

@dataclass(frozen=True)
class TraceStats:
    q: int
    elements: tuple
    traces: tuple

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def trace_mean(self) -> Fraction:
        """sum_a t_a / q (a sum, following the usual normalization)."""
        return Fraction(sum(self.traces), self.q)

    @property
    def lift_mean(self) -> Fraction:
        """sum over 0 < a < q in the coset of a / q."""
        return Fraction(sum(a for a in self.elements if 0 < a < self.q), self.q)

    def near_delta_count(self, delta: float, T: float) -> int:
        t = np.array(self.traces, dtype=float) / self.q
        return int(np.count_nonzero(np.abs(t - delta) <= 1.0 / T))

    def fraction_large(self, ratio: float = 1 / 6) -> float:
        return sum(1 for t in self.traces if abs(t) >= ratio * self.q) / self.size


def trace_stats(spec: CosetSpec) -> TraceStats:
    elems = spec.elements()
    return TraceStats(spec.q, tuple(elems), tuple(minimal_trace(a, spec.q) for a in elems))


def histogram_csv(values, edges) -> str:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=np.asarray(edges, dtype=float))
    head = (f"# edges={';'.join(format(e, '.17g') for e in edges)} "
            f"counts={';'.join(str(int(c)) for c in counts)}")
    rows = [head, "bin_lo,bin_hi,count"]
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        rows.append(f"{format(lo, '.17g')},{format(hi, '.17g')},{int(c)}")
    return "\n".join(rows) + "\n"
