"""Field representations on R^n and the basic operations on them.

Two backends share one set of operations:

* :class:`GaussianMixtureField` -- an exact finite sum of
  ``coeff * P(x - mu) * G_s(x - mu)`` terms.  The family is closed under the
  heat flow, differentiation, dilation, translation and monomial weights, so
  identities can be checked to rounding error.
* :class:`GridField` -- samples on an origin-centred periodic box standing in
  for R^n.  Every grid field carries ``boundary_mass``, the share of its L1
  mass in the outer 10% shell; results computed from fields whose boundary
  mass exceeds the trust threshold are flagged with :class:`UntrustedWarning`.

The polynomial of a mixture term is stored in the *local* coordinate
``y = x - mu`` (not in x); this keeps the heat flow a per-term operation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize

from . import multiindex as mi
from .errors import QuadratureError, UntrustedWarning

DEFAULT_TRUST_THRESHOLD = 1e-6
SHELL_FRACTION = 0.1


def gauss_kernel(x: np.ndarray, s: float) -> np.ndarray:
    """G_s evaluated at points x of shape (..., n)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    return (4.0 * math.pi * s) ** (-n / 2) * np.exp(-r2 / (4.0 * s))


def g1_lq_norm(n: int, q: float) -> float:
    """Closed form of ||G_1||_q."""
    if math.isinf(q):
        return (4.0 * math.pi) ** (-n / 2)
    return (4.0 * math.pi) ** (-(n / 2) * (1.0 - 1.0 / q)) * q ** (-n / (2.0 * q))


# --- grid backend ----------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    n: int
    half_width: float
    points: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {self.n}")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.points < 2 or self.points & (self.points - 1):
            raise ValueError(f"points per axis must be a power of two, got {self.points}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points,) * self.n

    @property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.points)

    def coords(self) -> list:
        """Coordinate arrays, one per axis, each of shape ``self.shape``."""
        return list(np.meshgrid(*([self.axis] * self.n), indexing="ij"))

    def points_array(self) -> np.ndarray:
        return np.stack(self.coords(), axis=-1)

    def wavenumbers(self, real: bool = True) -> list:
        """Angular wavenumbers laid out for rfftn (last axis halved) or fftn."""
        full = 2.0 * math.pi * np.fft.fftfreq(self.points, d=self.dx)
        half = 2.0 * math.pi * np.fft.rfftfreq(self.points, d=self.dx)
        axes = [full] * (self.n - 1) + [half if real else full]
        return list(np.meshgrid(*axes, indexing="ij"))

    def shell_mask(self) -> np.ndarray:
        lim = (1.0 - SHELL_FRACTION) * self.half_width
        mask = np.zeros(self.shape, dtype=bool)
        for c in self.coords():
            mask |= np.abs(c) > lim
        return mask

    def to_dict(self) -> dict:
        return {"n": self.n, "half_width": self.half_width, "points": self.points}

    @classmethod
    def from_dict(cls, d: Mapping) -> "GridSpec":
        return cls(int(d["n"]), float(d["half_width"]), int(d["points"]))

    @classmethod
    def for_horizon(cls, n: int, t_max: float, dx: float = 0.2, min_half_width: float = 20.0) -> "GridSpec":
        """Box with L = max(20, 12 sqrt(T)) and spacing at most ``dx``."""
        half = max(min_half_width, 12.0 * math.sqrt(t_max))
        pts = 1 << max(1, math.ceil(math.log2(2.0 * half / dx)))
        return cls(n, half, pts)


def _shell_share(spec: GridSpec, weights: np.ndarray) -> float:
    total = float(np.sum(weights))
    if total == 0.0:
        return 0.0
    return float(np.sum(weights[spec.shell_mask()])) / total


@dataclass(frozen=True, eq=False)
class GridField:
    spec: GridSpec
    values: np.ndarray
    boundary_mass: float = field(init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.spec.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "boundary_mass", _shell_share(self.spec, np.abs(v)))

    @property
    def n(self) -> int:
        return self.spec.n

    def trusted(self, threshold: float = DEFAULT_TRUST_THRESHOLD) -> bool:
        return self.boundary_mass <= threshold

    def _check(self, other: "GridField"):
        if other.spec != self.spec:
            raise ValueError("grid fields live on different grids")

    def __add__(self, other):
        if isinstance(other, GridField):
            self._check(other)
            return GridField(self.spec, self.values + other.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, GridField):
            self._check(other)
            return GridField(self.spec, self.values - other.values)
        return NotImplemented

    def __mul__(self, c):
        if isinstance(c, (int, float, np.floating)):
            return GridField(self.spec, float(c) * self.values)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(self.spec, -self.values)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridField":
        return cls(spec, np.zeros(spec.shape))

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable[[np.ndarray], np.ndarray]) -> "GridField":
        """Sample ``fn`` (taking points of shape (..., n)) at the grid nodes."""
        return cls(spec, np.asarray(fn(spec.points_array()), dtype=float))


# --- mixture backend -------------------------------------------------------


@dataclass(frozen=True)
class GaussianTerm:
    """``coeff * poly(x - center) * G_s(x - center)``."""

    poly: Mapping[mi.MultiIndex, float]
    s: float
    center: Tuple[float, ...]
    coeff: float = 1.0

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"variance scale must be positive, got {self.s}")
        n = len(self.center)
        for k in self.poly:
            if len(k) != n:
                raise ValueError(f"exponent {k} does not match dimension {n}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def n(self) -> int:
        return len(self.center)

    def normalized(self) -> "GaussianTerm":
        """Fold coeff into the polynomial."""
        if self.coeff == 1.0:
            return self
        return GaussianTerm(mi.poly_scale(self.poly, self.coeff), self.s, self.center)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        y = np.asarray(x, dtype=float) - np.asarray(self.center)
        return self.coeff * mi.poly_eval(self.poly, y) * gauss_kernel(y, self.s)


@dataclass(frozen=True)
class GaussianMixtureField:
    n: int
    terms: Tuple[GaussianTerm, ...] = ()

    def __post_init__(self):
        terms = tuple(self.terms)
        for t in terms:
            if t.n != self.n:
                raise ValueError("term dimension mismatch")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def gauss(cls, n: int, s: float = 1.0, center: Sequence[float] | None = None,
              coeff: float = 1.0) -> "GaussianMixtureField":
        center = tuple(center) if center is not None else (0.0,) * n
        return cls(n, (GaussianTerm({mi.zero(n): 1.0}, s, center, coeff),))

    @classmethod
    def zero(cls, n: int) -> "GaussianMixtureField":
        return cls(n, ())

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.n:
            x = x[..., None] if self.n == 1 else x
        out = np.zeros(x.shape[:-1])
        for t in self.terms:
            out = out + t(x)
        return out

    def simplify(self) -> "GaussianMixtureField":
        """Merge terms sharing (s, center) and drop empty polynomials."""
        merged: Dict[tuple, dict] = {}
        for t in self.terms:
            t = t.normalized()
            key = (t.s, t.center)
            merged[key] = mi.poly_add(merged.get(key, {}), t.poly)
        terms = tuple(GaussianTerm(p, s, c) for (s, c), p in merged.items() if p)
        return GaussianMixtureField(self.n, terms)

    def __add__(self, other):
        if isinstance(other, GaussianMixtureField):
            if other.n != self.n:
                raise ValueError("dimension mismatch")
            return GaussianMixtureField(self.n, self.terms + other.terms).simplify()
        return NotImplemented

    def __mul__(self, c):
        if isinstance(c, (int, float, np.floating)):
            return GaussianMixtureField(
                self.n, tuple(GaussianTerm(t.poly, t.s, t.center, t.coeff * float(c)) for t in self.terms)
            ).simplify()
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        if isinstance(other, GaussianMixtureField):
            return self + (-other)
        return NotImplemented

    @property
    def max_scale(self) -> float:
        return max((t.s for t in self.terms), default=1.0)

    def bounding_box(self, width: float = 12.0) -> Tuple[np.ndarray, np.ndarray]:
        """Box outside which every term is below exp(-width**2 / 2) relative."""
        if not self.terms:
            return np.full(self.n, -1.0), np.full(self.n, 1.0)
        lo = np.full(self.n, np.inf)
        hi = np.full(self.n, -np.inf)
        for t in self.terms:
            deg = mi.poly_degree(t.poly)
            r = 2.0 * math.sqrt(t.s) * (width / math.sqrt(2.0) + math.sqrt(deg + 1.0))
            c = np.asarray(t.center)
            lo = np.minimum(lo, c - r)
            hi = np.maximum(hi, c + r)
        return lo, hi


Field = Union[GridField, GaussianMixtureField]


# --- mixture quadrature ----------------------------------------------------

_QUAD_REL = 1e-12


def _roots_1d(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, samples: int = 20001) -> list:
    xs = np.linspace(lo, hi, samples)
    ys = fn(xs)
    roots = []
    sgn = np.sign(ys)
    scalar = lambda z: float(fn(np.array([z]))[0])  # noqa: E731
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        try:
            roots.append(optimize.brentq(scalar, xs[i], xs[i + 1], xtol=1e-14, maxiter=300))
        except RuntimeError:
            # rounding noise near a root; the midpoint is as good a breakpoint
            roots.append(0.5 * (xs[i] + xs[i + 1]))
    for i in np.nonzero(ys == 0.0)[0]:
        roots.append(float(xs[i]))
    return sorted(roots)


def _integrate_1d(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, q: float, rel: float) -> float:
    """int |fn|^q over [lo, hi], split at the sign changes of fn."""
    breaks = [lo] + [r for r in _roots_1d(fn, lo, hi) if lo < r < hi] + [hi]
    scalar = lambda z: abs(float(fn(np.array([z]))[0])) ** q  # noqa: E731
    total = 0.0
    err = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        val, e = integrate.quad(scalar, a, b, epsabs=0.0, epsrel=rel, limit=400)
        total += val
        err += e
    if total > 0 and err > 1e3 * rel * total + 1e-300:
        raise QuadratureError(f"quadrature did not converge: value {total}, error {err}")
    return total


def _integrate_nd(fn: Callable[[np.ndarray], np.ndarray], lo, hi, q: float, rel: float,
                  max_points: int = 2048) -> float:
    """Tensor trapezoid sum, refined by halving the step until it settles (n >= 2)."""
    prev = None
    m = min(128, max_points)
    while True:
        axes = [np.linspace(a, b, m + 1) for a, b in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        w = math.prod((b - a) / m for a, b in zip(lo, hi))
        vals = np.abs(fn(pts)) ** q
        total = float(np.sum(vals) * w)
        if prev is not None and abs(total - prev) <= rel * max(abs(total), 1e-300):
            return total
        if m >= max_points:
            return total
        prev = total
        m *= 2


def _sup_1d(fn, lo, hi) -> float:
    xs = np.linspace(lo, hi, 40001)
    ys = np.abs(fn(xs))
    i = int(np.argmax(ys))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    res = optimize.minimize_scalar(lambda z: -abs(float(fn(np.array([z]))[0])), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-13})
    return max(float(ys[i]), -float(res.fun))


def _sup_nd(fn, lo, hi) -> float:
    axes = [np.linspace(a, b, 801) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    ys = np.abs(fn(pts))
    idx = np.unravel_index(int(np.argmax(ys)), ys.shape)
    x0 = pts[idx]
    res = optimize.minimize(lambda z: -abs(float(fn(z[None, :])[0])), x0, method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
    return max(float(ys[idx]), -float(res.fun))


def _mixture_callable(f: GaussianMixtureField, weight: Callable | None = None):
    if f.n == 1:
        def fn(x):
            x = np.asarray(x, dtype=float)
            v = f(x[..., None])
            return v if weight is None else v * weight(x[..., None])
    else:
        def fn(x):
            v = f(x)
            return v if weight is None else v * weight(x)
    return fn


def integrate_abs(f: GaussianMixtureField, q: float = 1.0, weight: Callable | None = None,
                  rel: float = _QUAD_REL, max_points: int = 2048) -> float:
    """Adaptive quadrature of ``|weight * f|^q`` over R^n (returns the integral, not its q-th root)."""
    if not f.terms:
        return 0.0
    lo, hi = f.bounding_box()
    fn = _mixture_callable(f, weight)
    if f.n == 1:
        return _integrate_1d(fn, float(lo[0]), float(hi[0]), q, rel)
    return _integrate_nd(fn, lo, hi, q, max(rel, 1e-10), max_points)


def sup_abs(f: GaussianMixtureField, weight: Callable | None = None) -> float:
    if not f.terms:
        return 0.0
    lo, hi = f.bounding_box(width=9.0)
    fn = _mixture_callable(f, weight)
    if f.n == 1:
        return _sup_1d(fn, float(lo[0]), float(hi[0]))
    return _sup_nd(fn, lo, hi)


def _gaussian_moment_1d(k: int, s: float) -> float:
    """E[Y^k] for Y ~ N(0, 2s)."""
    if k % 2:
        return 0.0
    return (2.0 * s) ** (k // 2) * math.prod(range(k - 1, 0, -2))


# --- operations ------------------------------------------------------------


def residual_norm(f: Field, q: float = 1.0, points: int = 1024) -> float:
    """||f||_q for a field that is expected to be rounding noise.

    Mixtures are summed on a fixed tensor mesh over their bounding box; no
    trust check is made, since noise has no meaningful boundary share.
    """
    if isinstance(f, GridField):
        return lq_norm(f, q, threshold=math.inf)
    if not f.terms:
        return 0.0
    lo, hi = f.bounding_box()
    m = points if f.n == 1 else min(points, 256)
    axes = [np.linspace(a, b, m + 1) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    v = np.abs(f(pts))
    if math.isinf(q):
        return float(v.max())
    w = math.prod((b - a) / m for a, b in zip(lo, hi))
    return float((np.sum(v ** q) * w) ** (1.0 / q))


def _warn_untrusted(what: str, share: float, threshold: float):
    warnings.warn(f"{what}: boundary mass {share:.3e} exceeds trust threshold {threshold:.1e}",
                  UntrustedWarning, stacklevel=3)


def lq_norm(f: Field, q: float, threshold: float = DEFAULT_TRUST_THRESHOLD, rel: float = _QUAD_REL,
            max_points: int = 2048) -> float:
    """||f||_q for q in [1, inf].

    ``rel`` and ``max_points`` steer mixture quadrature; a residual that is pure
    rounding noise does not need the default accuracy.
    """
    q = float(q)
    if not q >= 1.0:
        raise ValueError(f"q must lie in [1, inf], got {q}")
    if isinstance(f, GridField):
        if f.boundary_mass > threshold:
            _warn_untrusted("lq_norm", f.boundary_mass, threshold)
        v = np.abs(f.values)
        if math.isinf(q):
            return float(v.max(initial=0.0))
        if q == 1.0:
            return float(v.sum() * f.spec.cell_volume)
        return float((np.sum(v ** q) * f.spec.cell_volume) ** (1.0 / q))
    if math.isinf(q):
        return sup_abs(f)
    return integrate_abs(f, q, rel=rel, max_points=max_points) ** (1.0 / q)


def _monomial_weight(alpha):
    alpha = tuple(alpha)

    def w(x):
        out = np.ones(x.shape[:-1])
        for j, a in enumerate(alpha):
            if a:
                out = out * x[..., j] ** a
        return out
    return w


def weighted_l1_moment(f: Field, alpha: Sequence[int], threshold: float = DEFAULT_TRUST_THRESHOLD) -> float:
    """||x^alpha f||_1."""
    alpha = mi.validate(alpha, f.n)
    if isinstance(f, GridField):
        weighted = np.abs(f.values * _monomial_weight(alpha)(f.spec.points_array()))
        share = _shell_share(f.spec, weighted)
        if share > threshold:
            _warn_untrusted("weighted_l1_moment", share, threshold)
        return float(weighted.sum() * f.spec.cell_volume)
    if not any(alpha):
        return integrate_abs(f, 1.0)
    return integrate_abs(f, 1.0, weight=_monomial_weight(alpha))


def radial_weighted_l1(f: Field, k: float, threshold: float = DEFAULT_TRUST_THRESHOLD) -> float:
    """|| |x|^k f ||_1."""
    weight = lambda x: np.sqrt(np.sum(x * x, axis=-1)) ** k  # noqa: E731
    if isinstance(f, GridField):
        weighted = np.abs(f.values * weight(f.spec.points_array()))
        share = _shell_share(f.spec, weighted)
        if share > threshold:
            _warn_untrusted("radial_weighted_l1", share, threshold)
        return float(weighted.sum() * f.spec.cell_volume)
    if k == 0:
        return integrate_abs(f, 1.0)
    return integrate_abs(f, 1.0, weight=weight)


def signed_moment(f: Field, alpha: Sequence[int], threshold: float = DEFAULT_TRUST_THRESHOLD) -> float:
    """int y^alpha f(y) dy (no factorial normalisation)."""
    alpha = mi.validate(alpha, f.n)
    if isinstance(f, GridField):
        weighted = f.values * _monomial_weight(alpha)(f.spec.points_array())
        share = _shell_share(f.spec, np.abs(weighted))
        if share > threshold:
            _warn_untrusted("signed_moment", share, threshold)
        return float(weighted.sum() * f.spec.cell_volume)
    total = 0.0
    for t in f.terms:
        # x^alpha = (y + mu)^alpha in the local coordinate of the term
        p = mi.poly_mul(t.poly, mi.poly_shift({alpha: 1.0}, t.center))
        for gamma, c in p.items():
            total += t.coeff * float(c) * math.prod(_gaussian_moment_1d(g, t.s) for g in gamma)
    return total


def _fourier_eval_axis(values: np.ndarray, spec: GridSpec, pts: np.ndarray, axis: int) -> np.ndarray:
    """Trigonometric interpolation of ``values`` along ``axis`` at coordinates ``pts``; zero outside the box."""
    N = spec.points
    F = np.fft.fft(values, axis=axis)
    xi = 2.0 * math.pi * np.fft.fftfreq(N, d=spec.dx)
    F = np.moveaxis(F, axis, 0).reshape(N, -1)
    out = np.zeros((len(pts), F.shape[1]))
    inside = (pts >= -spec.half_width) & (pts < spec.half_width)
    idx = np.nonzero(inside)[0]
    chunk = max(1, 2 ** 22 // N)
    for start in range(0, len(idx), chunk):
        sel = idx[start:start + chunk]
        E = np.exp(1j * np.outer(pts[sel] + spec.half_width, xi))
        out[sel] = (E @ F).real / N
    out = out.reshape((len(pts),) + tuple(np.delete(values.shape, axis)))
    return np.moveaxis(out, 0, axis)


def dilate(f: Field, t: float):
    """(delta_t f)(x) = t^{-n/2} f(t^{-1/2} x)."""
    if not t > 0:
        raise ValueError("dilation parameter must be positive")
    if isinstance(f, GridField):
        pts = f.spec.axis / math.sqrt(t)
        v = f.values
        for ax in range(f.n):
            v = _fourier_eval_axis(v, f.spec, pts, ax)
        out = GridField(f.spec, t ** (-f.n / 2) * v)
        if out.boundary_mass > DEFAULT_TRUST_THRESHOLD:
            _warn_untrusted("dilate", out.boundary_mass, DEFAULT_TRUST_THRESHOLD)
        return out
    rt = math.sqrt(t)
    terms = tuple(
        GaussianTerm(mi.poly_rescale(tm.poly, 1.0 / rt), tm.s * t, tuple(rt * c for c in tm.center), tm.coeff)
        for tm in f.terms
    )
    return GaussianMixtureField(f.n, terms)


def translate(f: Field, h: Sequence[float]):
    """(tau_h f)(x) = f(x - h)."""
    h = tuple(float(c) for c in np.atleast_1d(h))
    if len(h) != f.n:
        raise ValueError("shift dimension mismatch")
    if isinstance(f, GridField):
        if max(abs(c) for c in h) > 0.25 * f.spec.half_width:
            _warn_untrusted("translate (large shift)", 1.0, DEFAULT_TRUST_THRESHOLD)
        xi = f.spec.wavenumbers(real=True)
        phase = np.exp(-1j * sum(k * c for k, c in zip(xi, h)))
        v = np.fft.irfftn(np.fft.rfftn(f.values) * phase, s=f.spec.shape, axes=tuple(range(f.n)))
        out = GridField(f.spec, v)
        if out.boundary_mass > DEFAULT_TRUST_THRESHOLD:
            _warn_untrusted("translate", out.boundary_mass, DEFAULT_TRUST_THRESHOLD)
        return out
    terms = tuple(
        GaussianTerm(tm.poly, tm.s, tuple(c + d for c, d in zip(tm.center, h)), tm.coeff) for tm in f.terms
    )
    return GaussianMixtureField(f.n, terms)


def monomial_mul(f: Field, alpha: Sequence[int], threshold: float = DEFAULT_TRUST_THRESHOLD):
    """Pointwise product x^alpha * f."""
    alpha = mi.validate(alpha, f.n)
    if not any(alpha):
        return f
    if isinstance(f, GridField):
        out = GridField(f.spec, f.values * _monomial_weight(alpha)(f.spec.points_array()))
        if out.boundary_mass > threshold:
            _warn_untrusted("monomial_mul", out.boundary_mass, threshold)
        return out
    terms = tuple(
        GaussianTerm(mi.poly_mul(tm.poly, mi.poly_shift({alpha: 1.0}, tm.center)), tm.s, tm.center, tm.coeff)
        for tm in f.terms
    )
    return GaussianMixtureField(f.n, terms).simplify()


def gaussian_weight_mul(f: Field, eps: float):
    """Pointwise product exp(-eps |x|^2) * f (exact on mixtures)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0:
        return f
    if isinstance(f, GridField):
        x = f.spec.points_array()
        return GridField(f.spec, f.values * np.exp(-eps * np.sum(x * x, axis=-1)))
    terms = []
    for tm in f.terms:
        a = 1.0 / (4.0 * tm.s)
        mu = np.asarray(tm.center)
        new_center = a * mu / (a + eps)
        new_s = 1.0 / (4.0 * (a + eps))
        factor = (new_s / tm.s) ** (f.n / 2) * math.exp(-a * eps / (a + eps) * float(mu @ mu))
        # P(x - mu) rewritten in y' = x - new_center
        poly = mi.poly_shift(tm.poly, tuple(new_center - mu))
        terms.append(GaussianTerm(poly, new_s, tuple(new_center), tm.coeff * factor))
    return GaussianMixtureField(f.n, tuple(terms)).simplify()


def mixture_to_grid(f: GaussianMixtureField, spec: GridSpec) -> GridField:
    if f.n != spec.n:
        raise ValueError("dimension mismatch between mixture and grid")
    if not f.terms:
        return GridField.zeros(spec)
    return GridField(spec, f(spec.points_array()))


def evaluate(f: Field, x) -> np.ndarray:
    """Point values; grid fields are interpolated trigonometrically."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if isinstance(f, GaussianMixtureField):
        return f(x)
    out = []
    for p in x:
        v = f.values
        for ax in range(f.n):
            v = _fourier_eval_axis(v, f.spec, np.array([p[ax]]), ax)
            v = np.take(v, 0, axis=ax) if v.ndim > 1 else v
            v = np.expand_dims(v, ax) if v.ndim < f.n - ax else v
        out.append(float(np.ravel(v)[0]))
    return np.array(out)


# --- serialization ---------------------------------------------------------


def _poly_to_list(p: Mapping) -> list:
    return [{"exponent": list(k), "coeff": float(v)} for k, v in sorted(p.items())]


def field_to_dict(f: Field) -> dict:
    if isinstance(f, GridField):
        return {"backend": "grid", "n": f.n, "spec": f.spec.to_dict(), "values": f.values.ravel().tolist()}
    return {
        "backend": "mixture",
        "n": f.n,
        "terms": [
            {"coeff": t.coeff, "s": t.s, "center": list(t.center), "poly": _poly_to_list(t.poly)}
            for t in f.terms
        ],
    }


def field_from_dict(d: Mapping) -> Field:
    if d["backend"] == "grid":
        spec = GridSpec.from_dict(d["spec"])
        return GridField(spec, np.asarray(d["values"], dtype=float).reshape(spec.shape))
    if d["backend"] == "mixture":
        terms = tuple(
            GaussianTerm({tuple(e["exponent"]): float(e["coeff"]) for e in t["poly"]}, float(t["s"]),
                         tuple(t["center"]), float(t["coeff"]))
            for t in d["terms"]
        )
        return GaussianMixtureField(int(d["n"]), terms)
    raise ValueError(f"unknown backend {d['backend']!r}")


def norms(f: Field, qs: Iterable[float] = (1.0, 2.0, math.inf)) -> Dict[float, float]:
    return {q: lq_norm(f, q) for q in qs}
