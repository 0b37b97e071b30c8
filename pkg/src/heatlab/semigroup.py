"""The heat semigroup e^{t Delta} on both field backends, plus a quadrature oracle.

Mixture terms are propagated through the Hermite basis: a term P(y) G_s(y) is
rewritten as sum_beta d_beta d^beta G_s, each d^beta G_s moves to
d^beta G_{s+t}, and the result is converted back with
d^beta G_s = (-2)^{-|beta|} s^{-|beta|/2} h_beta(y / sqrt s) G_s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from scipy import integrate

from . import fields as fl
from . import multiindex as mi
from .errors import QuadratureError
from .profiles import h_alpha

BACKENDS = ("auto", "spectral", "mixture", "oracle")


@dataclass(frozen=True)
class PropagatorConfig:
    backend: str = "auto"
    tol: float = 1e-10
    padding: int = 1
    threshold: float = fl.DEFAULT_TRUST_THRESHOLD

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if int(self.padding) != self.padding or self.padding < 1:
            raise ValueError("padding factor must be an integer >= 1")


DEFAULT_CONFIG = PropagatorConfig()


# --- mixture backend -------------------------------------------------------


def _gauss_derivative_poly(beta: mi.MultiIndex, s: float) -> Dict[mi.MultiIndex, float]:
    """Polynomial Q with d^beta G_s = Q G_s."""
    k = mi.order(beta)
    h = {a: float(v) for a, v in h_alpha(beta).items()}
    return mi.poly_scale(mi.poly_rescale(h, 1.0 / math.sqrt(s)), (-2.0) ** (-k) * s ** (-k / 2))


def _to_derivative_basis(poly: Dict[mi.MultiIndex, float], s: float) -> Dict[mi.MultiIndex, float]:
    """Coefficients d_beta with P G_s = sum d_beta d^beta G_s."""
    rest = dict(poly)
    out: Dict[mi.MultiIndex, float] = {}
    while rest:
        beta = max(rest, key=lambda a: (mi.order(a), a))
        c = rest[beta]
        k = mi.order(beta)
        # d^beta G_s has leading monomial (-2s)^{-|beta|} y^beta
        d = c * (-2.0 * s) ** k
        out[beta] = out.get(beta, 0.0) + d
        q = _gauss_derivative_poly(beta, s)
        rest = mi.poly_add(rest, q, -d)
        rest.pop(beta, None)
    return out


def _from_derivative_basis(d: Dict[mi.MultiIndex, float], s: float) -> Dict[mi.MultiIndex, float]:
    out: Dict[mi.MultiIndex, float] = {}
    for beta, c in d.items():
        out = mi.poly_add(out, _gauss_derivative_poly(beta, s), c)
    return out


def _propagate_term(term: fl.GaussianTerm, t: float) -> fl.GaussianTerm:
    term = term.normalized()
    d = _to_derivative_basis(dict(term.poly), term.s)
    s_new = term.s + t
    return fl.GaussianTerm(_from_derivative_basis(d, s_new), s_new, term.center)


def _differentiate_term(term: fl.GaussianTerm, j: int) -> fl.GaussianTerm:
    """d_j (P(y) G_s(y)) = (d_j P - y_j P / (2s)) G_s."""
    term = term.normalized()
    n = term.n
    p = mi.poly_add(mi.poly_derivative(term.poly, j),
                    mi.poly_mul(term.poly, {mi.unit(n, j): 1.0}), -1.0 / (2.0 * term.s))
    return fl.GaussianTerm(p, term.s, term.center)


def differentiate(f: fl.GaussianMixtureField, alpha: Sequence[int]) -> fl.GaussianMixtureField:
    """Exact d^alpha of a mixture."""
    alpha = mi.validate(alpha, f.n)
    terms = list(f.terms)
    for j, a in enumerate(alpha):
        for _ in range(a):
            terms = [_differentiate_term(t, j) for t in terms]
    return fl.GaussianMixtureField(f.n, tuple(terms)).simplify()


# --- grid backend ----------------------------------------------------------


def _pad(f: fl.GridField, k: int) -> fl.GridField:
    if k == 1:
        return f
    spec = fl.GridSpec(f.n, f.spec.half_width * k, f.spec.points * k)
    v = np.zeros(spec.shape)
    lo = (spec.points - f.spec.points) // 2
    sl = tuple(slice(lo, lo + f.spec.points) for _ in range(f.n))
    v[sl] = f.values
    return fl.GridField(spec, v)


def _crop(values: np.ndarray, inner: fl.GridSpec, k: int) -> np.ndarray:
    if k == 1:
        return values
    lo = (inner.points * k - inner.points) // 2
    sl = tuple(slice(lo, lo + inner.points) for _ in range(inner.n))
    return values[sl]


def spectral_multiplier(spec: fl.GridSpec, t: float, alpha: Sequence[int] | None = None) -> np.ndarray:
    """e^{-t|xi|^2} (i xi)^alpha in rfftn layout; odd derivatives drop the Nyquist mode."""
    xi = spec.wavenumbers(real=True)
    mult = np.exp(-t * sum(k * k for k in xi)).astype(complex)
    if alpha is not None:
        nyq = math.pi / spec.dx
        for j, a in enumerate(alpha):
            if a:
                mult = mult * (1j * xi[j]) ** a
                if a % 2:
                    mult = np.where(np.isclose(np.abs(xi[j]), nyq), 0.0, mult)
    return mult


def _spectral(f: fl.GridField, t: float, alpha, cfg: PropagatorConfig) -> fl.GridField:
    g = _pad(f, int(cfg.padding))
    mult = spectral_multiplier(g.spec, t, alpha)
    v = np.fft.irfftn(np.fft.rfftn(g.values) * mult, s=g.spec.shape, axes=tuple(range(g.n)))
    out = fl.GridField(f.spec, _crop(v, f.spec, int(cfg.padding)))
    if out.boundary_mass > cfg.threshold:
        fl._warn_untrusted("propagate", out.boundary_mass, cfg.threshold)
    return out


# --- public operations -----------------------------------------------------


def propagate(phi: fl.Field, t: float, config: PropagatorConfig | None = None) -> fl.Field:
    """e^{t Delta} phi; t = 0 returns phi itself."""
    cfg = config or DEFAULT_CONFIG
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return phi
    if isinstance(phi, fl.GridField):
        if cfg.backend not in ("auto", "spectral"):
            raise ValueError(f"backend {cfg.backend!r} cannot propagate a grid field")
        return _spectral(phi, t, None, cfg)
    if cfg.backend not in ("auto", "mixture"):
        raise ValueError(f"backend {cfg.backend!r} cannot propagate a mixture; use mixture_to_grid first")
    return fl.GaussianMixtureField(phi.n, tuple(_propagate_term(tm, t) for tm in phi.terms)).simplify()


def propagate_derivative(phi: fl.Field, alpha: Sequence[int], t: float,
                         config: PropagatorConfig | None = None) -> fl.Field:
    """d^alpha e^{t Delta} phi for t > 0."""
    cfg = config or DEFAULT_CONFIG
    alpha = mi.validate(alpha, phi.n)
    if not t > 0:
        raise ValueError("t must be positive")
    if isinstance(phi, fl.GridField):
        return _spectral(phi, t, alpha, cfg)
    return differentiate(propagate(phi, t, cfg), alpha)


def convolve_oracle(phi: fl.GaussianMixtureField, t: float, x: Sequence[float], tol: float = 1e-10) -> float:
    """(e^{t Delta} phi)(x) by direct quadrature of int G_t(x - y) phi(y) dy."""
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = phi.n
    if len(x) != n:
        raise ValueError("point dimension mismatch")
    r = 12.0 * math.sqrt(max(t, 1.0))
    lo, hi = x - r, x + r
    blo, bhi = phi.bounding_box()
    lo, hi = np.maximum(lo, blo), np.minimum(bhi, hi)
    if np.any(hi <= lo):
        return 0.0
    if n == 1:
        def integrand(y):
            p = np.array([[y]])
            return float(fl.gauss_kernel(x[None, :] - p, t)[0] * phi(p)[0])
        pts = [c for tm in phi.terms for c in tm.center if lo[0] < c < hi[0]]
        if lo[0] < x[0] < hi[0]:
            pts.append(float(x[0]))
        val, err = integrate.quad(integrand, lo[0], hi[0], epsabs=tol, epsrel=tol, limit=500,
                                  points=sorted(set(pts)) or None)
    elif n == 2:
        def integrand(y2, y1):
            p = np.array([[y1, y2]])
            return float(fl.gauss_kernel(x[None, :] - p, t)[0] * phi(p)[0])
        val, err = integrate.dblquad(integrand, lo[0], hi[0], lo[1], hi[1], epsabs=tol, epsrel=tol)
    else:
        raise ValueError("the oracle supports n <= 2")
    if err > 100 * tol * max(1.0, abs(val)):
        raise QuadratureError(f"oracle quadrature error estimate {err:.2e} exceeds tolerance")
    return float(val)


@dataclass(frozen=True)
class SmoothingReport:
    p: float
    q: float
    times: tuple
    ratios: tuple
    max_ratio: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "max_ratio", max(self.ratios, default=0.0))


def smoothing_constant_check(phi: fl.Field, p: float, q: float, t_grid: Sequence[float],
                             config: PropagatorConfig | None = None) -> SmoothingReport:
    """Ratios ||e^{t Delta} phi||_p / [(1+t)^{-(n/2)(1/q-1/p)} (||phi||_q + ||phi||_p)]."""
    if not 1 <= q <= p:
        raise ValueError("need 1 <= q <= p <= inf")
    n = phi.n
    inv = lambda r: 0.0 if math.isinf(r) else 1.0 / r  # noqa: E731
    expo = (n / 2) * (inv(q) - inv(p))
    base = fl.lq_norm(phi, q) + fl.lq_norm(phi, p)
    ratios: List[float] = []
    for t in t_grid:
        if base == 0:
            ratios.append(0.0)
            continue
        num = fl.lq_norm(propagate(phi, t, config), p)
        ratios.append(num / ((1 + t) ** (-expo) * base))
    return SmoothingReport(float(p), float(q), tuple(float(t) for t in t_grid), tuple(ratios))


def lp_lq_bound(phi: fl.Field, p: float, q: float, t: float, alpha: Sequence[int] | None = None) -> float:
    """t^{-(n/2)(1/q-1/p)-|alpha|/2} ||d^alpha G_1||_r ||phi||_q with 1 + 1/p = 1/r + 1/q."""
    from .profiles import gauss_derivative_profile

    n = phi.n
    alpha = mi.validate(alpha if alpha is not None else (0,) * n, n)
    inv = lambda r: 0.0 if math.isinf(r) else 1.0 / r  # noqa: E731
    if inv(p) > inv(q):
        raise ValueError("need q <= p")
    inv_r = 1.0 + inv(p) - inv(q)
    r = math.inf if inv_r == 0 else 1.0 / inv_r
    kern = fl.lq_norm(gauss_derivative_profile(alpha), r)
    return t ** (-(n / 2) * (inv(q) - inv(p)) - mi.order(alpha) / 2) * kern * fl.lq_norm(phi, q)

