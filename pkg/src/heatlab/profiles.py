"""Hermite polynomials, Gauss-kernel derivative profiles and the dilated
asymptotic expansion of the heat semigroup.

The expansion of order m is

    sum_{k<=m} 2^{-k} t^{-k/2} sum_{|alpha|=k} c_alpha delta_t(h_alpha G_1),
    c_alpha = (1/alpha!) int y^alpha phi(y) dy,

and the remainder satisfies, after multiplying by t^{(n/2)(1-1/q)},

    <= 2^{-(m+1)} t^{-(m+1)/2} sum_{|alpha|=m+1} (1/alpha!) ||h_alpha G_1||_q ||x^alpha phi||_1.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping

from . import fields as fl
from . import multiindex as mi


def hermite_1d(k: int) -> List[int]:
    """Integer coefficients of H_k (index = degree), by the explicit finite sum."""
    if k < 0:
        raise ValueError("Hermite order must be nonnegative")
    coeffs = [0] * (k + 1)
    for j in range(k // 2 + 1):
        c = (-1) ** j * math.factorial(k) // (math.factorial(j) * math.factorial(k - 2 * j))
        coeffs[k - 2 * j] += c * 2 ** (k - 2 * j)
    return coeffs


def h_alpha(alpha) -> Dict[mi.MultiIndex, int]:
    """h_alpha(x) = H_alpha(x/2) as an exact integer polynomial."""
    alpha = mi.validate(alpha)
    out: Dict[mi.MultiIndex, int] = {}
    afact = mi.factorial(alpha)
    for beta in mi.below(tuple(a // 2 for a in alpha)):
        rest = tuple(a - 2 * b for a, b in zip(alpha, beta))
        c = (-1) ** sum(beta) * afact // (mi.factorial(beta) * mi.factorial(rest))
        out[rest] = out.get(rest, 0) + c
    return mi.poly_clean(out)


def gauss_derivative_profile(alpha) -> fl.GaussianMixtureField:
    """d^alpha G_1 = (-2)^{-|alpha|} h_alpha G_1."""
    alpha = mi.validate(alpha)
    n = len(alpha)
    poly = mi.poly_scale(h_alpha(alpha), (-2.0) ** (-mi.order(alpha)))
    return fl.GaussianMixtureField(n, (fl.GaussianTerm(poly, 1.0, (0.0,) * n),))


def hermite_profile(alpha) -> fl.GaussianMixtureField:
    """h_alpha G_1."""
    alpha = mi.validate(alpha)
    n = len(alpha)
    poly = {k: float(v) for k, v in h_alpha(alpha).items()}
    return fl.GaussianMixtureField(n, (fl.GaussianTerm(poly, 1.0, (0.0,) * n),))


@functools.lru_cache(maxsize=None)
def _profile_norm(alpha: tuple, q: float) -> float:
    return fl.lq_norm(hermite_profile(alpha), q)


def profile_norm(alpha, q: float) -> float:
    """||h_alpha G_1||_q (cached)."""
    return _profile_norm(mi.validate(alpha), float(q))


@dataclass(frozen=True)
class ExpansionProfile:
    """Moments int y^alpha phi for |alpha| <= m; c_alpha divides by alpha!."""

    n: int
    m: int
    moments: Mapping[mi.MultiIndex, float]

    def __post_init__(self):
        missing = [a for a in mi.up_to_order(self.n, self.m) if a not in self.moments]
        if missing:
            raise ValueError(f"expansion profile is missing moments for {missing}")

    @property
    def coefficients(self) -> Dict[mi.MultiIndex, float]:
        return {a: self.moments[a] / mi.factorial(a) for a in mi.up_to_order(self.n, self.m)}

    def to_dict(self) -> dict:
        c = self.coefficients
        return {
            "n": self.n,
            "m": self.m,
            "entries": [{"alpha": list(a), "c_alpha": c[a], "moment": self.moments[a]}
                        for a in mi.up_to_order(self.n, self.m)],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExpansionProfile":
        moments = {}
        for e in d["entries"]:
            a = tuple(e["alpha"])
            moments[a] = e["moment"] if "moment" in e else e["c_alpha"] * mi.factorial(a)
        return cls(int(d["n"]), int(d["m"]), moments)

    @classmethod
    def from_coefficients(cls, n: int, m: int, coeffs: Mapping) -> "ExpansionProfile":
        return cls(n, m, {a: coeffs.get(a, 0.0) * mi.factorial(a) for a in mi.up_to_order(n, m)})


def build_expansion(phi: fl.Field, m: int) -> ExpansionProfile:
    if m < 0:
        raise ValueError("expansion order must be nonnegative")
    moments = {a: fl.signed_moment(phi, a) for a in mi.up_to_order(phi.n, m)}
    return ExpansionProfile(phi.n, m, moments)


def eval_expansion(profile: ExpansionProfile, t: float) -> fl.GaussianMixtureField:
    """The expansion at time t as an exact mixture; delta_t(h_alpha G_1)(x) = h_alpha(x/sqrt t) G_t(x)."""
    if not t > 0:
        raise ValueError("t must be positive")
    n = profile.n
    rt = math.sqrt(t)
    poly: Dict[mi.MultiIndex, float] = {}
    for alpha, c in profile.coefficients.items():
        if c == 0:
            continue
        k = mi.order(alpha)
        scale = c * 2.0 ** (-k) * t ** (-k / 2)
        h = mi.poly_rescale({a: float(v) for a, v in h_alpha(alpha).items()}, 1.0 / rt)
        poly = mi.poly_add(poly, h, scale)
    if not poly:
        return fl.GaussianMixtureField.zero(n)
    return fl.GaussianMixtureField(n, (fl.GaussianTerm(poly, t, (0.0,) * n),))


def expansion_remainder(phi: fl.Field, m: int, t: float, q: float, profile: ExpansionProfile | None = None) -> float:
    """||e^{t Delta} phi - expansion_m(t)||_q (unscaled)."""
    from .semigroup import propagate

    profile = profile if profile is not None else build_expansion(phi, m)
    approx = eval_expansion(profile, t)
    evolved = propagate(phi, t)
    if isinstance(evolved, fl.GridField):
        diff = evolved - fl.mixture_to_grid(approx, evolved.spec)
    else:
        diff = evolved - approx
    return fl.lq_norm(diff, q)


def scaled_expansion_remainder(phi: fl.Field, m: int, t: float, q: float,
                               profile: ExpansionProfile | None = None) -> float:
    return t ** (phi.n / 2 * (1 - 1 / q)) * expansion_remainder(phi, m, t, q, profile)


def expansion_bound(phi: fl.Field, m: int, t: float, q: float) -> float:
    """Right-hand side of the m-th order remainder estimate (for the scaled remainder)."""
    total = 0.0
    for alpha in mi.of_order(phi.n, m + 1):
        total += profile_norm(alpha, q) * fl.weighted_l1_moment(phi, alpha) / mi.factorial(alpha)
    return 2.0 ** (-(m + 1)) * t ** (-(m + 1) / 2) * total
