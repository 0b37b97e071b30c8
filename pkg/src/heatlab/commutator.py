"""Commutators of the heat semigroup with monomial weights.

R_alpha(t) = x^alpha e^{t Delta} - e^{t Delta} x^alpha is built as a finite sum of
terms  c t^l d^beta e^{t Delta} x^gamma  with exact rational c, using

    R_{e_j} = -2t d_j e^{t Delta},
    R_{alpha + e_j} = -2t d_j e^{t Delta} x^alpha + x_j R_alpha,

where x_j is pushed through each term by

    x_j t^l d^beta e^{tD} x^g = t^l d^beta e^{tD} x^{g+e_j}
                                - 2 t^{l+1} d^{beta+e_j} e^{tD} x^g
                                - beta_j t^l d^{beta-e_j} e^{tD} x^g.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import fields as fl
from . import multiindex as mi
from .semigroup import propagate, propagate_derivative


@dataclass(frozen=True)
class CommutatorTerm:
    """coeff * t^ell * d^beta e^{t Delta} x^gamma."""

    coeff: Fraction
    ell: int
    beta: mi.MultiIndex
    gamma: mi.MultiIndex

    @property
    def key(self) -> Tuple[int, mi.MultiIndex, mi.MultiIndex]:
        return (self.ell, self.beta, self.gamma)


def term_class(term: CommutatorTerm, alpha: Sequence[int]) -> str | None:
    """'first', 'second', or None when the term fits neither admissible class for alpha."""
    alpha = tuple(alpha)
    b, g, a = mi.order(term.beta), mi.order(term.gamma), mi.order(alpha)
    if mi.add(term.beta, term.gamma) == alpha and b > 0 and term.ell == b:
        return "first"
    bg = mi.add(term.beta, term.gamma)
    if mi.leq(bg, alpha) and b + g <= a - 2 and b + 1 <= term.ell and 2 * term.ell <= a + b - g:
        return "second"
    return None


def first_class_coefficient(alpha, beta) -> Fraction:
    """alpha!/(beta! gamma!) (-2)^{|beta|} with gamma = alpha - beta."""
    gamma = mi.sub(alpha, beta)
    return Fraction(mi.factorial(alpha), mi.factorial(beta) * mi.factorial(gamma)) * (-2) ** mi.order(beta)


@dataclass(frozen=True)
class CommutatorExpansion:
    alpha: mi.MultiIndex
    terms: Tuple[CommutatorTerm, ...]

    def as_dict(self) -> Dict[tuple, Fraction]:
        return {t.key: t.coeff for t in self.terms}

    def violations(self) -> List[CommutatorTerm]:
        out = []
        for t in self.terms:
            cls = term_class(t, self.alpha)
            if cls is None:
                out.append(t)
            elif cls == "first" and t.coeff != first_class_coefficient(self.alpha, t.beta):
                out.append(t)
        return out

    def to_dict(self) -> dict:
        return {
            "alpha": list(self.alpha),
            "terms": [
                {"coeff_num": t.coeff.numerator, "coeff_den": t.coeff.denominator, "ell": t.ell,
                 "beta": list(t.beta), "gamma": list(t.gamma)}
                for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "CommutatorExpansion":
        terms = tuple(
            CommutatorTerm(Fraction(e["coeff_num"], e["coeff_den"]), int(e["ell"]), tuple(e["beta"]),
                           tuple(e["gamma"]))
            for e in d["terms"]
        )
        return cls(tuple(d["alpha"]), terms)


def merge(terms: Iterable[CommutatorTerm]) -> Tuple[CommutatorTerm, ...]:
    acc: Dict[tuple, Fraction] = {}
    for t in terms:
        acc[t.key] = acc.get(t.key, Fraction(0)) + t.coeff
    return tuple(CommutatorTerm(c, *k) for k, c in sorted(acc.items()) if c != 0)


def multiply_xj(terms: Iterable[CommutatorTerm], j: int) -> List[CommutatorTerm]:
    """x_j applied to each term, unmerged."""
    out: List[CommutatorTerm] = []
    for t in terms:
        n = len(t.beta)
        ej = mi.unit(n, j)
        out.append(CommutatorTerm(t.coeff, t.ell, t.beta, mi.add(t.gamma, ej)))
        out.append(CommutatorTerm(-2 * t.coeff, t.ell + 1, mi.add(t.beta, ej), t.gamma))
        if t.beta[j] >= 1:
            out.append(CommutatorTerm(-t.beta[j] * t.coeff, t.ell, mi.sub(t.beta, ej), t.gamma))
    return out


def _peel_axis(alpha: mi.MultiIndex, peel: str) -> int:
    nz = [j for j, a in enumerate(alpha) if a]
    return nz[0] if peel == "lowest" else nz[-1]


def build_r_alpha(alpha: Sequence[int], peel: str = "lowest") -> CommutatorExpansion:
    """R_alpha by the recursion; ``peel`` picks which axis is split off at each step."""
    alpha = mi.validate(alpha)
    if mi.order(alpha) < 1:
        raise ValueError("R_alpha needs |alpha| >= 1")
    if peel not in ("lowest", "highest"):
        raise ValueError("peel must be 'lowest' or 'highest'")
    n = len(alpha)
    j = _peel_axis(alpha, peel)
    ej = mi.unit(n, j)
    prev = mi.sub(alpha, ej)
    head = CommutatorTerm(Fraction(-2), 1, ej, prev)
    if mi.order(prev) == 0:
        return CommutatorExpansion(alpha, (head,))
    inner = build_r_alpha(prev, peel)
    return CommutatorExpansion(alpha, merge([head] + multiply_xj(inner.terms, j)))


def _sum_fields(parts: List[fl.Field], n: int, like: fl.Field) -> fl.Field:
    if isinstance(like, fl.GridField):
        total = np.zeros(like.spec.shape)
        for p in parts:
            total = total + p.values
        return fl.GridField(like.spec, total)
    total = fl.GaussianMixtureField.zero(n)
    for p in parts:
        total = total + p
    return total


def eval_expansion_terms(exp: CommutatorExpansion, phi: fl.Field, t: float) -> fl.Field:
    """sum c t^l d^beta e^{t Delta} (x^gamma phi)."""
    if not t > 0:
        raise ValueError("commutator terms are evaluated for t > 0 only")
    parts = []
    for term in exp.terms:
        weighted = fl.monomial_mul(phi, term.gamma)
        parts.append(propagate_derivative(weighted, term.beta, t) * (float(term.coeff) * t ** term.ell))
    return _sum_fields(parts, phi.n, phi)


def commutator_direct(phi: fl.Field, alpha: Sequence[int], t: float) -> fl.Field:
    """x^alpha e^{t Delta} phi - e^{t Delta} x^alpha phi."""
    if not t > 0:
        raise ValueError("commutator is evaluated for t > 0 only")
    alpha = mi.validate(alpha, phi.n)
    return fl.monomial_mul(propagate(phi, t), alpha) - propagate(fl.monomial_mul(phi, alpha), t)


def identity_residual(phi: fl.Field, alpha: Sequence[int], t: float, peel: str = "lowest") -> float:
    """||direct - expansion||_1 / ||x^alpha phi||_1."""
    diff = commutator_direct(phi, alpha, t) - eval_expansion_terms(build_r_alpha(alpha, peel), phi, t)
    # only the size of the ratio matters, so the coarse mesh sum serves for both norms
    scale = fl.residual_norm(fl.monomial_mul(phi, alpha), 1)
    return fl.residual_norm(diff, 1) / scale


# --- estimates -------------------------------------------------------------


@dataclass(frozen=True)
class EstimateReport:
    m: int
    times: Tuple[float, ...]
    lhs: Tuple[float, ...]
    rhs: Tuple[float, ...]

    @property
    def ratios(self) -> Tuple[float, ...]:
        return tuple(a / b if b > 0 else 0.0 for a, b in zip(self.lhs, self.rhs))

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)

    def to_rows(self) -> List[dict]:
        return [{"t": t, "lhs": a, "rhs": b, "ratio": r}
                for t, a, b, r in zip(self.times, self.lhs, self.rhs, self.ratios)]


def verify_commutator_estimate(phi: fl.Field, m: int, t_grid: Sequence[float]) -> EstimateReport:
    """LHS = sum_{|alpha|=m} ||commutator||_1 against t^{1/2}|| |x|^{m-1} phi ||_1 + (t^{1/2} + t^{m/2})||phi||_1."""
    if m < 1:
        raise ValueError("m must be >= 1")
    radial = fl.radial_weighted_l1(phi, m - 1)
    mass = fl.lq_norm(phi, 1)
    lhs, rhs = [], []
    for t in t_grid:
        lhs.append(sum(fl.lq_norm(commutator_direct(phi, a, t), 1) for a in mi.of_order(phi.n, m)))
        rhs.append(math.sqrt(t) * radial + (math.sqrt(t) + t ** (m / 2)) * mass)
    return EstimateReport(m, tuple(map(float, t_grid)), tuple(lhs), tuple(rhs))


def verify_moment_estimate(phi: fl.Field, m: int, t_grid: Sequence[float]) -> EstimateReport:
    """LHS = sum_{|alpha|=m} ||x^alpha e^{t Delta} phi||_1 against || |x|^m phi ||_1 + t^{m/2} ||phi||_1."""
    radial = fl.radial_weighted_l1(phi, m)
    mass = fl.lq_norm(phi, 1)
    lhs, rhs = [], []
    for t in t_grid:
        evolved = propagate(phi, t)
        lhs.append(sum(fl.weighted_l1_moment(evolved, a) for a in mi.of_order(phi.n, m)))
        rhs.append(radial + t ** (m / 2) * mass)
    return EstimateReport(m, tuple(map(float, t_grid)), tuple(lhs), tuple(rhs))


# --- weight windows --------------------------------------------------------


@dataclass(frozen=True)
class WeightWindow:
    """w(x) = x_j exp(-eps |x|^2); ``constant=True`` gives the degenerate window w = 1."""

    n: int
    j: int
    eps: float
    constant: bool = False

    def __post_init__(self):
        if not 0 <= self.j < self.n:
            raise ValueError("axis out of range")
        if not self.constant and not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.constant:
            return np.ones(x.shape[:-1])
        return x[..., self.j] * np.exp(-self.eps * np.sum(x * x, axis=-1))

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.constant:
            return np.zeros_like(x)
        e = np.exp(-self.eps * np.sum(x * x, axis=-1))[..., None]
        g = -2.0 * self.eps * x[..., self.j][..., None] * x
        g[..., self.j] += 1.0
        return e * g

    def laplacian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.constant:
            return np.zeros(x.shape[:-1])
        r2 = np.sum(x * x, axis=-1)
        xj = x[..., self.j]
        return np.exp(-self.eps * r2) * (4 * self.eps ** 2 * xj * r2 - 2 * (self.n + 2) * self.eps * xj)

    @property
    def grad_bound(self) -> float:
        return 0.0 if self.constant else 2.0

    @property
    def laplacian_bound(self) -> float:
        return 0.0 if self.constant else (self.n + 4) * math.sqrt(self.eps)

    def apply(self, phi: fl.Field) -> fl.Field:
        if self.constant:
            return phi
        return fl.monomial_mul(fl.gaussian_weight_mul(phi, self.eps), mi.unit(self.n, self.j))


def window_sup_norms(window: WeightWindow) -> Tuple[float, float]:
    """(||grad w||_inf, ||Lap w||_inf) by direct maximisation.

    Both functions depend on x only through x_j and the orthogonal radius, so
    the search runs over the (x_j, r_perp) half-plane.
    """
    if window.constant:
        return 0.0, 0.0
    n, j = window.n, window.j
    scale = 1.0 / math.sqrt(window.eps)

    def embed(z):
        x = np.zeros(n)
        x[j] = z[0]
        if n > 1:
            x[(j + 1) % n] = z[1]
        return x

    def maximise(fn):
        k = 2 if n > 1 else 1
        axes = [np.linspace(-4 * scale, 4 * scale, 401)] + ([np.linspace(0, 4 * scale, 201)] if k == 2 else [])
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
        full = np.zeros((len(pts), n))
        full[:, j] = pts[:, 0]
        if k == 2:
            full[:, (j + 1) % n] = pts[:, 1]
        vals = fn(full)
        best = pts[int(np.argmax(vals))]
        res = optimize.minimize(lambda z: -float(fn(embed(z)[None, :])[0]), best, method="Nelder-Mead",
                                options={"xatol": 1e-13, "fatol": 1e-16, "maxiter": 10000})
        return max(float(vals.max()), -float(res.fun))

    g = maximise(lambda x: np.linalg.norm(window.grad(x), axis=-1))
    lap = maximise(lambda x: np.abs(window.laplacian(x)))
    return g, lap


def grad_g1_l1(n: int) -> float:
    """|| |grad G_1| ||_1 = Gamma((n+1)/2) / Gamma(n/2), since |grad G_1| = |x| G_1 / 2."""
    return math.gamma((n + 1) / 2) / math.gamma(n / 2)


def weighted_window_commutator(phi: fl.Field, window: WeightWindow, t: float) -> Tuple[float, float]:
    """(||w e^{t Delta} phi - e^{t Delta}(w phi)||_1, analytic bound)."""
    if not t > 0:
        raise ValueError("t must be positive")
    value = fl.lq_norm(window.apply(propagate(phi, t)) - propagate(window.apply(phi), t), 1)
    bound = (window.laplacian_bound * t + window.grad_bound * grad_g1_l1(phi.n) * math.sqrt(t)) * fl.lq_norm(phi, 1)
    return value, bound
