"""Multi-indices and sparse multivariate polynomials.

Multi-indices are plain tuples of nonnegative ints.  Polynomials are dicts
mapping a multi-index (the exponent) to a coefficient; the coefficient type is
whatever the caller puts in (int, Fraction or float), and the helpers keep it.
"""
from __future__ import annotations

import itertools
import math
from typing import Dict, Iterator, Mapping, Sequence, Tuple

import numpy as np

MultiIndex = Tuple[int, ...]
Poly = Dict[MultiIndex, object]


def zero(n: int) -> MultiIndex:
    return (0,) * n


def unit(n: int, j: int) -> MultiIndex:
    return tuple(1 if k == j else 0 for k in range(n))


def order(alpha: Sequence[int]) -> int:
    return sum(alpha)


def factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def leq(alpha: Sequence[int], beta: Sequence[int]) -> bool:
    """Componentwise partial order."""
    return all(a <= b for a, b in zip(alpha, beta))


def add(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def sub(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    out = tuple(a - b for a, b in zip(alpha, beta))
    if any(c < 0 for c in out):
        raise ValueError(f"{tuple(beta)} is not <= {tuple(alpha)}")
    return out


def binom(alpha: Sequence[int], beta: Sequence[int]) -> int:
    """Multi-index binomial; zero unless beta <= alpha."""
    if not leq(beta, alpha):
        return 0
    return math.prod(math.comb(a, b) for a, b in zip(alpha, beta))


def validate(alpha: Sequence[int], n: int | None = None) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index entries must be nonnegative: {alpha}")
    if n is not None and len(alpha) != n:
        raise ValueError(f"multi-index {alpha} has length {len(alpha)}, expected {n}")
    return alpha


def of_order(n: int, k: int) -> Iterator[MultiIndex]:
    """All multi-indices of length n with |alpha| = k, in lexicographic order (descending first entry)."""
    if n == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in of_order(n - 1, k - first):
            yield (first,) + rest


def up_to_order(n: int, m: int) -> Iterator[MultiIndex]:
    for k in range(m + 1):
        yield from of_order(n, k)


def below(alpha: Sequence[int]) -> Iterator[MultiIndex]:
    """All beta <= alpha."""
    return itertools.product(*(range(a + 1) for a in alpha))


# --- polynomials -----------------------------------------------------------


def poly_clean(p: Mapping[MultiIndex, object]) -> Poly:
    return {k: v for k, v in p.items() if v != 0}


def poly_add(p: Mapping, q: Mapping, scale=1) -> Poly:
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, 0) + scale * v
    return poly_clean(out)


def poly_scale(p: Mapping, c) -> Poly:
    return poly_clean({k: c * v for k, v in p.items()})


def poly_mul(p: Mapping, q: Mapping) -> Poly:
    out: Poly = {}
    for a, u in p.items():
        for b, v in q.items():
            key = add(a, b)
            out[key] = out.get(key, 0) + u * v
    return poly_clean(out)


def poly_monomial(alpha: Sequence[int], c=1) -> Poly:
    return {tuple(alpha): c}


def poly_degree(p: Mapping) -> int:
    return max((order(k) for k in p), default=0)


def poly_shift(p: Mapping, d: Sequence[float]) -> Poly:
    """Return q with q(y) = p(y + d)."""
    if not any(d):
        return dict(p)
    out: Poly = {}
    for gamma, c in p.items():
        # (y + d)^gamma expands axis by axis
        factors = [
            [(k, math.comb(g, k) * dj ** (g - k)) for k in range(g + 1)]
            for g, dj in zip(gamma, d)
        ]
        for combo in itertools.product(*factors):
            key = tuple(k for k, _ in combo)
            coef = c * math.prod(w for _, w in combo)
            out[key] = out.get(key, 0) + coef
    return poly_clean(out)


def poly_rescale(p: Mapping, lam: float) -> Poly:
    """Return q with q(y) = p(lam * y)."""
    return poly_clean({k: v * lam ** order(k) for k, v in p.items()})


def poly_derivative(p: Mapping, j: int) -> Poly:
    out: Poly = {}
    for gamma, c in p.items():
        if gamma[j] == 0:
            continue
        key = gamma[:j] + (gamma[j] - 1,) + gamma[j + 1:]
        out[key] = out.get(key, 0) + c * gamma[j]
    return poly_clean(out)


def poly_eval(p: Mapping, y: np.ndarray) -> np.ndarray:
    """Evaluate at points y of shape (..., n)."""
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.shape[:-1])
    if not p:
        return out
    n = y.shape[-1]
    deg = [max(k[j] for k in p) for j in range(n)]
    powers = []
    for j in range(n):
        col = y[..., j]
        pw = [np.ones_like(col)]
        for _ in range(deg[j]):
            pw.append(pw[-1] * col)
        powers.append(pw)
    for gamma, c in p.items():
        term = float(c) * np.ones_like(out)
        for j, g in enumerate(gamma):
            if g:
                term = term * powers[j][g]
        out += term
    return out
