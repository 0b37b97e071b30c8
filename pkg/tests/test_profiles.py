import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from heatlab import fields as fl
from heatlab import multiindex as mi
from heatlab import profiles as pr

X = sp.Symbol("x")


@pytest.mark.parametrize("k", range(9))
def test_hermite_matches_rodrigues(k):
    # Rodrigues: H_k(x) = (-1)^k e^{x^2} d^k/dx^k e^{-x^2}
    rod = sp.Poly(sp.expand(sp.simplify((-1) ** k * sp.exp(X ** 2) * sp.diff(sp.exp(-X ** 2), X, k))), X)
    want = [int(rod.coeff_monomial(X ** j)) for j in range(k + 1)]
    assert pr.hermite_1d(k) == want


@pytest.mark.parametrize("alpha", [(0,), (1,), (3,), (2, 1), (1, 2), (0, 3), (2, 2)])
def test_gauss_derivative_profile_symbolic(alpha):
    n = len(alpha)
    xs = sp.symbols(f"x0:{n}")
    G = (4 * sp.pi) ** sp.Rational(-n, 2) * sp.exp(-sum(v ** 2 for v in xs) / 4)
    d = G
    for v, a in zip(xs, alpha):
        d = sp.diff(d, v, a)
    f = sp.lambdify(xs, d, "numpy")
    rng = np.random.default_rng(1)
    pts = rng.normal(scale=2.0, size=(7, n))
    got = np.ravel(pr.gauss_derivative_profile(alpha)(pts if n > 1 else pts[:, 0]))
    want = np.array([f(*p) for p in pts], dtype=float)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-15)


def test_h_alpha_is_product_of_rescaled_hermite():
    for alpha in [(2, 3), (4, 0), (1, 1)]:
        h = pr.h_alpha(alpha)
        pts = np.array([[0.3, -1.2], [2.0, 0.5]])
        val = mi.poly_eval(h, pts)
        want = [math.prod(np.polynomial.polynomial.polyval(p / 2, pr.hermite_1d(a)) for p, a in zip(pt, alpha))
                for pt in pts]
        assert np.allclose(val, want)


def test_profile_norms_known_values():
    assert pr.profile_norm((0,), 1) == pytest.approx(1.0, abs=1e-10)
    # h_1 G_1 = x G_1, ||x G_1||_1 = 2 / sqrt(pi)
    assert pr.profile_norm((1,), 1) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-9)


def test_expansion_exact_for_centered_gaussian():
    # G_s propagates to G_{s+t}: c_0 = 1, c_1 = 0, c_2 = (s-1)... check remainder decays at order m+1
    phi = fl.GaussianMixtureField.gauss(1, 1.5)
    prof = pr.build_expansion(phi, 0)
    assert prof.coefficients[(0,)] == pytest.approx(1.0)
    r1 = pr.scaled_expansion_remainder(phi, 0, 1e2, 1.0)
    r2 = pr.scaled_expansion_remainder(phi, 0, 1e4, 1.0)
    # zero first moment, so the m=0 remainder is driven by the second moment: t^{-1}
    assert math.log(r2 / r1) / math.log(100) == pytest.approx(-1.0, abs=0.02)


def test_expansion_round_trip():
    phi = fl.GaussianMixtureField.gauss(2, 1.0, (0.5, -0.3), 0.8)
    prof = pr.build_expansion(phi, 2)
    back = pr.ExpansionProfile.from_dict(prof.to_dict())
    assert back.coefficients == pytest.approx(prof.coefficients)
    with pytest.raises(ValueError):
        pr.ExpansionProfile(1, 1, {(0,): 1.0})


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.5, 2.0), st.integers(0, 2), st.sampled_from([1.0, 2.0, math.inf]),
       st.floats(1.0, 400.0))
def test_remainder_below_bound(mu, s, m, q, t):
    phi = fl.GaussianMixtureField.gauss(1, s, (mu,))
    got = pr.scaled_expansion_remainder(phi, m, t, q)
    assert got <= pr.expansion_bound(phi, m, t, q) * (1 + 1e-8) + 1e-14
