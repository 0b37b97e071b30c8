import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatlab import fields as fl
from heatlab import semigroup as sg

G = fl.GaussianMixtureField.gauss


def test_semigroup_on_gaussians():
    for t in (0.5, 3.0):
        out = sg.propagate(G(1, 1.0), t)
        x = np.linspace(-8, 8, 17)
        assert np.allclose(out(x), G(1, 1.0 + t)(x), atol=1e-15)
    assert sg.propagate(G(1), 0.0) == G(1)
    with pytest.raises(ValueError):
        sg.propagate(G(1), -1.0)


def test_mixture_against_quadrature_oracle():
    phi = G(1, 0.7, (0.4,), 1.3) + fl.monomial_mul(G(1, 1.2, (-1.0,)), (2,))
    out = sg.propagate(phi, 2.5)
    for x in (-3.0, -0.2, 1.1, 4.0):
        assert float(np.ravel(out(np.array([x])))[0]) == pytest.approx(sg.convolve_oracle(phi, 2.5, [x]), abs=1e-11)


def test_mixture_against_oracle_2d():
    phi = fl.monomial_mul(G(2, 0.8, (0.3, -0.2)), (1, 1))
    out = sg.propagate(phi, 1.5)
    x = [0.4, 0.9]
    assert float(np.ravel(out(np.array([x])))[0]) == pytest.approx(sg.convolve_oracle(phi, 1.5, x), abs=1e-9)


def test_semigroup_property_and_grid_agreement():
    phi = G(1, 0.7, (0.4,), 1.3) + fl.monomial_mul(G(1, 1.2, (-1.0,)), (1,))
    a = sg.propagate(sg.propagate(phi, 1.0), 2.0)
    b = sg.propagate(phi, 3.0)
    x = np.linspace(-6, 6, 13)
    assert np.allclose(a(x), b(x), atol=1e-14)
    spec = fl.GridSpec(1, 40.0, 1024)
    grid = sg.propagate(fl.mixture_to_grid(phi, spec), 3.0)
    assert np.max(np.abs(grid.values - fl.mixture_to_grid(b, spec).values)) < 1e-12


def test_derivatives_commute_with_semigroup():
    phi = G(1, 0.9, (0.2,))
    spec = fl.GridSpec(1, 40.0, 1024)
    m = sg.propagate_derivative(phi, (2,), 1.3)
    g = sg.propagate_derivative(fl.mixture_to_grid(phi, spec), (2,), 1.3)
    assert np.max(np.abs(g.values - fl.mixture_to_grid(m, spec).values)) < 1e-12
    # d^2 e^{t Delta} G_s = Laplacian of G_{s+t}
    x = np.linspace(-4, 4, 9)
    s = 2.2
    y = x - 0.2
    want = G(1, s, (0.2,))(x) * (y ** 2 / (4 * s * s) - 1 / (2 * s))
    assert np.allclose(m(x), want, atol=1e-15)


def test_mass_is_conserved():
    phi = G(1, 0.7, (0.4,), 1.3)
    for t in (1.0, 10.0, 100.0):
        assert fl.signed_moment(sg.propagate(phi, t), (0,)) == pytest.approx(1.3, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(1.0, 1.0), (2.0, 1.0), (math.inf, 1.0), (math.inf, 2.0), (4.0, 2.0)]),
       st.floats(0.05, 50.0), st.floats(0.3, 3.0))
def test_lp_lq_smoothing(pq, t, s):
    p, q = pq
    phi = G(1, s, (0.5,)) + G(1, 0.5 * s, (-1.0,), 0.5)
    got = fl.lq_norm(sg.propagate(phi, t), p)
    assert got <= sg.lp_lq_bound(phi, p, q, t) * (1 + 1e-8)


def test_smoothing_constant_is_order_one():
    rep = sg.smoothing_constant_check(G(1), math.inf, 1.0, [0.1, 1.0, 10.0, 100.0])
    assert 0 < rep.max_ratio < 2.0
    with pytest.raises(ValueError):
        sg.smoothing_constant_check(G(1), 1.0, 2.0, [1.0])
