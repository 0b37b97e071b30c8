import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatlab import commutator as cm
from heatlab import fields as fl
from heatlab import multiindex as mi
from heatlab import semigroup as sg

GOLDEN = Path(__file__).parent / "golden" / "r_alpha"
G = fl.GaussianMixtureField.gauss


def _golden_files():
    return sorted(GOLDEN.glob("*.json"))


@pytest.mark.parametrize("path", _golden_files(), ids=lambda p: p.stem)
def test_recursion_matches_golden(path):
    stored = cm.CommutatorExpansion.from_dict(json.loads(path.read_text()))
    built = cm.build_r_alpha(stored.alpha)
    assert built.as_dict() == stored.as_dict()


def test_golden_set_is_complete():
    assert len(_golden_files()) == 13


def test_first_order_closed_form():
    r = cm.build_r_alpha((0, 1))
    assert r.as_dict() == {(1, (0, 1), (0, 0)): Fraction(-2)}


def test_second_order_closed_form():
    # x^2 e^{tD} - e^{tD} x^2 = 2t e^{tD} - 4t d e^{tD} x + 4t^2 d^2 e^{tD}
    assert cm.build_r_alpha((2,)).as_dict() == {
        (1, (0,), (0,)): Fraction(2),
        (1, (1,), (1,)): Fraction(-4),
        (2, (2,), (0,)): Fraction(4),
    }


@pytest.mark.parametrize("alpha", [(2,), (1, 1), (0, 2)])
def test_r2_against_quadrature_oracle(alpha):
    # brute force: x^alpha (G_t * phi) - G_t * (x^alpha phi), both convolutions by quadrature
    n = len(alpha)
    phi = G(n, 0.8, (0.3,) * n, 1.2)
    t = 1.7
    r = cm.eval_expansion_terms(cm.build_r_alpha(alpha), phi, t)
    weighted = fl.monomial_mul(phi, alpha)
    for x in ([0.4, -0.7][:n], [1.5, 0.2][:n]):
        xa = math.prod(v ** a for v, a in zip(x, alpha))
        want = xa * sg.convolve_oracle(phi, t, x) - sg.convolve_oracle(weighted, t, x)
        got = float(np.ravel(r(np.array([x]) if n > 1 else np.array(x)))[0])
        assert got == pytest.approx(want, abs=1e-8)


@pytest.mark.parametrize("n,top", [(1, 6), (2, 4), (3, 3)])
def test_all_terms_admissible(n, top):
    for alpha in mi.up_to_order(n, top):
        if mi.order(alpha) == 0:
            continue
        exp = cm.build_r_alpha(alpha)
        assert exp.violations() == []
        # every first-class term is present with its binomial coefficient
        firsts = {t.beta: t.coeff for t in exp.terms if cm.term_class(t, alpha) == "first"}
        for beta in mi.below(alpha):
            if mi.order(beta) > 0:
                assert firsts[beta] == cm.first_class_coefficient(alpha, beta)


def test_no_first_order_remainder_for_linear_weight():
    # for |alpha| = 1 the expansion is only the first-class term
    for alpha in [(1,), (1, 0), (0, 0, 1)]:
        assert all(cm.term_class(t, alpha) == "first" for t in cm.build_r_alpha(alpha).terms)


@pytest.mark.parametrize("alpha", [(1, 2), (2, 1), (2, 2), (1, 3), (1, 1, 1)])
def test_peel_order_gives_same_operator(alpha):
    n = len(alpha)
    phi = G(n, 0.9, tuple(0.2 * (k + 1) for k in range(n)), 1.1)
    a = cm.eval_expansion_terms(cm.build_r_alpha(alpha, "lowest"), phi, 2.0)
    b = cm.eval_expansion_terms(cm.build_r_alpha(alpha, "highest"), phi, 2.0)
    x = np.random.default_rng(3).normal(size=(6, n))
    assert np.allclose(a(x), b(x), atol=1e-12)
    # the term lists coincide once merged, since the operator has a unique normal form
    assert cm.build_r_alpha(alpha, "lowest").as_dict() == cm.build_r_alpha(alpha, "highest").as_dict()


def test_round_trip():
    e = cm.build_r_alpha((2, 1))
    assert cm.CommutatorExpansion.from_dict(e.to_dict()).as_dict() == e.as_dict()
    with pytest.raises(ValueError):
        cm.build_r_alpha((0, 0))


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=2).map(tuple).filter(lambda a: 1 <= sum(a) <= 4),
       st.sampled_from([0.5, 3.0, 10.0]), st.floats(-1.0, 1.0))
def test_identity_residual_is_rounding(alpha, t, mu):
    n = len(alpha)
    phi = G(n, 1.0, (mu,) * n) + G(n, 0.5, (-mu,) * n, 0.3)
    assert cm.identity_residual(phi, alpha, t) < 1e-9


def test_grid_backend_identity():
    spec = fl.GridSpec(1, 40.0, 1024)
    phi = fl.mixture_to_grid(G(1, 1.0, (0.5,)) + G(1, 0.5, (-1.0,), 0.4), spec)
    for alpha in [(1,), (2,), (3,)]:
        assert cm.identity_residual(phi, alpha, 3.0) < 1e-8


@pytest.mark.parametrize("m", [1, 2, 3])
def test_estimates_hold_with_moderate_constants(m):
    phi = G(1, 1.0, (0.5,)) + G(1, 0.5, (-1.0,), 0.4)
    times = [0.1, 1.0, 10.0, 100.0]
    assert cm.verify_commutator_estimate(phi, m, times).max_ratio < 10
    assert cm.verify_moment_estimate(phi, m, times).max_ratio < 10


def test_window_bounds():
    for n in (1, 2):
        for eps in (1.0, 0.1, 0.01):
            w = cm.WeightWindow(n, 0, eps)
            g, lap = cm.window_sup_norms(w)
            assert g <= w.grad_bound and lap <= w.laplacian_bound
            # grad w(0) = e_j, so the gradient bound is within a factor 2
            assert g >= 1.0
    assert cm.grad_g1_l1(1) == pytest.approx(1 / math.sqrt(math.pi))
    with pytest.raises(ValueError):
        cm.WeightWindow(1, 0, 0.0)


def test_window_commutator_bound():
    phi = G(1, 1.0, (0.5,))
    for eps in (1.0, 0.1):
        for t in (0.1, 1.0, 10.0):
            v, b = cm.weighted_window_commutator(phi, cm.WeightWindow(1, 0, eps), t)
            assert v <= b
    v, b = cm.weighted_window_commutator(phi, cm.WeightWindow(1, 0, 1.0, constant=True), 1.0)
    assert v == pytest.approx(0.0, abs=1e-12) and b == 0.0
