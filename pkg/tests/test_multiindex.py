import math

import numpy as np
from hypothesis import given, strategies as st

from heatlab import multiindex as mi

small = st.lists(st.integers(0, 4), min_size=1, max_size=3).map(tuple)


def test_basic_arithmetic():
    assert mi.order((2, 1, 0)) == 3
    assert mi.factorial((2, 3)) == 12
    assert mi.leq((1, 0), (1, 2)) and not mi.leq((2, 0), (1, 2))
    assert mi.binom((3, 2), (1, 1)) == 6
    assert mi.binom((1, 0), (2, 0)) == 0


def test_of_order_counts():
    # number of multi-indices of order k in n variables is C(k+n-1, n-1)
    for n in (1, 2, 3):
        for k in range(6):
            got = list(mi.of_order(n, k))
            assert len(got) == math.comb(k + n - 1, n - 1)
            assert all(mi.order(a) == k for a in got)


@given(small, small)
def test_binom_zero_off_order(a, b):
    if len(a) != len(b):
        return
    if not mi.leq(b, a):
        assert mi.binom(a, b) == 0
    else:
        assert mi.binom(a, b) == math.prod(math.comb(x, y) for x, y in zip(a, b))


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2), st.floats(-1.5, 1.5), st.floats(0.2, 3))
def test_poly_shift_and_rescale_evaluate_consistently(d, y, lam):
    p = {(2, 1): 1.5, (0, 3): -2.0, (1, 0): 0.5}
    pts = np.array([[y, 0.5 * y]])
    shifted = mi.poly_shift(p, d)
    assert np.allclose(mi.poly_eval(shifted, pts), mi.poly_eval(p, pts + np.array(d)), atol=1e-10)
    scaled = mi.poly_rescale(p, lam)
    assert np.allclose(mi.poly_eval(scaled, pts), mi.poly_eval(p, lam * pts), atol=1e-10)


def test_poly_derivative_against_difference_quotient():
    p = {(3, 1): 2.0, (1, 2): -1.0}
    x = np.array([[0.7, -0.3]])
    h = 1e-6
    fd = (mi.poly_eval(p, x + [h, 0]) - mi.poly_eval(p, x - [h, 0])) / (2 * h)
    assert np.allclose(mi.poly_eval(mi.poly_derivative(p, 0), x), fd, rtol=1e-7)
