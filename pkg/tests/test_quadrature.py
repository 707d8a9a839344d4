import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hallbraid.errors import DomainError, QuadratureError
from hallbraid.quadrature import (
    kink_bound,
    kink_bound_static,
    kink_integral,
    kink_quad,
    panel_integral,
)

mp.mp.dps = 30


def j_mpmath(a, c, d, p):
    a, c, d, p = (mp.mpf(v) for v in (a, c, d, p))
    f = lambda s: (a + abs(s)) ** (-p) * (c + abs(d - s)) ** (-p)
    pts = [-mp.inf, -10 * (a + c + abs(d)), 0, d, d + 10 * (a + c + abs(d)), mp.inf] if d > 0 else \
        [-mp.inf, -10 * (a + c), 0, 10 * (a + c), mp.inf]
    return float(mp.quad(f, pts))


CASES = [
    (1.0, 1.0, 0.0, 1.1),
    (1.0, 1.0, 3.0, 1.1),
    (0.01, 50.0, 7.0, 1.1),
    (2.0, 0.3, 0.1, 1.2),
    (5.0, 5.0, 1e4, 1.1),
    (1e-3, 1e-3, 1.0, 1.5),
    (3.0, 200.0, 0.0, 1.1),
    (0.5, 0.7, 2.5, 1.9),
    (0.5, 0.7, 2.5, 2.7),
]


def test_integer_power_uses_quadrature():
    with pytest.raises(DomainError):
        kink_integral(1.0, 1.0, 1.0, 2.0)
    assert kink_quad(0.5, 0.7, 2.5, 2.0) == pytest.approx(j_mpmath(0.5, 0.7, 2.5, 2.0), rel=1e-9)


@pytest.mark.parametrize("a,c,d,p", CASES)
def test_closed_form_matches_mpmath(a, c, d, p):
    ref = j_mpmath(a, c, d, p)
    assert kink_integral(a, c, d, p) == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("a,c,d,p", CASES)
def test_adaptive_quadrature_matches_mpmath(a, c, d, p):
    ref = j_mpmath(a, c, d, p)
    assert kink_quad(a, c, d, p) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(-1e4, 1e4), st.floats(1.05, 1.5)
)
def test_closed_form_against_quadrature(a, c, d, p):
    assert kink_integral(a, c, d, p) == pytest.approx(kink_quad(a, c, d, p), rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(0, 1e4), st.floats(1.05, 1.5)
)
def test_symmetries_and_bounds(a, c, d, p):
    j = kink_integral(a, c, d, p)
    assert j == pytest.approx(kink_integral(c, a, d, p), rel=1e-12)
    assert j == pytest.approx(kink_integral(a, c, -d, p), rel=1e-12)
    assert j <= kink_bound(a, c, d, p) * (1 + 1e-12)
    assert kink_bound(a, c, d, p) <= kink_bound_static(a, c, p) * (1 + 1e-12)
    # J decreases as the kinks separate
    assert kink_integral(a, c, d + 1.0, p) <= j * (1 + 1e-12)


def test_vectorized_agrees_with_scalar():
    a = np.array([0.1, 1.0, 10.0])
    c = np.array([3.0, 1.0, 0.2])
    d = np.array([0.0, 5.0, -2.0])
    vec = kink_integral(a, c, d, 1.1)
    for i in range(3):
        assert vec[i] == pytest.approx(kink_integral(a[i], c[i], d[i], 1.1), rel=1e-15)


def test_panel_integral_exact_cases():
    # int_0^1 sqrt(x) dx with a kink at 0, plus a power tail int_1^inf s^-3 ds
    val = panel_integral(lambda s: np.sqrt(s), [(0.0, 1.0, 1e-8, None)])
    assert val == pytest.approx(2 / 3, rel=1e-10)
    tail = panel_integral(lambda s: s**-3.0, [], tail=(1.0, 3.0))
    assert tail == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(QuadratureError):
        panel_integral(lambda s: s, [], tail=(1.0, 1.0))


def test_panel_integral_refinement_converges():
    f = lambda s: (0.01 + np.abs(s)) ** -1.1 * (1 + np.abs(3 - s)) ** -1.1
    ref = kink_integral(0.01, 1.0, 3.0, 1.1)
    iv = [(-50.0, 0.0, None, 0.01), (0.0, 3.0, 0.01, 1.0), (3.0, 50.0, 1.0, None)]
    g = lambda s: f(-s)
    tails = panel_integral(g, [], tail=(50.0, 2.2)) + panel_integral(f, [], tail=(50.0, 2.2))
    coarse = panel_integral(f, iv, nodes=16, ratio=4.0) + tails
    fine = panel_integral(f, iv, nodes=32, ratio=2.0) + tails
    assert coarse == pytest.approx(ref, rel=1e-6)
    assert fine == pytest.approx(ref, rel=1e-9)
