import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fcs_syk import ParameterError
from fcs_syk.saddle import (AREA_LAW, CRITICAL, FIRST_ORDER, VOLUME_LAW, ModelParams,
                            SaddleParams, classify_phase, greens_equal_time,
                            greens_frequency, inverse_greens_frequency, s_residual,
                            solve_saddle, solve_saddle_symmetric)


@pytest.mark.parametrize("V,zeta,kind", [(0, 0.5, CRITICAL), (1, 0.5, VOLUME_LAW),
                                         (0, 2.5, AREA_LAW)])
def test_classify_examples(V, zeta, kind):
    assert classify_phase(ModelParams(V=V, zeta=zeta)).kind == kind


def test_first_order_at_large_V():
    assert classify_phase(ModelParams(V=3, zeta=1)).transition_order == FIRST_ORDER
    assert classify_phase(ModelParams(V=1, zeta=1)).transition_order != FIRST_ORDER


def test_bad_params_rejected():
    with pytest.raises(ParameterError):
        ModelParams(J=-1)
    with pytest.raises(ParameterError):
        ModelParams(L=7)
    with pytest.raises(ParameterError):
        ModelParams(T=0)


def test_free_saddle_value():
    s = solve_saddle(ModelParams(V=0, zeta=0.6, mu=0.5))
    assert s.P == pytest.approx(0.3, abs=1e-14)
    assert s.S == pytest.approx(0.4, abs=1e-12)
    assert s.z == pytest.approx(math.exp(0.25))


def test_area_saddle_value():
    s = solve_saddle(ModelParams(V=0, zeta=2.5))
    assert (s.P, s.S) == (2.0, 0.0)


def test_interacting_root_by_bisection():
    s = solve_saddle(ModelParams(V=1, zeta=0.5))
    a, b = 1e-9, 0.5 + 1 / 8
    f = lambda S: s_residual(S, 0.25, 1.0, 1.0)
    # the largest root: the residual is positive just below the upper end
    assert f(b) > 0
    for _ in range(200):
        m = 0.5 * (a + b)
        if f(m) > 0 and m > s.S - 1e-3:
            b = m
        else:
            a = m
    assert s.P == 0.25
    assert s.S == pytest.approx(0.5 * (a + b), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.0, 0.999))
def test_free_S_closed_form(J, r):
    s = solve_saddle(ModelParams(J=J, V=0, zeta=r * J))
    assert abs(s.S - 0.5 * J * math.sqrt(1 - r * r)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0, 3), st.floats(0.0, 0.99))
def test_residual_at_root(J, v, r):
    p = ModelParams(J=J, V=v * J, zeta=r * J)
    s = solve_saddle(p)
    assert s.S > 0
    assert abs(s_residual(s.S, s.P, p.J, p.V)) < 1e-12


@pytest.mark.parametrize("V", [0.0, 0.5, 1.5])
def test_S_vanishes_continuously(V):
    vals = [solve_saddle(ModelParams(V=V, zeta=1 - e)).S for e in (0.1, 0.01, 0.001)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 0.1


def test_S_floor_first_order():
    vals = [solve_saddle(ModelParams(V=3, zeta=1 - e)).S for e in (0.1, 0.01, 0.001)]
    assert min(vals) > 0.3


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(0, 2), st.floats(0, 2), st.floats(-1, 1),
       st.integers(1, 20))
def test_inverse_determinant(w, P, S, mu, x):
    sp = SaddleParams(P, S, math.exp(mu / 2))
    det = np.linalg.det(inverse_greens_frequency(sp, x, w))
    assert det == pytest.approx(w * w + P * P + S * S, abs=1e-12)


def test_frequency_inverse_two_ways():
    sp = SaddleParams(0.3, 0.4, math.exp(0.25))
    a = greens_frequency(sp, 1, 0.7)
    b = np.linalg.solve(inverse_greens_frequency(sp, 1, 0.7), np.eye(2))
    assert np.abs(a - b).max() < 1e-14


def test_frequency_offdiag_zero_at_S0():
    g = greens_frequency(SaddleParams(2.0, 0.0, 1.3), 2, 0.4)
    assert g[0, 1] == 0 and g[1, 0] == 0


def test_frequency_asymptotics():
    w = 1e4
    g = greens_frequency(SaddleParams(0.3, 0.4, 1.2), 1, w)
    want = np.diag([1 / (-1j * w), 1 / (1j * w)])
    assert np.abs(g - want).max() < 1e-7


def test_equal_time_area_examples():
    sp = SaddleParams(2.0, 0.0, math.exp(0.25))
    assert np.allclose(greens_equal_time(sp, 2, +1), np.diag([0, -1]))
    # odd site at 0-: the closed form gives diag(0, 1)
    assert np.allclose(greens_equal_time(sp, 1, -1), np.diag([0, 1]))


def test_equal_time_by_quadrature():
    """Fourier integral with a small time offset eta against the closed form."""
    sp = SaddleParams(0.25, 0.35, math.exp(0.25))
    E, eta = sp.E, 1e-3
    for x in (1, 2):
        for side in (1, -1):
            t = side * eta
            out = np.zeros((2, 2), complex)
            for i in range(2):
                for j in range(2):
                    even = lambda w: (greens_frequency(sp, x, w)[i, j]
                                      + greens_frequency(sp, x, -w)[i, j])
                    odd = lambda w: (greens_frequency(sp, x, w)[i, j]
                                     - greens_frequency(sp, x, -w)[i, j])
                    # int dw/2pi e^{-iwt} G(w) over w > 0 from even/odd parts
                    re = quad(lambda w: even(w).real, 0, np.inf, limit=400)[0]
                    co = quad(lambda w: odd(w).imag, 0, np.inf, weight="sin",
                              wvar=abs(t), limlst=200)[0] if abs(t) > 0 else 0.0
                    out[i, j] = (re + math.copysign(1, t) * co) / (2 * math.pi)
            want = greens_equal_time(sp, x, side)
            # eta shifts the jump part by O(E eta)
            assert np.abs(out - want).max() < 2 * E * eta


def test_symmetric_saddle_matches_at_V0():
    p = ModelParams(V=0, zeta=0.5)
    assert solve_saddle_symmetric(p) == solve_saddle(p)


def test_symmetric_saddle_zeta0():
    s = solve_saddle_symmetric(ModelParams(V=1, zeta=0.0))
    assert s.P == 0
    assert s.S == pytest.approx(0.5 + 1 / 8, abs=1e-12)
