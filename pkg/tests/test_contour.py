import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fcs_syk import ConfigError, ParameterError
from fcs_syk.action import logdet
from fcs_syk.contour import (TwistSpec, bare_inverse_propagator, boundary_weights,
                             build_grid, link_weights, loop_matrix)
from fcs_syk.saddle import ModelParams


def test_grid_arithmetic():
    g = build_grid(4, 200)
    assert g.dt == pytest.approx(0.02)
    assert g.D == 400
    assert g.u_index(0) == 0 and g.d_index(0) == 399


@pytest.mark.parametrize("T,n_t", [(4, 8), (0, 64), (-1, 64), (4, 64.5)])
def test_grid_guards(T, n_t):
    with pytest.raises(ConfigError):
        build_grid(T, n_t)


def test_resolution_guard():
    p = ModelParams(zeta=2.5)
    with pytest.raises(ConfigError):
        build_grid(60, 192, p)
    build_grid(60, 192, p, resolution=None)
    build_grid(4, 200, p)


def test_twist_checks():
    with pytest.raises(ParameterError):
        TwistSpec(float("nan"), 1)
    with pytest.raises(ParameterError):
        TwistSpec(0.1, -1)
    with pytest.raises(ParameterError):
        TwistSpec(0.1, 30).check(20)


def test_boundary_weight_examples():
    assert boundary_weights(TwistSpec(0.0, 4), 0.5, 2)[0] == 1
    assert boundary_weights(TwistSpec(math.pi, 4), 0.5, 2)[0] == pytest.approx(-1)
    assert boundary_weights(TwistSpec(1.0, 4), 0.5, 7) == (1, pytest.approx(-math.exp(-0.5)))
    assert boundary_weights(TwistSpec(0.0, 4), 0.5, 2)[1] == pytest.approx(-math.exp(-0.5))


def test_phi_enters_only_through_phase():
    a = boundary_weights(TwistSpec(0.3, 4), 0.5, 1)
    b = boundary_weights(TwistSpec(0.3 + 2 * math.pi, 4), 0.5, 1)
    assert np.allclose(a, b, atol=1e-14)


def test_free_determinant_is_single_mode_trace():
    g = build_grid(4, 64)
    for mu in (0.5, -0.3):
        p = ModelParams(J=0, V=0, zeta=0, mu=mu, L=2, T=4)
        M = bare_inverse_propagator(g, p, TwistSpec(), 1)
        ld = logdet(g.dt * M)
        assert ld.real == pytest.approx(math.log(1 + math.exp(-mu)), abs=1e-12)
        assert abs(ld.imag) < 1e-12


@pytest.mark.parametrize("x", [1, 2])
def test_staggered_determinant(x):
    g = build_grid(2, 64)
    p = ModelParams(J=0, V=0, zeta=0.7, mu=0.5, L=2, T=2)
    M = bare_inverse_propagator(g, p, TwistSpec(), x)
    s = 1 if x % 2 else -1
    want = math.log(1 + math.exp(-2 * s * 0.7 * 2 - 0.5))
    assert logdet(g.dt * M).real == pytest.approx(want, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 2), st.integers(1, 4))
def test_decoupled_determinant_phi_independent(phi, zeta, x):
    g = build_grid(3, 32)
    p = ModelParams(J=0, V=0, zeta=zeta, mu=0.5, L=4, T=3)
    a = logdet(g.dt * bare_inverse_propagator(g, p, TwistSpec(phi, 2), x))
    b = logdet(g.dt * bare_inverse_propagator(g, p, TwistSpec(0.0, 2), x))
    assert abs(a - b) < 1e-10


def test_same_parity_same_matrix():
    g = build_grid(3, 32)
    p = ModelParams(zeta=0.4, L=8, T=3)
    M = [bare_inverse_propagator(g, p, TwistSpec(), x) for x in range(1, 9)]
    for x in range(2, 8):
        assert np.array_equal(M[x], M[x % 2])


def test_resetting_fold_phases_gives_phi0():
    """Twisting only touches the two fold links; undoing their phases
    restores the phi = 0 matrix up to rounding."""
    g = build_grid(3, 32)
    tw = TwistSpec(1.1, 3)
    eps = 0.4
    w = link_weights(g, eps, eps, tw, 0.5, 1)
    w0 = link_weights(g, eps, eps, TwistSpec(), 0.5, 1)
    n = g.n_t
    w[n - 1] *= np.exp(-1j * tw.phi)
    w[2 * n - 1] *= np.exp(1j * tw.phi)
    assert np.abs(loop_matrix(w, g.dt) - loop_matrix(w0, g.dt)).max() < 1e-13
