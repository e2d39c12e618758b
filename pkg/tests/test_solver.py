import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fcs_syk import ConvergenceError
from fcs_syk.contour import TwistSpec, build_grid
from fcs_syk.saddle import ModelParams, greens_equal_time, solve_saddle
from fcs_syk.solver import (ContourGreens, SelfEnergy, SolveOptions, dense_greens,
                            dyson_invert, evaluate_greens, extract_bulk_saddle,
                            self_energy, site_matrix, solve_fixed_point, transfer_greens,
                            two_time)

SMALL = ModelParams(zeta=0.5, V=1.0, L=6, T=4)


def _zero_sigma(L, n):
    z = np.zeros((L, n), complex)
    return SelfEnergy(z, z.copy(), z.copy())


def _uniform_G(L, n, m, ud, du):
    f = lambda v: np.full((L, n), v, complex)
    return ContourGreens(f(m), f(ud), f(du))


def test_sigma_vanishes_without_couplings():
    G = _uniform_G(4, 8, 0.3, 0.2, -0.1)
    s = self_energy(G, ModelParams(J=0, V=0, L=4))
    assert not np.any(s.uu) and not np.any(s.ud) and not np.any(s.du)


def test_sigma_bulk_and_edge():
    G = _uniform_G(4, 8, 0.3, 0.2, -0.1)
    s = self_energy(G, ModelParams(J=1.0, V=0, L=4))
    assert s.uu[1, 0] == pytest.approx(-1.0 * 0.3)
    # open edge: one neighbour with weight J/2
    assert s.uu[0, 0] == pytest.approx(-0.5 * 0.3)
    assert s.ud[0, 0] == pytest.approx(0.5 * 0.2)
    assert s.ud[1, 0] == pytest.approx(0.2)
    assert np.array_equal(s.dd, s.uu)


def test_free_occupation_oracle():
    """Sigma = 0 single mode: occupation e^{-2 zeta T - mu}/(1 + ...) at t = T."""
    T, zeta, mu = 2.0, 0.7, 0.5
    p = ModelParams(J=0, V=0, zeta=zeta, mu=mu, L=2, T=T)
    g = build_grid(T, 64)
    G = transfer_greens(_zero_sigma(2, 64), p, TwistSpec(), g)
    w = math.exp(-2 * zeta * T - mu)
    assert (0.5 - G.m[0, -1]).real == pytest.approx(w / (1 + w), abs=1e-12)
    Gd = dense_greens(_zero_sigma(2, 64), p, TwistSpec(), g)
    assert abs(0.5 - Gd.m[0, -1] - w / (1 + w)) < 2 * g.dt


def test_dyson_residual_and_sign_convention():
    p = ModelParams(J=0, V=0, zeta=0.4, mu=0.5, L=2, T=2)
    g = build_grid(2, 32)
    sig = _zero_sigma(2, 32)
    Gd = dyson_invert(site_matrix(sig.site(1), p, TwistSpec(), g, 1), None, g)
    m = transfer_greens(sig, p, TwistSpec(), g).m[0, 5]
    # G(t, t+0) - G(t, t-0) jumps by one on the u branch
    assert Gd[5, 5] - m == pytest.approx(0.5, abs=1e-12)


def test_dyson_adds_offdiagonal_blocks():
    p, g = SMALL, build_grid(4, 32)
    sig = SelfEnergy(*(0.1 * np.ones((6, 32), complex) for _ in range(3)))
    base = site_matrix(SelfEnergy(sig.uu, 0 * sig.ud, 0 * sig.du).site(2), p, TwistSpec(), g, 2)
    a = dyson_invert(base, sig.site(2), g)
    b = two_time(sig, p, TwistSpec(), g, 2)
    assert np.abs(a - b).max() < 1e-12


@pytest.fixture(scope="module")
def small_solution():
    g = build_grid(4, 64)
    tw = TwistSpec(0.7, 3)
    G, sig, meta = solve_fixed_point(SMALL, tw, g, SolveOptions())
    return g, tw, G, sig, meta


def test_converged_meta(small_solution):
    *_, meta = small_solution
    assert meta["converged"] and meta["iterations"] > 1
    assert meta["trace"][-1] < 1e-8


def test_fixed_point_is_solution(small_solution):
    g, tw, G, sig, _ = small_solution
    again = self_energy(evaluate_greens(sig, SMALL, tw, g), SMALL)
    assert np.abs(again.flat() - sig.flat()).max() < 10 * SolveOptions().tol


def test_engines_agree_first_order():
    tw = TwistSpec(0.7, 3)
    errs = []
    for n in (32, 64, 128):
        g = build_grid(4, n)
        G, sig, _ = solve_fixed_point(SMALL, tw, g, SolveOptions())
        Gd = dense_greens(sig, SMALL, tw, g)
        errs.append(max(np.abs(G.m - Gd.m).max(), np.abs(G.ud - Gd.ud).max()))
    assert errs[2] < errs[1] < errs[0]
    assert math.log2(errs[1] / errs[2]) > 0.8


def test_grid_convergence_order():
    tw = TwistSpec(0.5, 3)
    sols = []
    for n in (24, 48, 96):
        G, *_ = solve_fixed_point(SMALL, tw, build_grid(4, n), SolveOptions())
        # compare at common times t = T/2 +- a slice of the coarsest grid
        sols.append(G.m[:, n // 2 - 1: n // 2 + 1].mean(axis=1))
    order = math.log2(np.abs(sols[1] - sols[0]).max() / np.abs(sols[2] - sols[1]).max())
    assert order >= 0.9


def test_damping_independence():
    g = build_grid(4, 48)
    tw = TwistSpec(0.4, 2)
    tol = 1e-9
    out = []
    for a in (0.3, 0.7):
        G, *_ = solve_fixed_point(SMALL, tw, g, SolveOptions(alpha=a, mixing="damped", tol=tol))
        out.append(G)
    assert np.abs(out[0].flat() - out[1].flat()).max() < 10 * tol


def test_phi_continuity():
    g = build_grid(4, 48)
    base = solve_fixed_point(SMALL, TwistSpec(1.0, 3), g, SolveOptions())[0]
    diffs = [np.abs(solve_fixed_point(SMALL, TwistSpec(1.0 + d, 3), g, SolveOptions())[0].flat()
                    - base.flat()).max() for d in (1e-1, 1e-2, 1e-3)]
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] < 1e-2


def test_parity_structure_periodic():
    p = ModelParams(zeta=0.5, V=0.5, L=8, T=4)
    G, *_ = solve_fixed_point(p, TwistSpec(), build_grid(4, 48), SolveOptions(periodic=True))
    for x in range(2, 8):
        assert np.abs(G.m[x] - G.m[x % 2]).max() < 1e-8
        assert np.abs(G.ud[x] - G.ud[x % 2]).max() < 1e-8


@settings(max_examples=8, deadline=None)
@given(st.floats(-3.0, 3.0), st.integers(0, 6))
def test_decoupled_ignores_twist(phi, A):
    p = ModelParams(J=0, V=0, zeta=0.5, L=6, T=3)
    g = build_grid(3, 32)
    a = solve_fixed_point(p, TwistSpec(phi, A), g, SolveOptions())[0]
    b = solve_fixed_point(p, TwistSpec(), g, SolveOptions())[0]
    assert np.abs(a.m - b.m).max() < 1e-10
    assert np.abs(a.logZ - b.logZ).max() < 1e-10
    # inter-branch entries of twisted sites carry only the gauge phase
    ph = np.where(np.arange(1, 7) <= A, np.exp(-1j * phi), 1.0)[:, None]
    assert np.abs(a.ud - ph * b.ud).max() < 1e-10
    assert np.abs(a.du - b.du / ph).max() < 1e-10


def test_area_bulk_matches_equal_time():
    p = ModelParams(zeta=2.5, V=0, L=12, T=12)
    g = build_grid(12, 96)
    G, *_ = solve_fixed_point(p, TwistSpec(), g, SolveOptions())
    s = solve_saddle(p)
    k = 48
    for x in (6, 7):
        want = 0.5 * (greens_equal_time(s, x, 1) + greens_equal_time(s, x, -1))
        got = G.equal_time(x, k, 0)
        assert np.abs(got - want).max() < 1e-4


def test_free_bulk_extraction():
    p = ModelParams(zeta=0.5, V=0, L=12, T=24)
    g = build_grid(24, 192)
    _, sig, _ = solve_fixed_point(p, TwistSpec(), g, SolveOptions())
    b = extract_bulk_saddle(sig, p, g)
    s = solve_saddle(p)
    assert abs(b["P"] - s.P) < 1e-3 and abs(b["S"] - s.S) < 1e-3


def test_nonconvergence_raises_with_trace():
    g = build_grid(4, 32)
    with pytest.raises(ConvergenceError) as ei:
        solve_fixed_point(SMALL, TwistSpec(0.5, 3), g, SolveOptions(max_iters=2))
    assert len(ei.value.trace) == 2 and ei.value.phi == 0.5
