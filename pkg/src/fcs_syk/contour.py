"""Discretized two-branch contour, twist boundary data and bare propagator.

Index layout of the closed loop (D = 2 n_t points): 0..n_t-1 is the u branch
at t_i = (i + 1/2) dt ascending, n_t..2n_t-1 is the d branch descending, so
loop index n_t + j sits at time t_{n_t-1-j}.  Links run k -> k+1 around the
loop.  The link u_{n_t-1} -> d_{n_t-1} is the t = T fold, d_0 -> u_0 the
t = 0 fold; each fold also carries half a slice of evolution on either side.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError, ParameterError
from .saddle import sigma


@dataclass(frozen=True)
class ContourGrid:
    T: float
    n_t: int

    @property
    def dt(self):
        return self.T / self.n_t

    @property
    def D(self):
        return 2 * self.n_t

    @property
    def times(self):
        return (np.arange(self.n_t) + 0.5) * self.dt

    def u_index(self, i):
        return i

    def d_index(self, i):
        return 2 * self.n_t - 1 - i


@dataclass(frozen=True)
class TwistSpec:
    phi: float = 0.0
    A_size: int = 0

    def __post_init__(self):
        if not np.isfinite(self.phi):
            raise ParameterError(f"phi must be finite, got {self.phi}")
        if self.A_size < 0 or int(self.A_size) != self.A_size:
            raise ParameterError(f"|A| must be a nonnegative integer, got {self.A_size}")

    def check(self, L):
        if self.A_size > L:
            raise ParameterError(f"|A|={self.A_size} exceeds L={L}")
        return self

    def contains(self, x):
        return 1 <= x <= self.A_size


def build_grid(T, n_t, params=None, resolution=0.1):
    """Uniform contour grid with guards.

    When ``params`` is given, dt * max(J, V, zeta) <= ``resolution`` is
    enforced (pass resolution=None to skip it; the transfer-matrix engine
    integrates each slice exactly and does not need it).
    """
    if not T > 0:
        raise ConfigError(f"T must be > 0, got {T}")
    if int(n_t) != n_t or n_t < 16:
        raise ConfigError(f"n_t must be an integer >= 16, got {n_t}")
    grid = ContourGrid(float(T), int(n_t))
    if params is not None and resolution is not None:
        for name in ("J", "V", "zeta"):
            if grid.dt * getattr(params, name) > resolution:
                raise ConfigError(
                    f"resolution guard: dt*{name} = {grid.dt * getattr(params, name):.3g} "
                    f"> {resolution} (T={T}, n_t={n_t})")
    return grid


def boundary_weights(twist, mu, x):
    """Fold link weights (w_fold_T, w_fold_0) for site x.

    The t = T fold carries the twist exp(i phi) on sites of A.  The t = 0 fold
    carries the antiperiodic sign and the density-matrix weight -exp(-mu),
    times exp(-i phi) on sites of A from the inverse twist that sits between
    the two halves of the density matrix.
    """
    if twist.contains(x):
        return complex(np.exp(1j * twist.phi)), complex(-np.exp(-mu - 1j * twist.phi))
    return 1.0 + 0j, complex(-math.exp(-mu))


def link_weights(grid, eps_u, eps_d, twist, mu, x):
    """Weights of the D loop links for diagonal energies eps on each branch.

    Links use the exponentially fitted upwind form exp(-eps dt), which is
    exact for constant eps.
    """
    n, dt = grid.n_t, grid.dt
    eu = np.broadcast_to(np.asarray(eps_u, complex), (n,))
    ed = np.broadcast_to(np.asarray(eps_d, complex), (n,))
    wT, w0 = boundary_weights(twist, mu, x)
    w = np.empty(2 * n, complex)
    # u_i -> u_{i+1}: half slice of each
    w[:n - 1] = np.exp(-0.5 * dt * (eu[:-1] + eu[1:]))
    w[n - 1] = wT * np.exp(-0.5 * dt * (eu[-1] + ed[-1]))
    # d_i -> d_{i-1}, loop index n + j carries time index n-1-j
    di = np.arange(n - 1, 0, -1)
    w[n:2 * n - 1] = np.exp(-0.5 * dt * (ed[di] + ed[di - 1]))
    w[2 * n - 1] = w0 * np.exp(-0.5 * dt * (ed[0] + eu[0]))
    return w


def loop_matrix(w, dt):
    """(I - C)/dt where C shifts k -> k+1 with weights w_k."""
    D = len(w)
    M = np.eye(D, dtype=complex)
    k = np.arange(D)
    M[(k + 1) % D, k] -= w
    return M / dt


def bare_inverse_propagator(grid, params, twist, x):
    """D x D bare inverse propagator of site x (no self-energy).

    The staggered potential enters both branches with the same sign.  At
    J = V = 0 the determinant of dt * M is 1 + exp(-2 s_x zeta T - mu), the
    single-mode trace.
    """
    twist.check(params.L)
    e = sigma(x) * params.zeta
    w = link_weights(grid, e, e, twist, params.mu, x)
    return loop_matrix(w, grid.dt)
