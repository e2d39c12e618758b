"""Translation-invariant saddle points and phase labels.

The bulk saddle of the Brownian non-Hermitian SYK chain is parametrized by
(P, S, z): P is the staggered diagonal gap, S the inter-branch correlation and
z = exp(mu/2).  S = 0 is the area-law branch; S > 0 breaks the relative U(1)
between the two branches and carries a Goldstone mode.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalError, ParameterError, SingularMatrixError

AREA_LAW = "AreaLaw"
CRITICAL = "Critical"
VOLUME_LAW = "VolumeLaw"
CONTINUOUS = "Continuous"
FIRST_ORDER = "FirstOrder"
NOT_AT_BOUNDARY = "NotAtBoundary"


@dataclass(frozen=True)
class ModelParams:
    """Couplings and sizes of one chain.

    T is the total evolution time, N only multiplies per-N outputs.
    """
    J: float = 1.0
    V: float = 0.0
    zeta: float = 0.5
    mu: float = 0.5
    L: int = 20
    T: float = 60.0
    N: int = 1

    def __post_init__(self):
        for name in ("J", "V", "zeta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ParameterError(f"{name} must be finite and >= 0, got {v}")
        if not np.isfinite(self.mu):
            raise ParameterError(f"mu must be finite, got {self.mu}")
        if int(self.L) != self.L or self.L < 2 or self.L % 2:
            raise ParameterError(f"L must be an even integer >= 2, got {self.L}")
        if not self.T > 0:
            raise ParameterError(f"T must be > 0, got {self.T}")
        if self.N < 1:
            raise ParameterError(f"N must be >= 1, got {self.N}")

    @property
    def z(self):
        return math.exp(self.mu / 2)

    def replace(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return ModelParams(**d)


@dataclass(frozen=True)
class SaddleParams:
    P: float
    S: float
    z: float
    residual: float = 0.0
    roots: tuple = field(default=(), compare=False)

    @property
    def E(self):
        return math.hypot(self.P, self.S)


@dataclass(frozen=True)
class PhaseLabel:
    kind: str
    transition_order: str


def sigma(x):
    """Staggering sign (-1)**(x-1) for 1-based site x."""
    return 1 - 2 * ((int(x) - 1) % 2)


def classify_phase(params):
    J, V, zeta = params.J, params.V, params.zeta
    if zeta >= J:
        kind = AREA_LAW
    elif V == 0:
        kind = CRITICAL
    else:
        kind = VOLUME_LAW
    if math.isclose(zeta, J, rel_tol=1e-12, abs_tol=1e-14):
        order = FIRST_ORDER if V > 2 * J else CONTINUOUS
    else:
        order = NOT_AT_BOUNDARY
    return PhaseLabel(kind, order)


def s_residual(S, P, J, V):
    """1 - RHS of the implicit S equation at fixed P."""
    E2 = P * P + S * S
    if E2 == 0:
        # J/(2E) dominates as E -> 0
        return -math.inf if J > 0 or V > 0 else 1.0
    E = math.sqrt(E2)
    return 1.0 - 0.5 * J / E - V * (S * S / E2) / (8.0 * E)


def _s_residual_dS(S, P, J, V):
    E2 = P * P + S * S
    E = math.sqrt(E2)
    # d/dS of (J/2)/E and (V/8) S^2/E^3
    return 0.5 * J * S / (E2 * E) - V / 8.0 * (2 * S / (E2 * E) - 3 * S ** 3 / (E2 * E2 * E))


def s_roots(P, J, V, n_scan=4000):
    """All roots of the S equation on (0, J/2 + V/8], ascending.

    Sign changes are located on a uniform scan, bracketed with brentq and
    polished by Newton steps.
    """
    hi = 0.5 * J + V / 8.0
    if hi <= 0:
        return ()
    # the bound is attained exactly at P = 0, pad it so the sign change is seen
    grid = np.linspace(0.0, hi * (1 + 1e-9), n_scan + 1)
    if P * P == 0:
        grid[0] = hi * 1e-14
    f = np.array([s_residual(s, P, J, V) for s in grid])
    roots = []
    for i in range(n_scan):
        a, b = grid[i], grid[i + 1]
        fa, fb = f[i], f[i + 1]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0:
            r = brentq(s_residual, a, b, args=(P, J, V), xtol=1e-16, maxiter=200)
            roots.append(_newton_polish(r, P, J, V))
    return tuple(r for r in roots if r > 0)


def _newton_polish(S, P, J, V, steps=3):
    for _ in range(steps):
        d = _s_residual_dS(S, P, J, V)
        if d == 0:
            break
        S_new = S - s_residual(S, P, J, V) / d
        if not S_new > 0 or abs(s_residual(S_new, P, J, V)) >= abs(s_residual(S, P, J, V)):
            break
        S = S_new
    return S


def solve_saddle(params):
    """Closed-form bulk saddle (P, S, z).

    zeta >= J: (zeta - J/2, 0, z).  zeta < J: P = zeta/2 and S is the largest
    positive root of 1 = (J/2)/E + (V/8) S^2/E^3.  All roots are kept in
    ``roots`` for diagnostics.
    """
    J, V, zeta = params.J, params.V, params.zeta
    z = params.z
    if zeta >= J:
        return SaddleParams(zeta - 0.5 * J, 0.0, z, 0.0, ())
    P = 0.5 * zeta
    roots = s_roots(P, J, V)
    if not roots:
        raise NumericalError(
            f"no root of the S equation on [0, {0.5 * J + V / 8}] "
            f"(J={J}, V={V}, zeta={zeta}; residual at the upper end "
            f"{s_residual(0.5 * J + V / 8, P, J, V)})")
    S = roots[-1]
    return SaddleParams(P, S, z, abs(s_residual(S, P, J, V)), roots)


def solve_saddle_symmetric(params):
    """Bulk saddle with the symmetric (trace-preserving) ordering of the V term.

    The diagonal interaction self-energy V(m^3 - m/4), m = G^uu(t,t), changes
    the P equation to 2P = zeta + V P S^2/(4E^3); the S equation is unchanged.
    This is what the numerical solver converges to in the bulk.  For V = 0 or
    zeta >= J it coincides with :func:`solve_saddle`.
    """
    base = solve_saddle(params)
    J, V, zeta = params.J, params.V, params.zeta
    if V == 0 or base.S == 0:
        return base
    P, S = base.P, base.S
    for _ in range(200):
        S_roots = s_roots(P, J, V)
        if not S_roots:
            raise NumericalError("symmetric-ordering saddle lost its S root")
        S = S_roots[-1]
        E = math.hypot(P, S)
        P_new = 0.5 * zeta / (1.0 - V * S * S / (8.0 * E ** 3))
        if abs(P_new - P) < 1e-15:
            P = P_new
            break
        P = P_new
    S = s_roots(P, J, V)[-1]
    return SaddleParams(P, S, params.z, abs(s_residual(S, P, J, V)), (S,))


def inverse_greens_frequency(saddle, x, omega):
    s = sigma(x)
    P, S, z = saddle.P, saddle.S, saddle.z
    return np.array([[-1j * omega + s * P, -S / z],
                     [z * S, 1j * omega + s * P]], dtype=complex)


def greens_frequency(saddle, x, omega):
    """Bulk G(omega) for site x, closed-form adjugate inverse."""
    s = sigma(x)
    P, S, z = saddle.P, saddle.S, saddle.z
    det = omega * omega + P * P + S * S
    if det == 0:
        raise SingularMatrixError("omega^2 + P^2 + S^2 = 0")
    return np.array([[1j * omega + s * P, S / z],
                     [-z * S, -1j * omega + s * P]], dtype=complex) / det


def greens_equal_time(saddle, x, side):
    """Equal-time bulk G at t - t' = 0+ (side=+1) or 0- (side=-1).

    Closing the omega contour with the exp(-i omega 0^{+-}) regulator gives
    G^uu = sP/(2E) +- 1/2, G^dd = sP/(2E) -+ 1/2, G^ud = S/(2zE),
    G^du = -zS/(2E).  The off-diagonal entries have no jump.
    """
    if side not in (1, -1, "+", "-"):
        raise ValueError("side must be +1 (0+) or -1 (0-)")
    side = 1 if side in (1, "+") else -1
    s = sigma(x)
    P, S, z = saddle.P, saddle.S, saddle.z
    E = math.hypot(P, S)
    if E == 0:
        raise SingularMatrixError("equal-time G undefined at P = S = 0")
    m = s * P / (2 * E)
    return np.array([[m + 0.5 * side, S / (2 * z * E)],
                     [-z * S / (2 * E), m - 0.5 * side]], dtype=complex)
