"""Quadratic fluctuation kernels around the bulk saddle and EFT predictions.

Every matrix is transcribed entry by entry from the closed forms and built
from one symbol table (zeta, S, z, Omega, k, J, V, parity), so a slip in
one place shows up in several checks.  ``p`` below is (-1)**x.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import ParameterError
from .saddle import solve_saddle

BASIS_SIGMA = ("dSigma_uu", "dSigma_dd", "dSigma_ud", "dSigma_du")
BASIS_G = ("dG_uu", "dG_dd", "dG_ud", "dG_du")
BASIS_G_CONSTRAINT = ("dG_uu", "dG_dd", "dG_du", "dG_ud")
BASIS_SHORT = ("dG_ud(k)", "dG_ud(k+pi)")
BASIS_OFFDIAG = ("dSigma_ud", "dSigma_du")
BASIS_PHI = ("phi1(k)", "phi1(k+pi)", "phi2(k)", "phi2(k+pi)")


@dataclass
class KernelMatrix:
    matrix: np.ndarray
    basis: tuple
    Omega: float = 0.0
    k: float = 0.0
    parity: int = 1

    def eigvals(self):
        return np.linalg.eigvals(self.matrix)

    def is_hermitian(self, tol=1e-12):
        M = self.matrix
        return bool(np.abs(M - M.conj().T).max() <= tol * max(1.0, np.abs(M).max()))


@dataclass
class XYCoefficients:
    kappa_t: float
    kappa_x: float

    @property
    def velocity(self):
        return math.sqrt(self.kappa_x / self.kappa_t)


def _p(x):
    return -1 if int(x) % 2 else 1


def _symbols(saddle, params):
    zeta = params.zeta
    S = saddle.S
    z = saddle.z
    R = math.sqrt(zeta * zeta + 4 * S * S)
    return zeta, S, z, R


# short-range phase (zeta > J), basis (dG^ud_k, dG^ud_{k+pi})

def kernel_short_range(Omega, k, params):
    """Expanded quadratic kernel [[-2zeta + 2J - Jk^2/2, i Omega], [i Omega, -2zeta]]."""
    J, zeta = params.J, params.zeta
    M = np.array([[-2 * zeta + 2 * J - 0.5 * J * k * k, 1j * Omega],
                  [1j * Omega, -2 * zeta]], dtype=complex)
    return KernelMatrix(M, BASIS_SHORT, Omega, k)


def kernel_short_range_full(Omega, k, params):
    """Unexpanded kernel [[2zeta - J cos k - J, -i Omega], [-i Omega, 2zeta + J cos k - J]]."""
    J, zeta = params.J, params.zeta
    c = math.cos(k)
    M = np.array([[2 * zeta - J * c - J, -1j * Omega],
                  [-1j * Omega, 2 * zeta + J * c - J]], dtype=complex)
    return KernelMatrix(M, BASIS_SHORT, Omega, k)


def short_range_dispersion(Omega, k, params):
    """Small-k, small-Omega form of the lower eigenvalue."""
    J, zeta = params.J, params.zeta
    return Omega * Omega / (2 * J) + 0.5 * J * k * k + 2 * zeta - 2 * J


def short_range_lower_eigenvalue(Omega, k, params):
    """Closed form 1/2 (4 zeta - sqrt2 sqrt(J^2 cos 2k + J^2 - 2 Omega^2) - 2J)."""
    J, zeta = params.J, params.zeta
    return 0.5 * (4 * zeta - math.sqrt(2) * np.sqrt(J * J * math.cos(2 * k) + J * J
                                                  - 2 * Omega * Omega + 0j) - 2 * J)


def kernel_m1_short(Omega, x, params):
    """Trace-log kernel of (dSigma^ud, dSigma^du) for zeta > J."""
    J, zeta = params.J, params.zeta
    p = _p(x)
    pre = 1.0 / (2 * (Omega * Omega + (J - 2 * zeta) ** 2))
    M = pre * np.array([[0, J - 2 * zeta + 1j * Omega * p],
                        [J - 2 * zeta - 1j * Omega * p, 0]], dtype=complex)
    return KernelMatrix(M, BASIS_OFFDIAG, Omega, 0.0, p)


def decay_rate(params):
    """Decay rate 2 sqrt(zeta (zeta - J)) of |G^ud(t,t)| away from t = T."""
    if params.zeta < params.J:
        raise ParameterError("decay_rate needs zeta >= J")
    return 2 * math.sqrt(params.zeta * (params.zeta - params.J))


def predict_area_F(phi, params):
    """F/N ~ J/sqrt(zeta(zeta-J)) (1 - cos phi); order of magnitude only."""
    J, zeta = params.J, params.zeta
    if not zeta > J:
        raise ParameterError("predict_area_F needs zeta > J")
    return J / math.sqrt(zeta * (zeta - J)) * (1 - np.cos(phi))


# long-range phase (zeta < J)

def kernel_m1_volume(Omega, x, saddle, params):
    """4 x 4 trace-log kernel in (dSigma^uu, dSigma^dd, dSigma^ud, dSigma^du)."""
    zeta, S, z, R = _symbols(saddle, params)
    if not S > 0:
        raise ParameterError("kernel_m1_volume needs S > 0")
    p = _p(x)
    W = Omega
    a = -0.5 * S * z * (zeta * p + 1j * W)
    ab = -0.5 * S * z * (zeta * p - 1j * W)
    b = S * (zeta * p - 1j * W) / (2 * z)
    bb = S * (zeta * p + 1j * W) / (2 * z)
    c = 0.5 * (-2 * S * S - zeta * (zeta - 1j * p * W))
    cb = 0.5 * (-2 * S * S - zeta * (zeta + 1j * p * W))
    M = np.array([[S * S, S * S, a, b],
                  [S * S, S * S, a, b],
                  [ab, ab, -S * S * z * z, c],
                  [bb, bb, cb, -S * S / (z * z)]], dtype=complex)
    M /= R * (R * R + W * W)
    return KernelMatrix(M, BASIS_SIGMA, Omega, 0.0, p)


def _root(Omega, saddle, params):
    zeta, S, z, R = _symbols(saddle, params)
    W = Omega
    return np.sqrt(W * W * z * z * (2 * S * S * (z ** 4 + 1) + zeta * zeta * z * z)
                   + (S * S * (z * z + 1) ** 2 + zeta * zeta * z * z) ** 2)


def m1_volume_eigenvalues(Omega, saddle, params):
    """Closed-form spectrum (0, 0, lambda_3, lambda_4) of kernel_m1_volume."""
    zeta, S, z, R = _symbols(saddle, params)
    rt = _root(Omega, saddle, params)
    den = 2 * z * z * R * (R * R + Omega * Omega)
    off = S * S * (z * z - 1) ** 2
    return np.array([0.0, 0.0, (rt - off) / den, (-rt - off) / den])


def m1_volume_eigenvectors(Omega, x, saddle, params):
    """Unnormalized eigenvectors u1..u4 (columns) of kernel_m1_volume."""
    zeta, S, z, R = _symbols(saddle, params)
    p = _p(x)
    W = Omega
    rt = _root(Omega, saddle, params)
    cols = [np.array([1, -1, 0, 0], dtype=complex),
            np.array([0, zeta * (-p) / (S * z), -1 / (z * z), 1], dtype=complex)]
    for sg in (1, -1):
        d12 = 2 * S * S * (zeta * p * (z ** 3 + z) + 1j * W * z) + zeta ** 2 * z ** 3 * (zeta * p + 1j * W)
        e12 = S * (sg * rt + S * S * (z * z + 1) ** 2 + zeta * z ** 4 * (zeta + 1j * p * W)) / d12
        d3 = 2 * S * S * (zeta * p * (z * z + 1) + 1j * W) + zeta ** 2 * z * z * (zeta * p + 1j * W)
        e3 = (-sg * zeta * p * rt + S * S * (zeta * p * (z ** 4 - 1) + 2j * W * z * z)) / d3
        cols.append(np.array([e12, e12, e3, 1], dtype=complex))
    return np.stack(cols, axis=1)


def unitary_eigenbasis(Omega, x, saddle, params):
    """Normalized eigenvectors, phase fixed by a real positive last component."""
    U = m1_volume_eigenvectors(Omega, x, saddle, params)
    out = np.empty_like(U)
    for j in range(U.shape[1]):
        u = U[:, j]
        nz = np.nonzero(np.abs(u) > 1e-300)[0]
        ph = u[nz[-1]] / abs(u[nz[-1]])
        out[:, j] = u / ph / np.linalg.norm(u)
    return out


def zero_mode_constraints(kernel, saddle=None, params=None):
    """Constraint vectors on (dG^uu, dG^dd, dG^du, dG^ud) from the zero modes.

    Returns (u1, u2): u1 . g = 0 is dG^uu = dG^dd, u2 . g = 0 is
    zeta (-1)^(x+1)/(S z) dG^dd - dG^du/z^2 + dG^ud = 0.  For S = 0 (no
    saddle passed or S = 0) the constraints degenerate to dG^uu = dG^dd = 0.
    """
    p = kernel.parity
    if saddle is None or saddle.S == 0:
        return (np.array([1, 0, 0, 0], dtype=complex), np.array([0, 1, 0, 0], dtype=complex))
    zeta, S, z, R = _symbols(saddle, params)
    u1 = np.array([1, -1, 0, 0], dtype=complex)
    u2 = np.array([0, zeta * (-p) / (S * z), -1 / (z * z), 1], dtype=complex)
    return u1, u2


def null_space(kernel, rtol=1e-10):
    """Numerical right null space (columns) of a kernel via SVD."""
    M = kernel.matrix
    u, s, vh = np.linalg.svd(M)
    keep = s <= rtol * s.max()
    return vh[keep].conj().T


def kernel_m3_volume(x, saddle, params):
    """Interaction kernel in (dG^uu, dG^dd, dG^ud, dG^du)."""
    zeta, S, z, R = _symbols(saddle, params)
    p = _p(x)
    z2 = z * z
    M = np.zeros((4, 4), dtype=complex)
    M[0, 0] = (-3 * zeta * p * z2 * R - 6 * S * S * z2 - 3 * zeta * zeta * z2) / (4 * z2)
    M[1, 1] = (3 * zeta * p * z2 * R - 6 * S * S * z2 - 3 * zeta * zeta * z2) / (4 * z2)
    M[2, 2] = S * S * z2 / 2
    M[2, 3] = M[3, 2] = -S * S
    M[3, 3] = S * S / (2 * z2)
    return KernelMatrix(M / (R * R), BASIS_G, 0.0, 0.0, p)


def _gap22(k, saddle, params, sign):
    zeta, S, z, R = _symbols(saddle, params)
    J = params.J
    z4 = z ** 4
    num = S * S * (sign * J * math.cos(k) * (S * S * (z4 + 1) ** 2 + zeta * zeta * z4)
                   - 3 * J * S * S * (z4 + 1) ** 2
                   - zeta * zeta * J * (z ** 8 + z4 + 1)
                   + (z4 + 1) ** 2 * R ** 3)
    return num / (2 * zeta * zeta * z4 * R * R)


def kernel_gapless_full(k, Omega, saddle, params):
    """4 x 4 kernel M^(2) in (phi1(k), phi1(k+pi), phi2(k), phi2(k+pi))."""
    zeta, S, z, R = _symbols(saddle, params)
    J = params.J
    if not S > 0:
        raise ParameterError("kernel_gapless_full needs S > 0")
    if zeta == 0:
        raise ParameterError("kernel_gapless_full is singular at zeta = 0")
    c = math.cos(k)
    z4 = z ** 4
    w = -1j * S * S * Omega * (z4 + 1) / (4 * zeta * z * z * R)
    v2 = -J * S * S * (z4 - 1) * (c - 1) / (4 * z * z * R * R)
    g13 = J * S * S * (z4 - 1) * (c + 1) / (4 * z * z * R * R)
    M = np.zeros((4, 4), dtype=complex)
    M[0, 0] = J * S * S * (c - 1) / (2 * R * R)
    v = np.array([0, v2, w])
    M[0, 1:] = v
    M[1:, 0] = v.conj()
    M[1, 1] = -J * S * S * (c + 1) / (2 * R * R)
    M[1, 2] = w
    M[2, 1] = -w
    M[1, 3] = M[3, 1] = g13
    M[2, 2] = _gap22(k, saddle, params, -1)
    M[3, 3] = _gap22(k, saddle, params, +1)
    return KernelMatrix(M, BASIS_PHI, Omega, k)


def reduce_gapless(k, Omega, saddle, params, k4=False):
    """Coefficient of phi1^2 after integrating out the gapped modes.

    M^(2)_11 minus v~ (M_gap at k = Omega = 0)^-1 v~^dagger, with v~ the
    leading-order coupling vector.  The k^2 coupling to phi1(k+pi) only
    contributes at O(k^4) and is dropped unless ``k4`` is set; at V = 0 the
    gapped block is singular in that direction and the term is meaningless.
    """
    zeta, S, z, R = _symbols(saddle, params)
    J = params.J
    z4 = z ** 4
    m11 = J * S * S * (math.cos(k) - 1) / (2 * R * R)
    v2 = J * k * k * S * S * (z4 - 1) / (8 * z * z * R * R) if k4 else 0.0
    vt = np.array([0, v2, -1j * S * S * Omega * (z4 + 1) / (4 * zeta * z * z * R)])
    gap0 = kernel_gapless_full(0.0, 0.0, saddle, params).matrix[1:, 1:]
    corr = vt @ np.linalg.solve(gap0, vt.conj())
    return complex(m11 - corr).real


def gapless_closed_form(k, Omega, saddle, params):
    zeta, S, z, R = _symbols(saddle, params)
    J = params.J
    return -(J * k * k * S * S / (4 * R * R) + S * S * Omega * Omega / (4 * R * R * (2 * R - J)))


def xy_coefficients(saddle, params):
    """Stiffnesses of the large-N XY action for the relative phase."""
    zeta, S, z, R = _symbols(saddle, params)
    J = params.J
    if not S > 0:
        raise ParameterError("xy_coefficients needs S > 0")
    return XYCoefficients(S * S / (4 * R * R * (2 * R - J)), J * S * S / (4 * R * R))


def predict_log_F(phi, A_size, L, saddle, params):
    """F/N ~ [S^2 phi^2/(zeta^2+4S^2)] sqrt(J/(2R - J)) log chord(|A|)."""
    zeta, S, z, R = _symbols(saddle, params)
    J = params.J
    if not S > 0:
        raise ParameterError("predict_log_F needs S > 0")
    if not 0 < A_size < L:
        raise ParameterError("predict_log_F needs 0 < |A| < L")
    chord = L * math.sin(math.pi * A_size / L) / math.pi
    return log_slope(phi, saddle, params) * math.log(chord)


def log_slope(phi, saddle, params):
    """Coefficient of log chord in :func:`predict_log_F`."""
    zeta, S, z, R = _symbols(saddle, params)
    J = params.J
    return S * S * phi * phi / (R * R) * math.sqrt(J / (2 * R - J))


def default_saddle(params):
    return solve_saddle(params)


def kernel_report(n=100, seed=1, small=0.1):
    """Random-draw consistency checks of the kernels against their closed
    forms.  Returns (passed, detail) with the worst error of each check."""
    from .saddle import ModelParams
    rng = np.random.default_rng(seed)
    worst = {"zero_eig": 0.0, "lambda34": 0.0, "null_space": 0.0, "dispersion": 0.0,
             "schur": 0.0}
    kappa_min = math.inf
    for _ in range(n):
        J = rng.uniform(0.5, 2.0)
        p = ModelParams(J=J, V=rng.uniform(0, 2 * J), zeta=rng.uniform(0.05, 0.95) * J)
        s = solve_saddle(p)
        W = rng.uniform(-2, 2) * J
        x = int(rng.integers(1, 21))
        K = kernel_m1_volume(W, x, s, p)
        ev = K.eigvals()
        scale = np.abs(ev).max()
        order = np.argsort(np.abs(ev))
        worst["zero_eig"] = max(worst["zero_eig"], float(np.abs(ev[order[:2]]).max() / scale))
        for lam in m1_volume_eigenvalues(W, s, p)[2:]:
            worst["lambda34"] = max(worst["lambda34"], float(np.abs(ev - lam).min() / scale))
        ns = null_space(K, 1e-9)
        if ns.shape[1] != 2:
            worst["null_space"] = math.inf
        else:
            for u in zero_mode_constraints(K, s, p):
                u = u / np.linalg.norm(u)
                worst["null_space"] = max(worst["null_space"],
                                          float(np.linalg.norm(u - ns @ (ns.conj().T @ u))))
        k, Om = rng.uniform(0.01, small) * J, rng.uniform(0.01, small) * J
        a, b = reduce_gapless(k, Om, s, p), gapless_closed_form(k, Om, s, p)
        worst["schur"] = max(worst["schur"], abs(a / b - 1))
        xy = xy_coefficients(s, p)
        kappa_min = min(kappa_min, xy.kappa_t, xy.kappa_x)
        ps = ModelParams(J=J, zeta=rng.uniform(1.05, 3.0) * J)
        exact = short_range_lower_eigenvalue(Om, k, ps).real
        worst["dispersion"] = max(worst["dispersion"],
                                  abs(short_range_dispersion(Om, k, ps) / exact - 1))
    ok = (worst["zero_eig"] < 1e-10 and worst["lambda34"] < 1e-10
          and worst["null_space"] < 1e-8 and worst["dispersion"] < 0.01
          and worst["schur"] < 0.02 and kappa_min > 0)
    return ok, dict(worst, kappa_min=kappa_min)
