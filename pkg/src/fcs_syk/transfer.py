"""Per-site transfer-matrix evaluation of the contour Green's functions.

With time-local self-energies every flavor evolves independently.  The
single-mode operator sandwiched between the two branches stays in the span of
the diagonal projectors (p0, p1) and obeys dX/dt = A(t) X with

    A = [[0, g_minus], [g_plus, -2 eps]],
    eps = s_x zeta - Sigma^uu,  g_plus = Sigma^ud,  g_minus = -Sigma^du.

The t = 0 boundary vector is (1, exp(-mu - i phi_x)) (density matrix with the
inverse twist), the t = T one is (1, exp(i phi_x)).  Inside a slice of length
h the self-energy is held constant, so each slice is propagated exactly.
Equal-time Green's functions are slice averages of the insertions, obtained
from closed-form integrals of exp(A s) C exp(A (h - s)).
"""
import numpy as np


def _g3(x):
    # (x cosh x - sinh x) / x^3, even in x
    small = np.abs(x) < 2e-2
    xs = np.where(small, 1.0, x)
    exact = (xs * np.cosh(xs) - np.sinh(xs)) / xs ** 3
    x2 = x * x
    return np.where(small, 1 / 3 + x2 / 30 + x2 * x2 / 840, exact)


def _shc(x):
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    return np.where(small, 1 + x * x / 6, np.sinh(xs) / xs)


def slice_propagators(eps, gp, gm, h):
    """exp(A h) and the pieces of the slice-averaged insertion integral.

    Uses A = -eps I + At with At^2 = d2 I (Cayley-Hamilton), so only
    even functions of d = sqrt(d2) appear and the branch of the root is
    irrelevant.
    """
    d2 = eps * eps + gp * gm
    x = np.sqrt(d2 + 0j) * h
    ch = np.cosh(x)
    sh = h * _shc(x)
    At = np.empty(np.shape(eps) + (2, 2), complex)
    At[..., 0, 0] = eps
    At[..., 0, 1] = gm
    At[..., 1, 0] = gp
    At[..., 1, 1] = -eps
    ef = np.exp(-eps * h)
    E = ef[..., None, None] * (ch[..., None, None] * np.eye(2) + sh[..., None, None] * At)
    I1 = 0.5 * (h * ch + sh)
    I2 = 0.5 * h * sh
    I3 = 0.5 * h ** 3 * _g3(x)
    return E, At, ef, I1, I2, I3


def boundary_vectors(L, mu, phi, A_size):
    inA = np.arange(1, L + 1) <= A_size
    ph = np.where(inA, phi, 0.0)
    r0 = np.stack([np.ones(L), np.exp(-mu - 1j * ph)], -1).astype(complex)
    lT = np.stack([np.ones(L), np.exp(1j * ph)], -1).astype(complex)
    return r0, lT


def evaluate(eps, gp, gm, h, r0, lT):
    """Equal-time tracks and log partition functions for all sites.

    Parameters
    ----------
    eps, gp, gm : (L, n_t) complex arrays of slice-constant generator entries
    h : slice length
    r0, lT : (L, 2) boundary vectors

    Returns
    -------
    n, B, Bbar : (L, n_t) slice-averaged <p1>, <p1 -> p0>, <p0 -> p1>
    logZ : (L,) complex, log of lT . prod exp(A h) . r0
    """
    L, nt = eps.shape
    E, At, ef, I1, I2, I3 = slice_propagators(eps, gp, gm, h)
    r = np.empty((L, nt + 1, 2), complex)
    l = np.empty((L, nt + 1, 2), complex)
    logs = np.zeros(L, complex)
    v = r0
    r[:, 0] = v
    for k in range(nt):
        v = np.einsum('lij,lj->li', E[:, k], v)
        s = np.linalg.norm(v, axis=1)
        v = v / s[:, None]
        logs += np.log(s)
        r[:, k + 1] = v
    logZ = logs + np.log(np.einsum('li,li->l', lT, v))
    w = lT
    l[:, nt] = w
    for k in range(nt - 1, -1, -1):
        w = np.einsum('li,lij->lj', w, E[:, k])
        w = w / np.linalg.norm(w, axis=1)[:, None]
        l[:, k] = w
    rk = r[:, :nt]
    lk = l[:, 1:]
    # W = int_0^h exp(A(h-s)) r l^T exp(A s) ds / h, normalised by l.E.r
    C = rk[..., :, None] * lk[..., None, :]
    AC = At @ C
    CA = C @ At
    W = ef[..., None, None] * (I1[..., None, None] * C
                               + I2[..., None, None] * (AC + CA)
                               + I3[..., None, None] * (AC @ At))
    Z = np.einsum('lki,lkij,lkj->lk', lk, E, rk)
    W = W / (Z[..., None, None] * h)
    return W[..., 1, 1], W[..., 1, 0], W[..., 0, 1], logZ
