"""Pure numpy implementations of the hot kernels.

These are the fallback for the compiled ``_core`` extension and share its
signatures exactly.  Every function here is also the reference the
extension is tested against.
"""
import numpy as np

EULER_GAMMA = 0.57721566490153286061

# E1 region boundaries; see e1() for the rationale of each branch.
_SERIES_RADIUS = 4.0
_ASYMPTOTIC_RADIUS = 40.0
_CF_DEPTH = 400


def _e1_series(z):
    # -gamma - log z - sum_{k>=1} (-z)^k / (k k!)
    total = np.zeros_like(z)
    term = np.ones_like(z)
    kmax = int(np.ceil(np.e * np.max(np.abs(z), initial=1.0))) + 30
    for k in range(1, kmax + 1):
        term = term * (-z) / k
        total = total + term / k
    return -EULER_GAMMA - np.log(z) - total


def _e1_cf(z, depth=_CF_DEPTH):
    # e^{-z} / (z+1 - 1/(z+3 - 4/(z+5 - ...))) evaluated bottom-up.
    tail = np.zeros_like(z)
    for k in range(depth, 0, -1):
        tail = k * k / (z + (2 * k + 1) - tail)
    return np.exp(-z) / (z + 1 - tail)


def _e1_asymptotic(z):
    total = np.ones_like(z)
    term = np.ones_like(z)
    kmax = int(np.floor(np.min(np.abs(z))))
    for k in range(1, kmax):
        term = term * (-k) / z
        total = total + term
    return np.exp(-z) / z * total


def e1(z):
    """Exponential integral E1 on the principal branch.

    On the negative real axis the principal value (real part) is returned.
    Raises ``ZeroDivisionError`` for ``z == 0``.
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    if np.any(flat == 0):
        raise ZeroDivisionError("E1 is singular at z=0")
    out = np.empty_like(flat)
    r = np.abs(flat)
    # The power series is well conditioned near the negative real axis even
    # for fairly large |z|, since its terms barely cancel there.
    near_cut = (r + flat.real) < _SERIES_RADIUS
    series = (r <= _SERIES_RADIUS) | (near_cut & (r < _ASYMPTOTIC_RADIUS))
    asym = (~series) & (r >= _ASYMPTOTIC_RADIUS)
    cf = ~(series | asym)
    if series.any():
        out[series] = _e1_series(flat[series])
    if cf.any():
        out[cf] = _e1_cf(flat[cf])
    if asym.any():
        out[asym] = _e1_asymptotic(flat[asym])
    on_cut = (flat.imag == 0) & (flat.real < 0)
    out[on_cut] = out[on_cut].real
    return out.reshape(z.shape)


def matsubara_sum(omega, beta, t, mmax):
    """sum_{m=1}^{mmax} mu_m exp(-mu_m t) / (mu_m^2 + omega^2), mu_m = 2 pi m / beta."""
    omega = np.asarray(omega, dtype=complex)
    out = np.zeros(omega.shape, dtype=complex)
    w2 = omega * omega
    for m in range(1, int(mmax) + 1):
        mu = 2.0 * np.pi * m / beta
        out += mu * np.exp(-mu * t) / (mu * mu + w2)
    return out


def pole_series(coeff, omega, t):
    """sum_j coeff_j exp(-i omega_j t) for each t."""
    coeff = np.asarray(coeff, dtype=complex)
    omega = np.asarray(omega, dtype=complex)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape, dtype=complex)
    chunk = max(1, 2_000_000 // max(1, omega.size))
    for s in range(0, t.size, chunk):
        tt = t[s:s + chunk]
        out[s:s + chunk] = np.exp(-1j * np.outer(tt, omega)) @ coeff
    return out


def feynman_double_sum(w, fa, fx, fy, omega):
    """Non-diagonal Feynman kernel contracted with mode values.

    sum_jk fa_j fa_k fx_j fy_k / (2 w_j w_k (w_j + w_k))
           * [theta(omega) w_j/(w_j - omega) + theta(-omega) w_k/(w_k + omega)]
    """
    w = np.asarray(w, dtype=complex)
    fa = np.asarray(fa, dtype=complex)
    left = fa * np.asarray(fx, dtype=complex) / w
    right = fa * np.asarray(fy, dtype=complex) / w
    pos = 1.0 if omega > 0 else (0.5 if omega == 0 else 0.0)
    neg = 1.0 - pos
    denom = w[:, None] + w[None, :]
    brace = np.zeros(denom.shape, dtype=complex)
    if pos:
        brace = brace + pos * (w / (w - omega))[:, None]
    if neg:
        brace = brace + neg * (w / (w + omega))[None, :]
    return complex(left @ (brace / (2.0 * denom)) @ right)


def exp_integrator(omega, kappa, a0, b, h):
    """Solve a' + i omega a = kappa b(t) on a uniform grid.

    ``b`` is treated as piecewise linear between samples, for which the
    update is exact.
    """
    b = np.asarray(b, dtype=complex)
    n = b.size
    out = np.empty(n, dtype=complex)
    z = -1j * omega * h
    e = np.exp(z)
    # int_0^h e^{-i omega (h-s)} b(s) ds = c_now b_k + c_next b_{k+1}
    if abs(z) < 1e-4:
        c_now = h * (0.5 + z / 3.0 + z * z / 8.0 + z ** 3 / 30.0)
        c_next = h * (0.5 + z / 6.0 + z * z / 24.0 + z ** 3 / 120.0)
    else:
        phi1 = (e - 1.0) / z
        c_now = h * (e * (z - 1.0) + 1.0) / (z * z)
        c_next = h * phi1 - c_now
    a = complex(a0)
    out[0] = a
    for k in range(n - 1):
        a = a * e + kappa * (c_now * b[k] + c_next * b[k + 1])
        out[k + 1] = a
    return out
