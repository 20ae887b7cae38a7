"""Retarded Green's function: exact Wronskian form, QNM expansions, identities."""
from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import NearPole
from .profiles import CavityProfile
from .series import DEFAULT, GreensSeriesResult, SeriesConfig, finish, pair_sums
from .spectrum import Spectrum, _sin_over_k, left_states, right_states

NEAR_POLE = 1e-12


def _at(profile: CavityProfile, states, x, omega):
    """Evaluate a solution given its states at segment starts."""
    vals, ders = states
    x = float(x)
    if x < -1e-12 or x > profile.a * (1 + 1e-12):
        raise ValueError("x outside [0, a]")
    i = int(profile.segment_of(x))
    u = x - profile.edges[i]
    k = profile.indices[i] * omega
    f = vals[i] * np.cos(k * u) + ders[i] * _sin_over_k(k, u)
    d = -vals[i] * k * np.sin(k * u) + ders[i] * np.cos(k * u)
    return f, d


def homogeneous_solutions(profile: CavityProfile, x, omega):
    """``(f, f', g, g')`` at ``x`` for the left and outgoing solutions."""
    omega = np.asarray(omega, dtype=complex)
    f, fd = _at(profile, left_states(profile, omega), x, omega)
    g, gd = _at(profile, right_states(profile, omega), x, omega)
    return f, fd, g, gd


def wronskian_at(profile: CavityProfile, x, omega):
    """``f g' - f' g`` evaluated at an arbitrary point ``x`` (should not depend on it)."""
    f, fd, g, gd = homogeneous_solutions(profile, x, omega)
    return f * gd - fd * g


def _scaled_trig(k, u):
    """``cos(k u)``, ``sin(k u)/k`` and ``k sin(k u)``, all times ``exp(-|Im k u|)``.

    Returns the scaled values and the exponent ``|Im k u|`` that was removed.
    """
    z = k * u
    s = np.abs(z.imag)
    big = s > 30.0
    zs = np.where(big, z, 0.0)
    ep = np.exp(1j * zs - s)
    em = np.exp(-1j * zs - s)
    damp = np.exp(-np.where(big, 0.0, s))
    c = np.where(big, 0.5 * (ep + em), np.cos(np.where(big, 0.0, z)) * damp)
    ksafe = np.where(k == 0, 1.0, k)
    sin_s = np.where(big, (ep - em) / 2j, np.sin(np.where(big, 0.0, z)) * damp)
    sk = np.where(big, sin_s / ksafe, _sin_over_k(np.where(big, 0.0, k), u) * damp)
    return c, sk, k * sin_s, s


def _scaled_solution(profile, omega, x, outgoing):
    """Left (``f``) or outgoing (``g``) solution at ``x`` in scaled form.

    Returns ``(value, slope, log_scale)`` with the true solution equal to
    ``(value, slope) * exp(log_scale)``.  Also returns the state at ``a`` for
    the left solution so the Wronskian can be formed with the same scaling.
    """
    nseg = len(profile.edges)
    edges = list(profile.edges) + [profile.a]
    seg = int(profile.segment_of(x))
    if not outgoing:
        u, d = np.zeros(omega.shape, complex), np.ones(omega.shape, complex)
        log = np.zeros(omega.shape)
        at_x = None
        for i in range(nseg):
            k = profile.indices[i] * omega
            if i == seg:
                c, sk, ks, sx = _scaled_trig(k, x - edges[i])
                at_x = (u * c + d * sk, -u * ks + d * c, log + sx)
            c, sk, ks, sl = _scaled_trig(k, edges[i + 1] - edges[i])
            u, d = u * c + d * sk, -u * ks + d * c
            m = np.maximum(np.abs(u), np.abs(d) / np.maximum(np.abs(k), 1.0))
            m = np.where(m > 0, m, 1.0)
            u, d, log = u / m, d / m, log + sl + np.log(m)
        return at_x, (u, d, log)
    u = np.ones(omega.shape, complex)
    d = 1j * profile.n0 * omega
    log = np.zeros(omega.shape)
    for i in range(nseg - 1, seg - 1, -1):
        k = profile.indices[i] * omega
        length = (edges[i + 1] - x) if i == seg else (edges[i + 1] - edges[i])
        c, sk, ks, sl = _scaled_trig(k, -length)
        u, d = u * c + d * sk, -u * ks + d * c
        if i != seg:
            m = np.maximum(np.abs(u), np.abs(d) / np.maximum(np.abs(k), 1.0))
            m = np.where(m > 0, m, 1.0)
            u, d, log = u / m, d / m, log + np.log(m)
        log = log + sl
    return (u, d, log), None


def retarded_green_exact(profile: CavityProfile, x, y, omega):
    """``G(x, y, omega) = f(x<) g(x>) / W``, vectorized over ``omega``.

    The homogeneous solutions are propagated with their exponential growth
    factored out, so far off the real axis (e.g. at large Matsubara
    frequencies) the result stays finite.

    Raises
    ------
    NearPole
        if ``|W|`` is below ``1e-12`` of its natural scale at any ``omega``.
    """
    omega = np.asarray(omega, dtype=complex)
    if x < -1e-12 or y < -1e-12 or max(x, y) > profile.a * (1 + 1e-12):
        raise ValueError("x outside [0, a]")
    lo, hi = min(x, y), max(x, y)
    (f, _, lf), (fa, fda, la) = _scaled_solution(profile, omega, lo, outgoing=False)
    (g, _, lg), _ = _scaled_solution(profile, omega, hi, outgoing=True)
    W = 1j * profile.n0 * omega * fa - fda
    scale = np.abs(fda) + profile.n0 * np.abs(omega) * np.abs(fa)
    if np.any(np.abs(W) <= NEAR_POLE * scale):
        raise NearPole("omega is at a QNM frequency")
    with np.errstate(under="ignore"):
        out = f * g / W * np.exp(lf + lg - la)
    return complex(out) if out.ndim == 0 else out


def _truncate(spectrum: Spectrum, config: SeriesConfig) -> Spectrum:
    if config.qnm_terms is None:
        return spectrum
    return spectrum.truncated(config.qnm_terms)


def retarded_green_qnm(spectrum: Spectrum, x, y, omega,
                       config: SeriesConfig = DEFAULT) -> GreensSeriesResult:
    """``sum_j f_j(x) f_j(y) / (2 omega_j (omega - omega_j))`` with pairs combined."""
    sp = _truncate(spectrum, config)
    w, fx, _ = sp.table([x, y])
    terms = fx[:, 0] * fx[:, 1] / (2 * w * (omega - w))
    return finish(np.cumsum(pair_sums(sp, terms)), config)


def retarded_green_qnm_time(spectrum: Spectrum, x, y, t,
                            config: SeriesConfig = DEFAULT) -> GreensSeriesResult:
    """``sum_j f_j(x) f_j(y) exp(-i omega_j t) / (2 i omega_j)`` for ``t >= 0``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    sp = _truncate(spectrum, config)
    w, fx, _ = sp.table([x, y])
    terms = fx[:, 0] * fx[:, 1] / (2j * w) * np.exp(-1j * w * t)
    return finish(np.cumsum(pair_sums(sp, terms)), config)


def retarded_green_time_fourier(profile: CavityProfile, x, y, t, eta=1.0,
                                omega_max=2000.0, panel=0.5, order=24):
    """Independent oracle: inverse Fourier transform of the exact ``G``.

    The integral runs along ``Im omega = eta`` where ``G`` is analytic.  The
    free-medium direct wave of the segment holding ``x`` and ``y`` is
    subtracted and added back in closed form; the remainder is integrated
    with Gauss-Legendre panels up to ``omega_max``.
    """
    i, j = int(profile.segment_of(x)), int(profile.segment_of(y))
    if i != j:
        raise ValueError("oracle needs x and y in the same segment")
    n = profile.indices[i]
    tau = n * abs(x - y)
    nodes, wts = np.polynomial.legendre.leggauss(order)
    edges = np.arange(0.0, omega_max + panel / 2, panel)
    h = 0.5 * np.diff(edges)
    u = (edges[:-1, None] + h[:, None] * (nodes + 1)).ravel()
    w = (h[:, None] * wts).ravel()
    om = u + 1j * eta
    direct = np.exp(1j * n * om * abs(x - y)) / (2j * n * om)
    rem = retarded_green_exact(profile, x, y, om) - direct
    # G(-conj w) = conj G(w) folds the negative half-line onto the positive one
    integral = 2 * np.sum(w * np.real(np.exp(-1j * u * t) * rem))
    return float(np.exp(eta * t) * integral / (2 * np.pi) - 0.5 / n * (t > tau))


def verify_dissipation_identity(profile: CavityProfile, x, y, omega) -> float:
    """Relative residual of ``G(w) - G(-w) = (2 n0 w / i) G(x,a,w) G(y,a,-w)``."""
    a = profile.a
    gp = retarded_green_exact(profile, x, y, omega)
    gm = retarded_green_exact(profile, x, y, -omega)
    rhs = (2 * profile.n0 * omega / 1j) * retarded_green_exact(profile, x, a, omega) \
        * retarded_green_exact(profile, y, a, -omega)
    lhs = gp - gm
    scale = np.abs(gp) + np.abs(gm) + np.abs(rhs)
    if np.all(scale == 0):
        return 0.0
    return float(np.max(np.abs(lhs - rhs) / np.where(scale == 0, 1, scale)))


def dissipation_magnitude(profile: CavityProfile, x, y, omega) -> float:
    """``|G(x,y,w) - G(x,y,-w)|``: vanishes for a conservative cavity."""
    return float(abs(retarded_green_exact(profile, x, y, omega)
                     - retarded_green_exact(profile, x, y, -omega)))


def verify_qnm_sum_identity(spectrum: Spectrum, x, y, n_pairs=None, cesaro=True):
    """``|sum_j f_j(x) f_j(y) / omega_j|`` over the first ``n_pairs`` pairs.

    Returns a ``GreensSeriesResult`` whose value is the (averaged) partial sum;
    its magnitude is the residual.
    """
    sp = spectrum if n_pairs is None else spectrum.truncated(n_pairs)
    w, fx, _ = sp.table([x, y])
    terms = fx[:, 0] * fx[:, 1] / w
    return finish(np.cumsum(pair_sums(sp, terms)), SeriesConfig(cesaro=cesaro))


def wronskian_constancy(profile: CavityProfile, omega, xs=None) -> float:
    """Max relative spread of ``W`` over sample points in ``[0, a]``."""
    xs = np.linspace(0.05, 0.95, 7) * profile.a if xs is None else xs
    vals = np.array([wronskian_at(profile, x, omega) for x in xs])
    ref = wronskian_at(profile, profile.a, omega)
    return float(np.max(np.abs(vals - ref)) / abs(ref))


def kramers_kronig_residual(profile: CavityProfile, x, omegas, omega_max=200.0, n=40000):
    """Relative KK residual of ``G(x,x,.)`` on a finite window.

    ``Re G(w) - Re G(inf)`` is rebuilt from ``Im G`` by a principal-value
    integral over ``[-omega_max, omega_max]``; returns the max error on
    ``omegas`` relative to ``max |Re G|`` there.
    """
    # midpoint grid, offset so no node hits an evaluation frequency
    grid = np.linspace(-omega_max, omega_max, n + 1)
    mid = 0.5 * (grid[1:] + grid[:-1])
    dw = grid[1] - grid[0]
    im = np.imag(retarded_green_exact(profile, x, x, mid + 0j))
    out, ref = [], []
    for w0 in np.atleast_1d(omegas):
        shifted = mid + 0.5 * dw if np.min(np.abs(mid - w0)) < 0.25 * dw else mid
        im_s = im if shifted is mid else np.imag(retarded_green_exact(profile, x, x, shifted + 0j))
        kk = np.sum(im_s / (shifted - w0)) * dw / np.pi
        re = np.real(retarded_green_exact(profile, x, x, complex(w0)))
        out.append(kk - re)
        ref.append(abs(re))
    return float(np.max(np.abs(out)) / max(ref))


def pole_series_time(spectrum: Spectrum, coeff, t):
    """``sum_j coeff_j exp(-i omega_j t)`` through the compiled kernel."""
    w = np.array([m.omega for m in spectrum.ordered])
    return _kernels.pole_series(coeff, w, t)
