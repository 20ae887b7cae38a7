"""Finite-temperature correlators of the cavity field.

Units have hbar = k_B = 1.  A ``ThermalState`` with ``beta = inf`` is the zero
temperature sentinel.  The outside index ``n0`` enters through the surface
factors, e.g. the force spectral density is ``2 n0 omega bose(omega)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import digamma

from . import _kernels
from .errors import PoleAt
from .greens import retarded_green_exact
from .profiles import CavityProfile
from .series import DEFAULT, GreensSeriesResult, SeriesConfig, finish, pair_sums
from .spectrum import QnmMode, Spectrum, _rod_params, make_grid

POLE_GUARD = 1e-12


@dataclass(frozen=True)
class ThermalState:
    """Inverse temperature with Bose-factor and Matsubara accessors."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError("beta must be positive (or inf)")

    @property
    def zero_temperature(self) -> bool:
        return np.isinf(self.beta)

    def matsubara(self, m):
        """``mu_m = 2 pi m / beta``."""
        if self.zero_temperature:
            raise ValueError("no Matsubara frequencies at T = 0")
        return 2 * np.pi * np.asarray(m) / self.beta

    def _guard(self, omega):
        omega = np.asarray(omega, dtype=complex)
        if self.zero_temperature:
            bad = np.abs(omega) < POLE_GUARD
        else:
            step = 2 * np.pi / self.beta
            m = np.round(omega.imag / step)
            bad = np.abs(omega - 1j * m * step) < POLE_GUARD
        if np.any(bad):
            raise PoleAt(complex(np.ravel(omega)[np.argmax(np.ravel(bad))]), "Bose-factor pole")

    def bose(self, omega):
        """``1 / (1 - exp(-beta omega))``; a step function at ``beta = inf``."""
        self._guard(omega)
        omega = np.asarray(omega)
        if self.zero_temperature:
            out = np.where(np.real(omega) > 0, 1.0, 0.0)
            out = np.where(np.real(omega) == 0, 0.5, out)
            return out if out.ndim else float(out)
        with np.errstate(over="ignore"):
            out = -1.0 / np.expm1(-self.beta * omega)
        return out if np.ndim(out) else out[()]

    def occupation(self, omega):
        """``1 / (exp(beta omega) - 1)`` evaluated without overflow."""
        self._guard(omega)
        omega = np.asarray(omega, dtype=complex)
        if self.zero_temperature:
            out = np.where(omega.real > 0, 0.0, -1.0) + 0j
            return out if out.ndim else complex(out)
        x = self.beta * omega
        pos = x.real > 0
        xs = np.where(pos, -x, x)
        e = np.exp(xs)
        with np.errstate(over="ignore", divide="ignore"):
            out = np.where(pos, e / (1 - e), 1 / np.expm1(np.where(pos, 1.0, x)))
        return out if out.ndim else complex(out)


def force_spectral_density(omega, thermal: ThermalState, n0=1.0):
    """``2 n0 omega / (1 - exp(-beta omega))`` for real ``omega``."""
    omega = np.asarray(omega, dtype=float)
    return 2 * n0 * omega * thermal.bose(omega)


# ---------------------------------------------------------------------------
# frequency-domain correlator

def _modes(spectrum: Spectrum, config: SeriesConfig):
    return spectrum if config.qnm_terms is None else spectrum.truncated(config.qnm_terms)


def correlator_diagonal(spectrum: Spectrum, x, y, omega, thermal: ThermalState,
                        config: SeriesConfig = DEFAULT, form="standard") -> GreensSeriesResult:
    """Diagonal QNM form of the spectral correlator ``F(x, y, omega)``.

    ``form="standard"`` sums ``f f / (omega_j (omega^2 - omega_j^2))``;
    ``form="partial_fraction"`` sums the slower but analytically simpler
    ``f f [1/(omega_j - omega) + 1/(omega_j + omega)]``.
    """
    omega = float(omega)
    pref = thermal.bose(omega)
    sp = _modes(spectrum, config)
    w, fx, _ = sp.table([x, y])
    ff = fx[:, 0] * fx[:, 1]
    if form == "standard":
        terms = 1j * omega * pref * ff / (w * (omega ** 2 - w ** 2))
    elif form == "partial_fraction":
        terms = -1j * pref / (2 * omega) * ff * (1 / (w - omega) + 1 / (w + omega))
    else:
        raise ValueError(f"unknown form {form!r}")
    return finish(np.cumsum(pair_sums(sp, terms)), config)


def chi(spectrum: Spectrum, x, omega, config: SeriesConfig = DEFAULT):
    """``sum_j f_j(a) f_j(x) / (omega_j (omega_j - omega))`` as pair partial sums."""
    sp = _modes(spectrum, config)
    w, fx, fa = sp.table([x])
    terms = fa * fx[:, 0] / (w * (w - omega))
    return np.cumsum(pair_sums(sp, terms))


def correlator_nondiagonal(spectrum: Spectrum, x, y, omega, thermal: ThermalState,
                           config: SeriesConfig = DEFAULT) -> GreensSeriesResult:
    """Non-diagonal (surface-driven) form, evaluated in factorized form.

    ``F = n0 omega bose(omega) / 2 * chi(x, omega) chi(y, -omega)``.
    """
    omega = float(omega)
    pref = 0.5 * spectrum.profile.n0 * omega * thermal.bose(omega)
    cx = chi(spectrum, x, omega, config)
    cy = chi(spectrum, y, -omega, config)
    return finish(pref * cx * cy, config)


def correlator_closed_rod(rod, x, y, omega, thermal: ThermalState):
    """Closed form of ``F`` for the dielectric rod."""
    n, n0, a = _rod_params(rod)
    omega = np.asarray(omega, dtype=float)
    den = n0 ** 2 * np.sin(n * omega * a) ** 2 + n ** 2 * np.cos(n * omega * a) ** 2
    out = 2 * n0 * np.sin(n * omega * x) * np.sin(n * omega * y) * thermal.bose(omega) / (omega * den)
    return out if np.ndim(out) else float(out)


def correlator_exact(profile: CavityProfile, x, y, omega, thermal: ThermalState):
    """``F = i [G(x,y,w) - G(x,y,-w)] bose(w)`` from the exact Green's function."""
    omega = np.asarray(omega, dtype=float)
    g = retarded_green_exact(profile, x, y, omega + 0j) - retarded_green_exact(profile, x, y, -omega + 0j)
    return 1j * g * thermal.bose(omega)


def fourier_resum_check(alpha, z, n_terms=10_000, cesaro=True) -> float:
    """Residual of the conventional Fourier series used for the rod resummation.

    Compares the symmetric partial sums of ``exp(i j pi z) / (j pi - i alpha)``
    with ``2i exp(alpha (2 - z)) / (exp(2 alpha) - 1)``.
    """
    if not 0 < z < 2:
        raise ValueError("z must lie in (0, 2)")
    alpha = complex(alpha)
    j = np.arange(1, n_terms + 1)
    pair = (np.exp(1j * j * np.pi * z) / (j * np.pi - 1j * alpha)
            + np.exp(-1j * j * np.pi * z) / (-j * np.pi - 1j * alpha))
    partial = 1 / (-1j * alpha) + np.cumsum(pair)
    value = partial.mean() if cesaro else partial[-1]
    exact = 2j * np.exp(alpha * (2 - z)) / (np.exp(2 * alpha) - 1)
    return float(abs(value - exact))


def exp_integral_E1(z):
    """Exponential integral ``E1`` on the principal branch.

    On the negative real axis the principal value (real part) is returned.
    """
    out = _kernels.e1(z)
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# real-time and subtracted correlators

def _matsubara_count(thermal, t, config):
    mu1 = 2 * np.pi / thermal.beta
    need = int(np.ceil(40.0 / (mu1 * t))) if t > 0 else config.matsubara_terms
    return max(1, min(need, config.matsubara_terms))


def _matsubara_tail(thermal, omega, t, mmax):
    mu = 2 * np.pi * (mmax + 1) / thermal.beta
    r = np.exp(-2 * np.pi * t / thermal.beta)
    return float(np.max(np.abs(mu * np.exp(-mu * t) / (mu ** 2 + np.asarray(omega) ** 2))) / max(1 - r, 1e-300))


def mode_weight_C(mode: QnmMode | complex, t, thermal: ThermalState,
                  config: SeriesConfig = DEFAULT):
    """Thermal weight ``C_j(t)`` of one mode (zero-point part subtracted).

    Returns ``(value, tail_estimate)``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if thermal.zero_temperature:
        raise ValueError("C_j needs finite beta")
    w = np.atleast_1d(np.asarray(getattr(mode, "omega", mode), dtype=complex))
    val, tail = _weights(w, t, thermal, config)
    return (complex(val[0]), tail) if np.ndim(getattr(mode, "omega", mode)) == 0 else (val, tail)


def _theta(re):
    return np.where(re > 0, 0.0, np.where(re < 0, 1.0, 0.5))


def _weights(w, t, thermal, config):
    mmax = _matsubara_count(thermal, t, config)
    occ = thermal.occupation(w)
    msum = _kernels.matsubara_sum(w, thermal.beta, t, mmax)
    e1p = _kernels.e1(1j * w * t)
    e1m = _kernels.e1(-1j * w * t)
    val = (0.5 * np.exp(-1j * w * t) * (occ + _theta(w.real))
           + 1j / thermal.beta * msum
           - 1j / (4 * np.pi) * (np.exp(1j * w * t) * e1p + np.exp(-1j * w * t) * e1m))
    tail = _matsubara_tail(thermal, w, t, mmax) / thermal.beta
    return val, tail


def subtracted_correlator(spectrum: Spectrum, x, y, t, thermal: ThermalState,
                          config: SeriesConfig = DEFAULT) -> GreensSeriesResult:
    """Thermal part ``F_S(x, y, t)`` of the real-time correlator (real valued).

    Sum over modes with ``Re omega_j >= 0`` of ``2 Re[f_j f_j C_j / omega_j]``,
    halved for purely imaginary modes.  Identically zero at ``beta = inf``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if thermal.zero_temperature:
        return GreensSeriesResult(0.0, 0, 0.0)
    sp = _modes(spectrum, config)
    modes = sp.nonnegative
    w = np.array([m.omega for m in modes])
    fx = np.array([m.evaluate(x) for m in modes])
    fy = np.array([m.evaluate(y) for m in modes])
    wt = np.where(w.real == 0.0, 0.5, 1.0)
    C, mtail = _weights(w, t, thermal, config)
    terms = wt * 2 * np.real(fx * fy * C / w)
    res = finish(np.cumsum(terms), config)
    return GreensSeriesResult(float(np.real(res.value)), res.terms_used,
                              res.tail_estimate + float(np.sum(np.abs(fx * fy / w))) * mtail)


def subtracted_correlator_fourier(profile: CavityProfile, x, y, t, thermal: ThermalState,
                                  omega_max=None):
    """Independent oracle for ``F_S``: cosine transform of the thermal part of ``F``.

    ``F_S(t) = (1/pi) int_0^inf cos(w t) S(w) / (exp(beta w) - 1) dw`` with
    ``S = i [G(w) - G(-w)]`` from the exact Green's function.
    """
    beta = thermal.beta
    omega_max = omega_max or 60.0 / beta

    def integrand(w):
        if w == 0.0:
            w = 1e-12
        g = retarded_green_exact(profile, x, y, w + 0j) - retarded_green_exact(profile, x, y, -w + 0j)
        return np.real(1j * g) * np.cos(w * t) / np.expm1(beta * w)

    peaks = max(50, int(omega_max * profile.optical_length / np.pi) * 4)
    val, _ = quad(integrand, 0.0, omega_max, limit=peaks * 4, epsabs=1e-13, epsrel=1e-11)
    return val / np.pi


def correlator_realtime(spectrum: Spectrum, x, y, t, thermal: ThermalState,
                        config: SeriesConfig = DEFAULT, profile: CavityProfile | None = None):
    """Real-time correlator ``F(x, y, t)`` from its poles.

    QNM poles contribute ``f f exp(-beta w theta(-t) - i w |t|) / (2 w (1 - e^{-beta w}))``;
    the Matsubara poles contribute
    ``sum_m exp(-mu_m |t|) / beta [G(x,y,-i mu_m) - G(x,y,i mu_m)]`` with the
    exact ``G``.  Vectorized over ``t``; returns complex values.
    """
    if thermal.zero_temperature:
        raise ValueError("real-time form needs finite beta")
    profile = profile or spectrum.profile
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t == 0):
        raise ValueError("t = 0 is excluded")
    sp = _modes(spectrum, config)
    w, fx, _ = sp.table([x, y])
    coeff = fx[:, 0] * fx[:, 1] * thermal.bose(w) / (2 * w)
    out = np.zeros(t.shape, dtype=complex)
    pos, neg = t > 0, t < 0
    if pos.any():
        out[pos] = _kernels.pole_series(coeff, w, t[pos])
    if neg.any():
        # exp(-beta w) exp(-i w |t|) = exp(-i w (|t| - i beta))
        c2 = coeff * np.exp(-thermal.beta * w)
        out[neg] = _kernels.pole_series(c2, w, -t[neg])
    tmin = float(np.min(np.abs(t)))
    mmax = _matsubara_count(thermal, tmin, config)
    mu = thermal.matsubara(np.arange(1, mmax + 1))
    gd = retarded_green_exact(profile, x, y, -1j * mu) - retarded_green_exact(profile, x, y, 1j * mu)
    out += (np.exp(-np.outer(np.abs(t), mu)) @ gd) / thermal.beta
    return out if out.size > 1 else complex(out[0])


# ---------------------------------------------------------------------------
# energy density

def _m0(w, beta):
    # principal log is right for Re w >= 0; partners follow from m0(-conj w) = -conj m0(w)
    z = beta * w / (2 * np.pi)
    flip = z.real < 0
    z = np.where(flip, -np.conj(z), z)
    m = 1j / (2 * np.pi) * (np.log(z) - 0.5 * (digamma(1 + 1j * z) + digamma(1 - 1j * z)))
    m = np.where(flip, -np.conj(m), m)
    # on the imaginary axis take the midpoint of the two sides, as theta(0) = 1/2 does
    return np.where(z.real == 0, 1j * m.imag, m)


def weight_limits(w, thermal: ThermalState):
    """``C_j(0+)`` and ``C_j''(0+)`` in closed form (digamma representation)."""
    w = np.asarray(w, dtype=complex)
    beta = thermal.beta
    occ = thermal.occupation(w) + _theta(w.real)
    m0 = _m0(w, beta)
    c0 = 0.5 * occ + m0
    c2 = -0.5 * w ** 2 * occ - 1j * np.pi / (6 * beta ** 2) - w ** 2 * m0
    return c0, c2


@dataclass(frozen=True)
class EnergyDensity:
    value: float
    terms_used: int
    tail_estimate: float
    converged: bool = False  # no j -> infinity regularization is attempted


def energy_density_U(spectrum: Spectrum, x, thermal: ThermalState,
                     config: SeriesConfig = DEFAULT) -> EnergyDensity:
    """Thermal energy density at fixed truncation.

    ``U = 1/2 [-rho d_t^2 + d_x d_y] F_S`` at ``x = y``, ``t -> 0+``, from the
    termwise limits of ``C_j``.  The tail is reported, never removed.
    """
    if thermal.zero_temperature:
        return EnergyDensity(0.0, 0, 0.0)
    profile = spectrum.profile
    sp = _modes(spectrum, config)
    modes = sp.nonnegative
    w = np.array([m.omega for m in modes])
    f = np.array([m.evaluate(x) for m in modes])
    fd = np.array([m.derivative(x) for m in modes])
    rho = float(profile.densities[profile.segment_of(min(x, profile.a * (1 - 1e-15)))])
    c0, c2 = weight_limits(w, thermal)
    wt = np.where(w.real == 0.0, 0.5, 1.0)
    terms = wt * np.real((f ** 2 / w) * (-rho * c2) + (fd ** 2 / w) * c0)
    res = finish(np.cumsum(terms), config)
    return EnergyDensity(float(np.real(res.value)), res.terms_used, res.tail_estimate)


# ---------------------------------------------------------------------------
# tensor correlator and its projection

def tensor_correlator(spectrum: Spectrum, x, y, omega, thermal: ThermalState,
                      config: SeriesConfig = DEFAULT, source="nondiagonal"):
    """2x2 correlator of ``(phi, phi_hat)`` pairs."""
    profile = spectrum.profile
    if source == "nondiagonal":
        F = correlator_nondiagonal(spectrum, x, y, omega, thermal, config).value
    elif source == "exact":
        F = complex(correlator_exact(profile, x, y, omega, thermal))
    else:
        raise ValueError(f"unknown source {source!r}")
    rx = _rho_inside(profile, x)
    ry = _rho_inside(profile, y)
    m = np.array([[1.0, 1j * omega * ry], [-1j * omega * rx, omega ** 2 * rx * ry]])
    return m * F


def _rho_inside(profile, x):
    return float(profile.densities[profile.segment_of(min(x, profile.a * (1 - 1e-15)))])


def tensor_coefficient(mode_j: QnmMode, mode_k: QnmMode, omega, thermal: ThermalState):
    """Closed-form coefficient ``a_jk`` of the tensor expansion."""
    wj, wk = mode_j.omega, mode_k.omega
    n0 = mode_j.profile.n0
    return complex(n0 * omega * mode_j.surface_value * mode_k.surface_value * thermal.bose(omega)
                   / (2 * wj * wk * (wj - omega) * (wk + omega)))


def tensor_projection(profile: CavityProfile, mode_j: QnmMode, mode_k: QnmMode, omega,
                      thermal: ThermalState, kmax=None, order=24):
    """Project the exact tensor correlator onto ``f_j (x) f_k``.

    Uses the product-space bilinear form: a double integral, two boundary line
    integrals and a corner term, with ``F`` built from the exact Green's
    function on a segment-aware Gauss-Legendre grid.
    """
    kmax = kmax or max(abs(mode_j.omega), abs(mode_k.omega), abs(omega))
    grid = make_grid(profile, kmax, order=order)
    x, w, rho = grid.x, grid.w, grid.rho
    n0 = profile.n0
    bose = thermal.bose(omega)

    def green_matrix(om):
        # G(x, y) = f(min) g(max) / W is separable, so build it from two vectors
        from .spectrum import left_states, right_states
        from .greens import _at
        L = left_states(profile, complex(om))
        R = right_states(profile, complex(om))
        f = np.array([_at(profile, L, xi, complex(om))[0] for xi in x])
        g = np.array([_at(profile, R, xi, complex(om))[0] for xi in x])
        W = 1j * n0 * om * L[0][-1] - L[1][-1]
        lo = np.minimum.outer(np.arange(x.size), np.arange(x.size))
        hi = np.maximum.outer(np.arange(x.size), np.arange(x.size))
        return f[lo] * g[hi] / W

    F = 1j * bose * (green_matrix(omega) - green_matrix(-omega))
    fj = mode_j.evaluate(x)
    fk = mode_k.evaluate(x)
    wj, wk = mode_j.omega, mode_k.omega
    rf_j = w * rho * fj
    rf_k = w * rho * fk
    double = rf_j @ F @ rf_k
    line_x = rf_j @ F[:, -1]
    line_y = F[-1, :] @ rf_k
    corner = F[-1, -1]
    fa_j, fa_k = mode_j.surface_value, mode_k.surface_value
    total = ((wj + omega) * (wk - omega) * double
             + 1j * n0 * (wj + omega) * fa_k * line_x
             + 1j * n0 * (wk - omega) * fa_j * line_y
             - n0 ** 2 * fa_j * fa_k * corner)
    return complex(total / (4 * wj * wk))
