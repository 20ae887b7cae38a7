"""Commutators of the QNM expansion coefficients, energy balance and driven modes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import _kernels
from .errors import DegeneratePair
from .profiles import CavityProfile
from .spectrum import QnmMode, make_grid
from .thermal import ThermalState

DEGENERACY_GUARD = 1e-9


def commutator_integral(mode_j: QnmMode, mode_k: QnmMode, profile: CavityProfile | None = None,
                        order=24) -> complex:
    """``[a_j, a_k] = (w_k - w_j) / (4 w_j w_k) int rho f_j f_k dx``."""
    profile = profile or mode_j.profile
    wj, wk = mode_j.omega, mode_k.omega
    if wj == wk:
        return 0j
    grid = make_grid(profile, max(abs(wj), abs(wk)), order=order)
    integral = np.sum(grid.w * grid.rho * mode_j.evaluate(grid.x) * mode_k.evaluate(grid.x))
    return complex((wk - wj) / (4 * wj * wk) * integral)


def commutator_surface(mode_j: QnmMode, mode_k: QnmMode, creation=False) -> complex:
    """Surface form of the commutator.

    ``[a_j, a_k] = i n0 (w_j - w_k) f_j(a) f_k(a) / (4 w_j w_k (w_j + w_k))``.
    With ``creation=True`` returns ``[a_j^dagger, a_k]``, i.e. mode ``j`` is
    replaced by its conjugate partner.
    """
    if creation:
        mode_j = mode_j.conjugate_partner(-mode_j.index)
    wj, wk = mode_j.omega, mode_k.omega
    if wj == wk:
        return 0j
    s = wj + wk
    if abs(s) < DEGENERACY_GUARD * max(abs(wj), 1.0):
        raise DegeneratePair("w_j + w_k vanishes")
    n0 = mode_j.profile.n0
    return complex(1j * n0 * (wj - wk) * mode_j.surface_value * mode_k.surface_value
                   / (4 * wj * wk * s))


def alpha_map(mode: QnmMode, a_j, a_minus_j):
    """``(alpha_j, alpha_j^dagger) = (sqrt(2 w_j) a_j, sqrt(2 conj w_j) a_{-j})``."""
    if mode.omega.real <= 0:
        raise ValueError("alpha map needs Re omega_j > 0")
    return (np.sqrt(2 * mode.omega) * a_j,
            np.sqrt(2 * np.conj(mode.omega)) * a_minus_j)


def alpha_commutator(mode: QnmMode) -> complex:
    """``[alpha_j^dagger, alpha_j]`` from the surface form; ``-> -1`` when conservative."""
    c = commutator_surface(mode, mode, creation=True)
    return complex(np.sqrt(2 * np.conj(mode.omega)) * np.sqrt(2 * mode.omega) * c)


@dataclass(frozen=True)
class EnergyBalance:
    energy: float
    flux: float
    residual: float
    energy_ratio: float  # E / |omega|^2


def energy_balance_check(mode: QnmMode, profile: CavityProfile | None = None, order=24) -> EnergyBalance:
    """Compare ``2 gamma E`` with the outgoing flux ``n0 |w|^2 |f(a)|^2``.

    ``E = 1/2 int (|f'|^2 + rho |w f|^2) dx``.  The flux carries the outside
    impedance ``n0``.
    """
    profile = profile or mode.profile
    grid = make_grid(profile, abs(mode.omega), order=order)
    f = mode.evaluate(grid.x)
    fd = mode.derivative(grid.x)
    w = mode.omega
    E = 0.5 * np.sum(grid.w * (np.abs(fd) ** 2 + grid.rho * abs(w) ** 2 * np.abs(f) ** 2))
    flux = profile.n0 * abs(w) ** 2 * abs(mode.surface_value) ** 2
    res = abs(2 * abs(w.imag) * E - flux) / flux
    return EnergyBalance(float(E), float(flux), float(res), float(E / abs(w) ** 2))


# ---------------------------------------------------------------------------
# driven modes

@dataclass(frozen=True)
class ForceSignal:
    """Samples of the driving force ``b(t)`` on a uniform grid starting at ``t0``."""

    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.samples.size)

    @classmethod
    def from_function(cls, func, t_end, dt, t0=0.0):
        n = int(round((t_end - t0) / dt)) + 1
        t = t0 + dt * np.arange(n)
        return cls(dt, func(t), t0)


@dataclass(frozen=True)
class DrivenResponse:
    t: np.ndarray
    a: np.ndarray
    residual: float


def _fd_derivative(a, h):
    d = np.empty_like(a)
    d[2:-2] = (-a[4:] + 8 * a[3:-1] - 8 * a[1:-3] + a[:-4]) / (12 * h)
    d[:2] = d[-2:] = np.nan
    return d


def driven_mode_response(mode: QnmMode, force: ForceSignal, a0=0j) -> DrivenResponse:
    """Integrate ``a' + i w_j a = (i f_j(a) / 2 w_j) b`` exactly for piecewise-linear ``b``.

    The reported residual is the ODE residual with a fourth-order
    finite-difference derivative, scaled by ``max(|w a| + |kappa b|)``.
    """
    w = mode.omega
    period = 2 * np.pi / max(abs(w.real), abs(w.imag), 1e-300)
    if force.dt > period / 10:
        raise ValueError("time grid does not resolve the mode")
    kappa = 1j * mode.surface_value / (2 * w)
    a = _kernels.exp_integrator(w, kappa, complex(a0), force.samples, force.dt)
    if a.size >= 5:
        r = _fd_derivative(a, force.dt) + 1j * w * a - kappa * force.samples
        scale = np.max(np.abs(w * a) + np.abs(kappa * force.samples))
        residual = float(np.nanmax(np.abs(r)) / scale) if scale > 0 else 0.0
    else:
        residual = 0.0
    return DrivenResponse(force.times, a, residual)


def steady_state_amplitude(mode: QnmMode, nu) -> complex:
    """Amplitude of ``a_j`` driven by ``b = exp(-i nu t)`` after transients."""
    return complex(mode.surface_value / (2 * mode.omega * (mode.omega - nu)))


def coefficient_correlator(mode_j: QnmMode, mode_k: QnmMode, omega, thermal: ThermalState):
    """``<a_j(omega) a_k>`` for thermal driving (pole structure ``w_j``, ``-w_k``)."""
    wj, wk = mode_j.omega, mode_k.omega
    n0 = mode_j.profile.n0
    omega = np.asarray(omega, dtype=float)
    return (n0 * omega * thermal.bose(omega) * mode_j.surface_value * mode_k.surface_value
            / (2 * wj * wk * (wj - omega) * (wk + omega)))


def commutator_from_correlator(mode_j: QnmMode, mode_k: QnmMode, thermal: ThermalState) -> complex:
    """``int dw / 2 pi [<a_j a_k>(w) - <a_k a_j>(w)]`` by quadrature.

    Independent of temperature; should reproduce ``[a_j, a_k]``.
    """
    wj, wk = mode_j.omega, mode_k.omega

    def integrand(om, part):
        om = om if om != 0.0 else 1e-14
        v = (coefficient_correlator(mode_j, mode_k, om, thermal)
             - coefficient_correlator(mode_k, mode_j, om, thermal))
        return float(getattr(v, part)) / (2 * np.pi)

    peaks = sorted({wj.real, -wj.real, wk.real, -wk.real, 0.0})
    span = 4 * max(abs(p) for p in peaks) + 10.0
    pts = [p for p in peaks if -span < p < span]
    total = 0j
    for part, unit in (("real", 1.0), ("imag", 1j)):
        mid, _ = quad(integrand, -span, span, args=(part,), points=pts, limit=800,
                      epsabs=1e-13, epsrel=1e-12)
        lo, _ = quad(integrand, -np.inf, -span, args=(part,), limit=400, epsabs=1e-14)
        hi, _ = quad(integrand, span, np.inf, args=(part,), limit=400, epsabs=1e-14)
        total += unit * (lo + mid + hi)
    return complex(total)
