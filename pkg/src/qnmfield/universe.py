"""Modes-of-the-universe oracle for the dielectric rod.

The rod sits at ``[0, a]`` inside a conservative box ``[0, Lambda]`` with a
node at both ends.  Outside the rod a box mode is
``B sin(n0 nu (x - a) + delta(nu))`` with the exact matching phase
``tan(delta) = (n0 / n) tan(n nu a)``, so the eigenfrequencies solve
``Phi(nu) = n0 nu (Lambda - a) + delta(nu) = l pi``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .profiles import make_dielectric_rod
from .spectrum import _rod_params
from .thermal import ThermalState


@dataclass(frozen=True)
class UniverseConfig:
    Lambda: float
    mode_count: int = 2000
    stencil: int = 8  # points in the local Lagrange interpolation in nu

    def check(self, a):
        if self.Lambda < 50 * a:
            raise ValueError("Lambda must be at least 50 a")
        if self.mode_count < self.stencil:
            raise ValueError("mode_count too small")


def matching_phase(n, n0, a, nu):
    """Continuous branch of ``delta`` with ``tan(delta) = (n0/n) tan(n nu a)``."""
    th = n * np.asarray(nu) * a
    s, c = np.sin(th), np.cos(th)
    return th + np.arctan((n0 - n) * s * c / (n * c * c + n0 * s * s))


def matching_phase_derivative(n, n0, a, nu):
    th = n * np.asarray(nu) * a
    s, c = np.sin(th), np.cos(th)
    return n * n * n0 * a / (n * n * c * c + n0 * n0 * s * s)


class UniverseModes:
    """Box eigenmodes of a rod embedded in ``[0, Lambda]``."""

    def __init__(self, rod, config: UniverseConfig):
        self.n, self.n0, self.a = _rod_params(rod)
        self.profile = make_dielectric_rod(self.n, self.n0, self.a) if self.n != self.n0 else None
        config.check(self.a)
        self.config = config
        self.nu = self._solve()
        if np.any(np.diff(self.nu) <= 0):
            raise ValueError("MU spectrum is degenerate")

    def phase(self, nu):
        return self.n0 * nu * (self.config.Lambda - self.a) + matching_phase(self.n, self.n0, self.a, nu)

    def phase_derivative(self, nu):
        return self.n0 * (self.config.Lambda - self.a) + matching_phase_derivative(self.n, self.n0, self.a, nu)

    def _solve(self):
        L, a = self.config.Lambda, self.a
        opt = self.n0 * (L - a) + self.n * a
        out = np.empty(self.config.mode_count)
        for i, l in enumerate(range(1, self.config.mode_count + 1)):
            lo = max((l - 0.5) * np.pi / opt, 1e-300)
            hi = (l + 0.5) * np.pi / opt
            out[i] = brentq(lambda v: self.phase(v) - l * np.pi, lo, hi, xtol=1e-15, rtol=1e-15)
        return out

    @cached_property
    def amplitudes(self):
        """Inside amplitude ``A_l`` and outside amplitude ``B_l`` (box normalized)."""
        n, n0, a, L = self.n, self.n0, self.a, self.config.Lambda
        nu = self.nu
        th = n * nu * a
        d = matching_phase(n, n0, a, nu)
        s, c = np.sin(th), np.cos(th)
        # A sin(th) = B sin(d), A n cos(th) = B n0 cos(d), with B = 1 first
        use_sin = np.abs(s) > np.abs(c)
        A = np.where(use_sin, np.sin(d) / np.where(use_sin, s, 1.0),
                     n0 * np.cos(d) / (n * np.where(use_sin, 1.0, c)))
        inside = n * n * A * A * (a / 2 - np.sin(2 * th) / (4 * n * nu))
        outside = n0 * n0 * ((L - a) / 2 + np.sin(2 * d) / (4 * n0 * nu))
        norm = np.sqrt(inside + outside)
        return A / norm, 1.0 / norm

    def psi(self, x):
        """``psi_l(x)`` for all modes, ``0 <= x <= a``."""
        A, _ = self.amplitudes
        return A * np.sin(self.n * self.nu * x)

    def density(self):
        """Exact local mode density ``dl/dnu = Phi'(nu_l) / pi``."""
        return self.phase_derivative(self.nu) / np.pi

    def interpolate(self, values, nu):
        """Local Lagrange interpolation of per-mode ``values`` at ``nu``."""
        k = self.config.stencil
        i = int(np.searchsorted(self.nu, nu))
        lo = min(max(i - k // 2, 0), self.nu.size - k)
        if i == 0 or i >= self.nu.size:
            raise ValueError("frequency outside the computed MU band")
        xs = self.nu[lo:lo + k]
        ys = values[lo:lo + k]
        out = 0.0
        for m in range(k):
            others = np.delete(xs, m)
            out += ys[m] * np.prod((nu - others) / (xs[m] - others))
        return float(out)


def universe_modes(rod, config: UniverseConfig):
    """List of ``(nu_l, psi_l)`` with ``psi_l`` a callable on ``[0, a]``."""
    um = UniverseModes(rod, config)
    A, _ = um.amplitudes
    return [(float(v), (lambda x, v=v, c=c: c * np.sin(um.n * v * np.asarray(x))))
            for v, c in zip(um.nu, A)]


def _local(um: UniverseModes, x, y, omega):
    # interpolate each factor separately so the result factorizes in (x, y)
    w = abs(float(omega))
    root = np.sqrt(np.pi * um.density())
    gx = um.interpolate(root * um.psi(x), w)
    gy = gx if y == x else um.interpolate(root * um.psi(y), w)
    return gx * gy


def mu_correlator(rod, config: UniverseConfig, x, y, omega, thermal: ThermalState, modes=None):
    """Broadened MU correlator ``pi (dl/dnu) psi(x) psi(y) / omega * bose(omega)`` at ``|omega|``."""
    um = modes or UniverseModes(rod, config)
    return _local(um, x, y, omega) * float(thermal.bose(omega)) / float(omega)


def mu_dos(rod, config: UniverseConfig, x, omega, modes=None):
    """MU local density of states ``(dl/dnu) psi(x, omega)^2``."""
    um = modes or UniverseModes(rod, config)
    return _local(um, x, x, omega) / np.pi


def mu_unit_weight(rod, config: UniverseConfig, j=0, halfwidths=10.0, points=801, modes=None):
    """Resonance weight ``int dw int dx rho d`` recomputed from the MU DOS.

    Integrates over ``Re omega_j +- halfwidths * gamma`` and divides by the
    Lorentzian fraction captured by the window.  The box must resolve the
    resonance: level spacing ``pi / (n0 Lambda)`` at most ``gamma / 2``.
    """
    from .spectrum import rod_qnm_frequency

    um = modes or UniverseModes(rod, config)
    wj = rod_qnm_frequency((um.n, um.n0, um.a), j)
    g = abs(wj.imag)
    if np.pi / (um.n0 * um.config.Lambda) > 0.5 * g:
        raise ValueError("Lambda too small to resolve the resonance")
    hw = halfwidths * g
    om = np.linspace(wj.real - hw, wj.real + hw, points)
    # int_0^a rho psi_l^2 dx per mode, then the density weight
    n, a = um.n, um.a
    A, _ = um.amplitudes
    inside = n * n * A * A * (a / 2 - np.sin(2 * n * um.nu * a) / (4 * n * um.nu))
    vals = um.density() * inside
    d = np.array([um.interpolate(vals, w) for w in om])
    integral = np.trapezoid(d, om) if hasattr(np, "trapezoid") else np.trapz(d, om)
    return float(integral / ((2 / np.pi) * np.arctan(halfwidths)))
