"""Local density of states, its resonance approximations and sum rules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .greens import retarded_green_exact
from .profiles import CavityProfile
from .series import DEFAULT, SeriesConfig, finish, pair_sums
from .spectrum import QnmMode, Spectrum, make_grid
from .thermal import chi

SOURCES = ("exact", "diagonal", "nondiagonal")


def local_dos(source, system, x, omega, config: SeriesConfig = DEFAULT):
    """Local density of states ``d(x, omega)`` for real ``omega > 0``.

    Parameters
    ----------
    source : {"exact", "diagonal", "nondiagonal"}
    system : CavityProfile or Spectrum
        A profile is enough for ``"exact"``; the QNM sums need a spectrum.
    """
    if source == "exact":
        profile = system.profile if isinstance(system, Spectrum) else system
        omega = np.asarray(omega, dtype=float)
        out = -(2 * omega / np.pi) * np.imag(retarded_green_exact(profile, x, x, omega + 0j))
        return out if np.ndim(out) else float(out)
    if not isinstance(system, Spectrum):
        raise TypeError("QNM sources need a Spectrum")
    sp = system if config.qnm_terms is None else system.truncated(config.qnm_terms)
    omega = float(omega)
    if source == "diagonal":
        w, fx, _ = sp.table([x])
        terms = (omega / np.pi) * np.imag(fx[:, 0] ** 2 / (w * (w - omega)))
        return float(np.real(finish(np.cumsum(pair_sums(sp, terms)), config).value))
    if source == "nondiagonal":
        n0 = sp.profile.n0
        cp = chi(sp, x, omega)
        cm = chi(sp, x, -omega)
        return float(np.real(finish(n0 * omega ** 2 / (2 * np.pi) * cp * cm, config).value))
    raise ValueError(f"unknown source {source!r}")


def dos_resonance_approx(kind, mode: QnmMode, x, omega):
    """Single-resonance approximations of ``d`` near ``Re omega_j``.

    ``"diagonal"`` keeps one term of the diagonal sum and can go negative;
    ``"lorentzian"`` keeps the ``(j, partner)`` term of the surface form and
    is a positive Lorentzian.
    """
    omega = np.asarray(omega, dtype=float)
    f = mode.evaluate(x)
    wj = mode.omega
    if kind == "diagonal":
        out = (omega / np.pi) * np.imag(f ** 2 / (wj * (wj - omega)))
    elif kind == "lorentzian":
        fa = mode.surface_value
        out = mode.n0 * abs(fa * f) ** 2 / (2 * np.pi * ((omega - wj.real) ** 2 + wj.imag ** 2))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return out if np.ndim(out) else float(out)


def surface_ratio(mode: QnmMode, profile: CavityProfile | None = None) -> float:
    """``R_j = n0 |f_j(a)|^2 / (2 |Im omega_j|)``; tends to 1 as leakage vanishes."""
    n0 = (profile or mode.profile).n0
    return float(n0 * abs(mode.surface_value) ** 2 / (2 * abs(mode.omega.imag)))


def weighted_norm(mode: QnmMode) -> float:
    """``int rho |f_j|^2 dx`` over the cavity."""
    grid = make_grid(mode.profile, abs(mode.omega))
    return float(np.sum(grid.w * grid.rho * np.abs(mode.evaluate(grid.x)) ** 2))


@dataclass(frozen=True)
class UnitWeight:
    j: int
    weight: float
    raw: float
    window: tuple
    error_budget: float

    def to_dict(self):
        return {"j": self.j, "weight": self.weight, "raw": self.raw,
                "window": list(self.window), "error_budget": self.error_budget}


def unit_weight_integral(spectrum: Spectrum, j: int, halfwidth=None, order=64, panels=40) -> UnitWeight:
    """Weight of resonance ``j``: ``int dw int dx rho d_lorentzian``.

    The double integral over a window of ``+-halfwidth`` (default ``10 gamma``)
    is done by quadrature; the Lorentzian mass outside the window is restored
    analytically and reported as the error budget.
    """
    mode = spectrum[j]
    gamma = abs(mode.omega.imag)
    center = mode.omega.real
    halfwidth = 10 * gamma if halfwidth is None else float(halfwidth)
    others = [m.omega.real for m in spectrum.nonnegative if m.index != j]
    if any(abs(r - center) <= halfwidth for r in others):
        raise ValueError("window overlaps a neighbouring resonance")
    grid = make_grid(spectrum.profile, abs(mode.omega))
    # separable in (x, omega): d_lor = n0 |f(a)|^2 |f(x)|^2 / (2 pi L(omega))
    xint = np.sum(grid.w * grid.rho * np.abs(mode.evaluate(grid.x)) ** 2)
    t, wt = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(center - halfwidth, center + halfwidth, panels + 1)
    h = 0.5 * np.diff(edges)
    om = (edges[:-1, None] + h[:, None] * (t + 1)).ravel()
    ww = (h[:, None] * wt).ravel()
    line = mode.n0 * abs(mode.surface_value) ** 2 / (2 * np.pi * ((om - center) ** 2 + gamma ** 2))
    raw = float(xint * np.sum(ww * line))
    captured = (2 / np.pi) * np.arctan(halfwidth / gamma)
    weight = raw / captured
    return UnitWeight(j, weight, raw, (center - halfwidth, center + halfwidth), weight - raw)


def second_sum_rule_check(profile: CavityProfile, x, omega_max, panels_per_unit=None, order=16) -> float:
    """Relative deviation of ``int_0^W d(x, w) dw`` from ``W / (pi sqrt(rho(x)))``."""
    rho = float(profile.densities[profile.segment_of(x)])
    spacing = np.pi / profile.optical_length
    per = panels_per_unit or max(8, int(np.ceil(8 / spacing)))
    n_panels = max(1, int(np.ceil(omega_max * per)))
    t, wt = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, omega_max, n_panels + 1)
    h = 0.5 * np.diff(edges)
    om = (edges[:-1, None] + h[:, None] * (t + 1)).ravel()
    ww = (h[:, None] * wt).ravel()
    d = local_dos("exact", profile, x, om)
    target = omega_max / (np.pi * np.sqrt(rho))
    return float(abs(np.sum(ww * d) - target) / target)
