"""Zero-temperature Feynman propagator and its resonance approximations.

Every form is written as a function of ``omega`` and of ``s`` standing in for
``|omega|``.  Setting ``s = omega`` or ``s = -omega`` gives the retarded and
advanced continuations used by ``check_retarded_advanced``.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import PoleAt
from .greens import retarded_green_exact
from .series import DEFAULT, SeriesConfig, finish, pair_sums
from .spectrum import QnmMode, Spectrum, _rod_params

FORMS = ("nondiagonal", "diagonal", "diagonal_alt", "closed_rod", "exact")
POLE_GUARD = 1e-6


def _spectrum(system, config):
    if not isinstance(system, Spectrum):
        raise TypeError("QNM forms need a Spectrum")
    return system if config.qnm_terms is None else system.truncated(config.qnm_terms)


def _closed(rod, x, y, omega, s):
    n, n0, a = _rod_params(rod)
    x, y = min(x, y), max(x, y)
    num = n * np.cos(n * omega * (a - y)) - 1j * n0 * np.sin(n * s * (a - y))
    den = n * np.cos(n * omega * a) - 1j * n0 * np.sin(n * s * a)
    return -np.sin(n * omega * x) / (n * omega) * num / den


def _guard(spectrum_or_none, omega):
    if spectrum_or_none is None:
        return
    for m in spectrum_or_none.nonnegative:
        if abs(abs(omega) - m.omega.real) < POLE_GUARD and abs(m.omega.imag) < POLE_GUARD:
            raise PoleAt(omega, "resonance")


def feynman(form, system, x, y, omega, config: SeriesConfig = DEFAULT):
    """Feynman propagator ``G^F(x, y, omega)`` at ``T = 0``.

    ``system`` is a ``Spectrum`` for the QNM forms, a rod (``DielectricRod``,
    single-segment profile or ``(n, n0, a)``) for ``"closed_rod"`` and a
    profile for ``"exact"`` (which is ``G^R`` at ``|omega|``).  QNM forms
    return ``GreensSeriesResult``; the others return a complex number.
    """
    omega = float(omega)
    if form == "closed_rod":
        if omega == 0:
            raise PoleAt(0.0, "omega = 0")
        return complex(_closed(system, x, y, omega, abs(omega)))
    if form == "exact":
        profile = system.profile if isinstance(system, Spectrum) else system
        return retarded_green_exact(profile, x, y, complex(abs(omega)))
    sp = _spectrum(system, config)
    s = abs(omega)
    if form == "nondiagonal":
        w, fx, fa = sp.table([x, y])
        val = -1j * sp.profile.n0 * _kernels.feynman_double_sum(w, fa, fx[:, 0], fx[:, 1], omega)
        return finish(np.array([val]), SeriesConfig(tail_policy="none"))
    w, fx, _ = sp.table([x, y])
    ff = fx[:, 0] * fx[:, 1]
    if form == "diagonal":
        terms = 0.5 * ff / (w * (s - w))
    elif form == "diagonal_alt":
        if omega == 0:
            raise PoleAt(0.0, "omega = 0")
        terms = 0.5 * ff / (s * (s - w))
    else:
        raise ValueError(f"unknown form {form!r}")
    return finish(np.cumsum(pair_sums(sp, terms)), config)


def nondiagonal_partial(system, x, y, omega, sizes):
    """Non-diagonal form truncated at each of ``sizes`` pairs (convergence studies)."""
    return [feynman("nondiagonal", system, x, y, omega, SeriesConfig(qnm_terms=int(n))).value
            for n in sizes]


def equal_space_propagator(form, system, x, omega, config: SeriesConfig = DEFAULT):
    """``D(omega) = G^F(x, x, omega)``."""
    val = feynman(form, system, x, x, omega, config)
    return complex(getattr(val, "value", val))


def resonance_approx_D(kind, mode: QnmMode, x, omega, s=None):
    """Single-resonance approximations of ``D`` near ``|omega| = Re omega_j``.

    ``"ra"`` keeps the resonance and its partner and satisfies
    ``D^R = conj(D^A)`` and ``Im D <= 0``; ``"ra_prime"`` keeps one term.
    """
    wj = mode.omega
    if wj.real <= 0:
        raise ValueError("needs a mode with Re omega > 0")
    s = np.abs(omega) if s is None else s
    f = mode.evaluate(x)
    if kind == "ra":
        c = mode.n0 * abs(f * mode.surface_value) ** 2 / (4 * abs(wj) ** 2 * abs(wj.imag))
        return c * (wj / (s - wj) - np.conj(wj) / (s + np.conj(wj)))
    if kind == "ra_prime":
        return f ** 2 / (2 * wj * (s - wj))
    raise ValueError(f"unknown kind {kind!r}")


def _continuations(form, system, x, omega, config, mode=None):
    """``(D^R(omega), D^A(omega))`` for real ``omega``."""
    if form in ("ra", "ra_prime"):
        return (resonance_approx_D(form, mode, x, omega, s=omega),
                resonance_approx_D(form, mode, x, omega, s=-omega))
    if form == "closed_rod":
        return _closed(system, x, x, omega, omega), _closed(system, x, x, omega, -omega)
    if form == "exact":
        profile = system.profile if isinstance(system, Spectrum) else system
        return (retarded_green_exact(profile, x, x, complex(omega)),
                retarded_green_exact(profile, x, x, complex(-omega)))
    if form in ("diagonal",):
        sp = _spectrum(system, config)
        w, fx, _ = sp.table([x])
        ff = fx[:, 0] ** 2
        return (np.sum(0.5 * ff / (w * (omega - w))), np.sum(0.5 * ff / (w * (-omega - w))))
    raise ValueError(f"no continuation for form {form!r}")


def check_retarded_advanced(form, system, x, omega, config: SeriesConfig = DEFAULT, mode=None) -> float:
    """``|D^R(omega) - conj(D^A(omega))|`` for real ``omega > 0``.

    ``D^R`` continues ``|omega| -> omega`` and ``D^A`` continues
    ``|omega| -> -omega``.  Zero for the full propagator and for ``"ra"``.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    dr, da = _continuations(form, system, x, omega, config, mode)
    return float(abs(dr - np.conj(da)))


def residue(func, center, radius=1e-3, points=64):
    """``(1 / 2 pi i) \\oint func`` on a circle, trapezoid rule."""
    theta = 2 * np.pi * np.arange(points) / points
    z = center + radius * np.exp(1j * theta)
    vals = np.array([func(zz) for zz in z])
    return complex(np.mean(vals * radius * np.exp(1j * theta)))


def resonance_residues(mode: QnmMode, x):
    """Residues of ``D_ra`` and ``D_ra'`` at ``|omega| = omega_j``."""
    ra = residue(lambda s: resonance_approx_D("ra", mode, x, s, s=s), mode.omega)
    rp = residue(lambda s: resonance_approx_D("ra_prime", mode, x, s, s=s), mode.omega)
    return ra, rp


def offdiagonal_mass(spectrum: Spectrum, n_pairs=None) -> float:
    """Share of the non-diagonal kernel weight off the ``(j, partner j)`` pairs.

    Weights are ``|n0 f_j(a) f_k(a) / (2 w_j w_k (w_j + w_k))|``.
    """
    sp = spectrum if n_pairs is None else spectrum.truncated(n_pairs)
    modes = sp.ordered
    w = np.array([m.omega for m in modes])
    fa = np.array([m.surface_value for m in modes])
    idx = np.array([m.index for m in modes])
    partner = np.array([sp.partner_index(i) for i in idx])
    weight = np.abs(sp.profile.n0 * np.outer(fa, fa) / (2 * np.outer(w, w) * (w[:, None] + w[None, :])))
    diag = idx[None, :] == partner[:, None]
    return float(weight[~diag].sum() / weight.sum())
