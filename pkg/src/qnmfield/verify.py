"""Invariant suites run by ``qnmfield verify``.

Each check is a pure function of the profile and ``jmax`` returning a
``Check``; suites are ordered lists of checks so reports are reproducible
regardless of how the checks are scheduled.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .greens import (retarded_green_exact, retarded_green_qnm, verify_dissipation_identity,
                     verify_qnm_sum_identity, wronskian_constancy)
from .quantization import (commutator_from_correlator, commutator_integral, commutator_surface,
                           energy_balance_check)
from .spectrum import (SearchWindow, build_spectrum, check_orthogonality, find_qnm_frequencies,
                       norm_residual, rod_qnm_frequency)
from .thermal import (ThermalState, correlator_diagonal, correlator_exact, correlator_nondiagonal,
                      exp_integral_E1, subtracted_correlator, subtracted_correlator_fourier)

SUITES = ("identities", "commutators", "oracle")


@dataclass(frozen=True)
class Check:
    check: str
    grid: str
    max_residual: float
    tolerance: float
    skipped: bool = False

    @property
    def passed(self) -> bool:
        return self.skipped or bool(self.max_residual <= self.tolerance)

    def to_dict(self):
        return {"check": self.check, "grid": self.grid, "max_residual": self.max_residual,
                "tolerance": self.tolerance, "pass": self.passed, "skipped": self.skipped}


def _is_rod(profile):
    return len(profile.edges) == 1


def _xs(profile, k=5):
    return np.linspace(0.1, 0.9, k) * profile.a


def _omegas(profile, k=5):
    spacing = np.pi / profile.optical_length
    return (np.arange(k) + 0.37) * spacing


def _relmax(vals, refs):
    vals, refs = np.asarray(vals), np.asarray(refs)
    return float(np.max(np.abs(vals - refs)) / np.max(np.abs(refs)))


# ---------------------------------------------------------------------------
# identities

def check_spectrum(profile, jmax):
    if not _is_rod(profile):
        return Check("spectrum_closed_form", "rod only", 0.0, 1e-10, skipped=True)
    n = int(jmax) + 1
    spacing = np.pi / profile.optical_length
    found = find_qnm_frequencies(profile, SearchWindow((n + 0.9) * spacing))[:n]
    ref = np.array([rod_qnm_frequency(profile, m) for m in range(-5, n + 5)])
    ref = ref[ref.real >= 0][:n]
    if len(found) < n:
        return Check("spectrum_closed_form", f"j=0..{n - 1}", float("inf"), 1e-10)
    return Check("spectrum_closed_form", f"j=0..{n - 1}",
                 float(np.max(np.abs(found - ref) / np.abs(ref))), 1e-10)


def check_orthonormality(profile, jmax):
    sp = build_spectrum(profile, int(jmax) + 1)
    modes = sp.ordered
    norm = max(norm_residual(m) for m in modes)
    grid = f"{len(modes)} modes"
    out = [Check("normalization", grid, float(norm), 1e-8)]
    if jmax < 2:
        out.append(Check("orthogonality", grid, 0.0, 1e-8, skipped=True))
    else:
        out.append(Check("orthogonality", grid, check_orthogonality(modes, profile), 1e-8))
    return out


def check_dissipation(profile, jmax):
    xs, om = _xs(profile), _omegas(profile)
    worst = max(verify_dissipation_identity(profile, x, y, w)
                for x in xs for y in xs for w in om)
    return Check("dissipation_identity", "5x5x5 (x,y,omega)", worst, 1e-10)


def check_wronskian(profile, jmax):
    worst = max(wronskian_constancy(profile, w + 0.1j) for w in _omegas(profile))
    return Check("wronskian_constancy", "5 omega", worst, 1e-10)


def check_qnm_green(profile, jmax):
    sp = build_spectrum(profile, 200)
    xs, om = _xs(profile, 3), _omegas(profile, 3)
    vals, refs = [], []
    for x, y, w in itertools.product(xs, xs, om):
        vals.append(retarded_green_qnm(sp, x, y, w).value)
        refs.append(retarded_green_exact(profile, x, y, w))
    return Check("green_qnm_vs_exact", "3x3x3, N=200", _relmax(vals, refs), 1e-3)


def check_qnm_sum(profile, jmax):
    sp = build_spectrum(profile, 200)
    xs = _xs(profile, 3)
    worst = max(abs(verify_qnm_sum_identity(sp, x, y).value) for x in xs for y in xs)
    # the sum converges like 1/N (slower with interior steps)
    return Check("qnm_sum_identity", "3x3, N=200, Cesaro", float(worst), 5e-3)


# ---------------------------------------------------------------------------
# commutators

def _pair_modes(profile, jmax):
    sp = build_spectrum(profile, int(jmax) + 1)
    return [m for m in sp.ordered if abs(m.index) <= jmax]


def check_commutator_forms(profile, jmax):
    if jmax < 2:
        return Check("commutator_dual_forms", "no pairs", 0.0, 1e-8, skipped=True)
    modes = _pair_modes(profile, jmax)
    worst = 0.0
    for mj, mk in itertools.combinations(modes, 2):
        if abs(mj.omega + mk.omega) < 1e-9 * abs(mj.omega):
            continue
        a = commutator_integral(mj, mk)
        b = commutator_surface(mj, mk)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300) if abs(b) > 1e-14 else abs(a - b))
    return Check("commutator_dual_forms", f"|j|,|k|<={jmax}", float(worst), 1e-8)


def check_energy_balance(profile, jmax):
    sp = build_spectrum(profile, int(jmax) + 1)
    worst = max(energy_balance_check(m).residual for m in sp.nonnegative)
    return Check("energy_balance", f"j=0..{jmax}", float(worst), 1e-8)


def check_commutator_correlator(profile, jmax):
    if jmax < 2:
        return Check("commutator_from_correlator", "no pairs", 0.0, 1e-4, skipped=True)
    sp = build_spectrum(profile, 2)
    m0, m1 = sp.nonnegative[:2]
    ref = commutator_surface(m0, m1)
    got = commutator_from_correlator(m0, m1, ThermalState(1.0))
    return Check("commutator_from_correlator", "(j,k)=(0,1), beta=1",
                 float(abs(got - ref) / abs(ref)), 1e-4)


# ---------------------------------------------------------------------------
# oracles

def check_correlator_forms(profile, jmax):
    sp = build_spectrum(profile, 200)
    xs, om = _xs(profile, 3), _omegas(profile, 3)
    th = ThermalState(1.0)
    d, nd, ex = [], [], []
    for x, y, w in itertools.product(xs, xs, om):
        d.append(correlator_diagonal(sp, x, y, w, th).value)
        nd.append(correlator_nondiagonal(sp, x, y, w, th).value)
        ex.append(correlator_exact(profile, x, y, w, th))
    return Check("correlator_forms_vs_exact", "3x3x3, N=200, beta=1",
                 max(_relmax(d, ex), _relmax(nd, ex)), 1e-3)


def check_subtracted(profile, jmax):
    sp = build_spectrum(profile, 200)
    th = ThermalState(1.0)
    x = 0.3 * profile.a
    got = subtracted_correlator(sp, x, x, 0.5, th).value
    ref = subtracted_correlator_fourier(profile, x, x, 0.5, th)
    return Check("subtracted_vs_fourier", "x=y=0.3a, t=0.5, beta=1",
                 float(abs(got - ref) / abs(ref)), 1e-5)


def check_e1(profile, jmax):
    from scipy.integrate import quad
    ref = quad(lambda s: np.exp(-s) / s, 1.0, np.inf, epsabs=1e-15)[0]
    return Check("e1_special_function", "z=1", float(abs(exp_integral_E1(1.0) - ref)), 1e-9)


def check_mu(profile, jmax):
    from .universe import UniverseConfig, UniverseModes, mu_correlator
    if not _is_rod(profile) or profile.indices[0] == profile.n0:
        return Check("mu_correlator", "rod only", 0.0, 1e-2, skipped=True)
    cfg = UniverseConfig(200 * profile.a, mode_count=600)
    um = UniverseModes(profile, cfg)
    th = ThermalState(1.0)
    vals, refs = [], []
    for x, w in itertools.product(_xs(profile, 3), _omegas(profile, 3)):
        vals.append(mu_correlator(profile, cfg, x, x, w, th, modes=um))
        refs.append(np.real(correlator_exact(profile, x, x, w, th)))
    return Check("mu_correlator", "3 x, 3 omega, Lambda=200a", _relmax(vals, refs), 1e-2)


REGISTRY = {
    "identities": (check_spectrum, check_orthonormality, check_dissipation, check_wronskian,
                   check_qnm_green, check_qnm_sum),
    "commutators": (check_commutator_forms, check_energy_balance, check_commutator_correlator),
    "oracle": (check_correlator_forms, check_subtracted, check_e1, check_mu),
}


def suite_tasks(suite: str):
    """Ordered check functions for ``suite`` (``"all"`` concatenates every suite)."""
    names = SUITES if suite == "all" else (suite,)
    for name in names:
        if name not in REGISTRY:
            raise ValueError(f"unknown suite {name!r}")
    return [(name, fn) for name in names for fn in REGISTRY[name]]


def run_task(task, profile, jmax):
    name, fn = task
    out = fn(profile, jmax)
    return [(name, c) for c in (out if isinstance(out, list) else [out])]
