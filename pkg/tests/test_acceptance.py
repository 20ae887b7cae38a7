"""Acceptance suite: one test per criterion, summarized by the conftest hook."""
import itertools
import json

import numpy as np
import pytest
from scipy.integrate import quad

from qnmfield.cli import figure_data, main
from qnmfield.dos import local_dos, surface_ratio, unit_weight_integral
from qnmfield.feynman import check_retarded_advanced, equal_space_propagator, feynman, resonance_approx_D
from qnmfield.greens import verify_dissipation_identity
from qnmfield.profiles import make_dielectric_rod
from qnmfield.quantization import (ForceSignal, commutator_from_correlator, commutator_integral,
                                   commutator_surface, driven_mode_response, energy_balance_check,
                                   steady_state_amplitude)
from qnmfield.spectrum import (SearchWindow, bilinear_product, build_spectrum, FieldPair,
                               find_qnm_frequencies, make_grid, rod_qnm_frequency)
from qnmfield.thermal import (ThermalState, correlator_closed_rod, correlator_diagonal,
                              correlator_nondiagonal, exp_integral_E1)
from qnmfield.universe import UniverseConfig, mu_correlator, mu_dos

INF = ThermalState(np.inf)
ROD = (5, 1, 1)


def _val(r):
    return complex(getattr(r, "value", r))


def test_ac01_spectrum_oracle():
    for n in (0.5, 5.0, 50.0):
        p = make_dielectric_rod(n, 1, 1)
        ref = np.array([rod_qnm_frequency(p, j) for j in range(-20, 21)])
        found = find_qnm_frequencies(p, SearchWindow(ref.real.max() + 0.5 * np.pi / n))
        both = np.concatenate([found, -np.conj(found)])
        for w in ref:
            assert np.min(np.abs(both - w)) < 1e-10 * abs(w), (n, w)


def test_ac02_orthonormality(rod5_spec):
    modes = [rod5_spec[j] for j in range(-5, 5)]
    grid = make_grid(rod5_spec.profile, max(abs(m.omega) for m in modes))
    pairs = [FieldPair.from_mode(m, grid) for m in modes]
    worst_norm, worst_off = 0.0, 0.0
    for (mj, A), (mk, B) in itertools.product(zip(modes, pairs), repeat=2):
        v = bilinear_product(A, B, rod5_spec.profile)
        if mj.index == mk.index:
            worst_norm = max(worst_norm, abs(v - 2 * mj.omega) / abs(2 * mj.omega))
        else:
            worst_off = max(worst_off, abs(v) / abs(2 * mj.omega))
    assert worst_norm < 1e-8 and worst_off < 1e-8


def test_ac03_dissipation_identity(rod5):
    xs = np.linspace(0.1, 0.9, 5)
    ws = np.linspace(0.3, 4.0, 5)
    worst = max(verify_dissipation_identity(rod5, x, y, w) for x in xs for y in xs for w in ws)
    assert worst < 1e-10


@pytest.mark.parametrize("beta", [1.0, np.inf], ids=["beta1", "betainf"])
def test_ac04_correlator_equivalence(rod5_spec, beta):
    th = ThermalState(beta)
    pts = (0.2, 0.5, 0.8)
    for x, y, w in itertools.product(pts, pts, (0.7, 1.0, 1.6)):
        ref = correlator_closed_rod(ROD, x, y, w, th)
        d = correlator_diagonal(rod5_spec, x, y, w, th).value
        nd = correlator_nondiagonal(rod5_spec, x, y, w, th).value
        # cross correlators change sign; measure against the equal-point scale
        scale = np.sqrt(correlator_closed_rod(ROD, x, x, w, th) * correlator_closed_rod(ROD, y, y, w, th))
        for a, b in ((d, ref), (nd, ref), (d, nd)):
            assert abs(a - b) <= 1e-3 * scale, (x, y, w)


def test_ac05_commutator_dual_forms(rod5_spec, two_seg_spec):
    for sp in (rod5_spec, two_seg_spec):
        idx = range(-8, 9)
        worst = max(abs(commutator_integral(sp[j], sp[k]) - commutator_surface(sp[j], sp[k]))
                    for j, k in itertools.product(idx, idx))
        assert worst < 1e-8


def test_ac06_unit_weight():
    errs = []
    for n in (5, 10, 20, 50):
        sp = build_spectrum(make_dielectric_rod(n, 1, 1), 3)
        errs.append(abs(unit_weight_integral(sp, 0).weight - 1))
    assert errs[-1] < 0.02 and errs[0] < 0.12
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_ac07_surface_ratio():
    r5 = surface_ratio(build_spectrum(make_dielectric_rod(5, 1, 1), 2)[0])
    r50 = surface_ratio(build_spectrum(make_dielectric_rod(50, 1, 1), 2)[0])
    # closed-form arithmetic: cosh^2(alpha) / (n alpha), alpha = atanh(n0 / n)
    for n, r in ((5, r5), (50, r50)):
        al = np.arctanh(1 / n)
        assert r == pytest.approx(np.cosh(al) ** 2 / (n * al), rel=1e-12)
    assert r5 == pytest.approx(1.0276, abs=1e-3)
    assert r50 == pytest.approx(1.0003, abs=1e-3)
    rs = [surface_ratio(build_spectrum(make_dielectric_rod(n, 1, 1), 2)[0]) for n in (5, 10, 20, 50)]
    assert all(abs(a - 1) > abs(b - 1) for a, b in zip(rs, rs[1:]))


def test_ac08_energy_balance(rod5_spec):
    for j in range(6):
        assert energy_balance_check(rod5_spec[j]).residual < 1e-8
    sp50 = build_spectrum(make_dielectric_rod(50, 1, 1), 2)
    assert energy_balance_check(sp50[0]).energy_ratio == pytest.approx(1.0, rel=0.005)


def test_ac09_feynman_propagator(rod5, rod5_spec):
    for x, y, w in itertools.product((0.2, 0.5, 0.8), (0.3, 0.7), (-1.3, 0.7, 2.0)):
        ref = feynman("closed_rod", rod5, x, y, w)
        for form in ("diagonal", "nondiagonal"):
            assert abs(_val(feynman(form, rod5_spec, x, y, w)) - ref) <= 1e-3 * abs(ref)
    ws = np.linspace(0.05, 20, 100)
    D = np.array([equal_space_propagator("closed_rod", rod5, 0.4, w) for w in ws])
    assert np.all(D.imag <= 0)
    m = rod5_spec[0]
    assert max(check_retarded_advanced("ra", None, 0.9, w, mode=m) for w in ws[:20]) < 1e-12
    assert max(check_retarded_advanced("ra_prime", None, 0.9, w, mode=m) for w in ws[:20]) > 1e-3
    assert resonance_approx_D("ra_prime", m, 0.9, np.linspace(0.01, 1.5, 2000)).imag.max() > 0


def test_ac10_dos_propagator_link(rod5):
    for x in (0.2, 0.5, 0.9):
        for w in np.linspace(0.1, 10, 25):
            D = equal_space_propagator("closed_rod", rod5, x, w)
            assert abs(local_dos("exact", rod5, x, w) + (2 * w / np.pi) * D.imag) < 1e-8


def test_ac11_mu_oracle():
    ref_c = correlator_closed_rod(ROD, 0.5, 0.5, 1.0, INF)
    ref_d = local_dos("exact", make_dielectric_rod(*ROD), 0.5, 0.3)
    errs_c, errs_d = [], []
    for L in (200, 400):
        cfg = UniverseConfig(float(L), int((L + 5) * 1.5 / np.pi) + 20)
        errs_c.append(abs(mu_correlator(ROD, cfg, 0.5, 0.5, 1.0, INF) / ref_c - 1))
        errs_d.append(abs(mu_dos(ROD, cfg, 0.5, 0.3) / ref_d - 1))
    assert errs_c[0] < 0.01 and errs_d[0] < 0.02
    assert errs_c[1] <= errs_c[0] / 2 and errs_d[1] <= errs_d[0] / 2


def test_ac12_e1_special_function():
    ref, _ = quad(lambda s: np.exp(-s) / s, 1, np.inf, epsabs=1e-14, epsrel=1e-14)
    assert abs(exp_integral_E1(1.0) - ref) < 1e-9
    assert abs(exp_integral_E1(1.0) - 0.219383934) < 1e-9
    rng = np.random.default_rng(12)
    z = rng.normal(size=100) * 5 + 1j * np.abs(rng.normal(size=100)) * 5 + 1e-3j
    lhs, rhs = exp_integral_E1(np.conj(z)), np.conj(exp_integral_E1(z))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


@pytest.fixture(scope="module")
def figures():
    return figure_data(make_dielectric_rod(*ROD), [1.0, np.inf], n_pairs=200)


def test_ac13_figure_reproduction(figures):
    fig1, fig2 = (np.array(f, dtype=float) for f in figures)
    assert 0.75 <= fig1[np.argmax(fig1[:, 1]), 0] <= 1.0
    assert np.all(fig1[:, 2] == 0) and np.all(fig2[:, 2] == 0)
    v = fig2[:, 1]
    extrema = np.sum((v[1:-1] - v[:-2]) * (v[2:] - v[1:-1]) < 0)
    assert extrema >= 3


def test_ac14_driven_mode_dynamics(rod5_spec):
    m = rod5_spec[1]
    r = driven_mode_response(m, ForceSignal.from_function(lambda t: 0 * t, 50, 0.01), a0=1.0)
    np.testing.assert_allclose(np.abs(r.a), np.exp(m.omega.imag * r.t), atol=1e-10)
    nu = 0.8
    r = driven_mode_response(m, ForceSignal.from_function(lambda t: np.exp(-1j * nu * t), 400, 0.002))
    assert abs(r.a[-1] * np.exp(1j * nu * r.t[-1]) / steady_state_amplitude(m, nu) - 1) < 1e-6
    for j, k in ((0, 1), (1, -3)):
        ref = commutator_surface(rod5_spec[j], rod5_spec[k])
        got = commutator_from_correlator(rod5_spec[j], rod5_spec[k], ThermalState(1.0))
        assert abs(got - ref) < 1e-4 * abs(ref)


def test_ac15_determinism(capsys):
    outs = []
    for threads in ("1", "4", "1"):
        assert main(["verify", "--all", "--threads", threads]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1] == outs[2]
    assert json.loads(outs[0])["pass"]
