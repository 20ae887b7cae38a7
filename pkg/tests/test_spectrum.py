import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnmfield.errors import GridMismatch
from qnmfield.profiles import layered, make_dielectric_rod
from qnmfield.spectrum import (FieldPair, SearchWindow, bilinear_product, build_spectrum,
                               check_orthogonality, find_qnm_frequencies, find_qnms, make_grid,
                               make_mode, norm_residual, project_coefficient, rod_qnm_frequency,
                               rod_spectrum, wronskian)


def test_rod_frequency_examples():
    # pi/10 and atanh(1/5)/5 evaluated by hand
    assert rod_qnm_frequency((5, 1, 1), 0) == pytest.approx(0.31415927 - 0.04054651j, abs=1e-8)
    # pi and atanh(1/2)
    assert rod_qnm_frequency((1, 2, 1), 1) == pytest.approx(3.1415927 - 0.54930614j, abs=1e-7)


@pytest.mark.parametrize("j", range(-6, 6))
def test_rod_partner_symmetry(j):
    w = rod_qnm_frequency((5, 1, 1), j)
    assert rod_qnm_frequency((5, 1, 1), -1 - j) == pytest.approx(-np.conj(w), abs=1e-15)
    u = rod_qnm_frequency((1, 2, 1), j)
    assert rod_qnm_frequency((1, 2, 1), -j) == pytest.approx(-np.conj(u), abs=1e-15)


def test_finder_window_matches_closed_form(rod5):
    found = find_qnm_frequencies(rod5, SearchWindow(4.0))
    ref = [rod_qnm_frequency(rod5, j) for j in range(6)]
    assert len(found) == 6
    np.testing.assert_allclose(found, ref, rtol=1e-10)


def test_finder_imaginary_mode():
    # n < n0 has a purely imaginary mode at -i atanh(n/n0)/(n a)
    p = make_dielectric_rod(1, 2, 1)
    found = find_qnm_frequencies(p, SearchWindow(7.0))
    assert found[0].real == 0.0
    assert found[0] == pytest.approx(-1j * np.arctanh(0.5), rel=1e-10)
    np.testing.assert_allclose(found[1:3], [rod_qnm_frequency(p, 1), rod_qnm_frequency(p, 2)],
                               rtol=1e-10)


def test_rod50_width(rod50):
    sp = find_qnms(rod50, 0.1)
    assert sp[0].gamma == pytest.approx(np.arctanh(0.02) / 50, rel=1e-10)
    assert sp[0].gamma == pytest.approx(4.0005e-4, rel=1e-4)


def test_two_segment_modes_decay(two_seg):
    sp = find_qnms(two_seg, 30.0)
    assert len(sp.nonnegative) > 10
    assert all(m.omega.imag < 0 for m in sp)
    W = wronskian(two_seg, sp.omegas)
    assert np.max(np.abs(W)) < 1e-9


def test_mode_values(rod5_spec):
    m = rod5_spec[0]
    assert m(0.0) == 0
    # sqrt(2/25) sin(5 w0) with 5 w0 = pi/2 - i atanh(0.2): real, cosh(atanh 0.2)
    assert m.surface_value == pytest.approx(np.sqrt(0.08) * np.cosh(np.arctanh(0.2)), abs=1e-12)
    assert abs(m.surface_value) == pytest.approx(0.28866, abs=5e-5)


@pytest.mark.parametrize("j", [0, 1, 4, 9])
def test_mode_closed_form(rod5_spec, j):
    m = rod5_spec[j]
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(m.evaluate(x), np.sqrt(2 / 25) * np.sin(5 * m.omega * x), atol=1e-13)


@pytest.mark.parametrize("j", [0, 3, 7])
def test_partner_is_conjugate(rod5_spec, j):
    m, p = rod5_spec[j], rod5_spec.partner(rod5_spec[j])
    assert p.index == -1 - j
    x = np.linspace(0, 1, 9)
    np.testing.assert_allclose(p.evaluate(x), np.conj(m.evaluate(x)), atol=1e-15)
    assert p.omega == -np.conj(m.omega)


def test_evaluate_outside_raises(rod5_spec):
    with pytest.raises(ValueError):
        rod5_spec[0].evaluate(1.5)


def test_normalization_and_orthogonality(rod5_spec):
    modes = rod5_spec.truncated(5).ordered
    assert len(modes) == 10
    assert max(norm_residual(m) for m in modes) < 1e-10
    assert check_orthogonality(modes, rod5_spec.profile) < 1e-10


def test_orthogonality_edge_cases(rod5_spec):
    assert check_orthogonality([rod5_spec[0]], rod5_spec.profile) == 0.0
    scaled = [m.scaled(3.7 - 1.1j) for m in rod5_spec.truncated(4).ordered]
    assert check_orthogonality(scaled, rod5_spec.profile) < 1e-9


def test_two_segment_orthonormal(two_seg_spec):
    modes = two_seg_spec.truncated(6).ordered
    assert max(norm_residual(m) for m in modes) < 1e-10
    assert check_orthogonality(modes, two_seg_spec.profile) < 1e-10


def test_bilinear_symmetric(rod5_spec):
    g = make_grid(rod5_spec.profile, 5.0)
    A = FieldPair.from_mode(rod5_spec[1], g)
    B = FieldPair.from_functions(g, lambda x: x ** 2, lambda x: np.cos(x))
    assert bilinear_product(A, B, rod5_spec.profile) == pytest.approx(
        bilinear_product(B, A, rod5_spec.profile), rel=1e-14)


def test_grid_mismatch(rod5_spec):
    A = FieldPair.from_mode(rod5_spec[0], make_grid(rod5_spec.profile, 2.0))
    B = FieldPair.from_mode(rod5_spec[0], make_grid(rod5_spec.profile, 9.0))
    with pytest.raises(GridMismatch):
        bilinear_product(A, B, rod5_spec.profile)


def test_projection_basis_and_linearity(rod5_spec):
    g = make_grid(rod5_spec.profile, 5.0)
    mj, mk = rod5_spec[1], rod5_spec[-3]
    Pj, Pk = FieldPair.from_mode(mj, g), FieldPair.from_mode(mk, g)
    assert project_coefficient(mj, Pj) == pytest.approx(1.0, abs=1e-10)
    assert abs(project_coefficient(mj, Pk)) < 1e-10
    state = (0.4 - 2j) * Pj + 1.5 * Pk
    assert project_coefficient(mj, state) == pytest.approx(0.4 - 2j, abs=1e-10)


def test_completeness_reconstruction(rod5_spec):
    g = make_grid(rod5_spec.profile, abs(rod5_spec.nonnegative[-1].omega))
    state = FieldPair.from_functions(g, lambda x: x * np.sin(2 * x), lambda x: 0 * x)
    xs = np.array([0.3, 0.5, 0.8])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rec = sum(project_coefficient(m, state) * m.evaluate(xs) for m in rod5_spec.ordered)
    np.testing.assert_allclose(rec, xs * np.sin(2 * xs), atol=1e-7)


def test_projection_warns_when_underresolved(rod5_spec):
    g = make_grid(rod5_spec.profile, 0.5, order=4)
    state = FieldPair.from_mode(rod5_spec[150], g)
    with pytest.warns(RuntimeWarning):
        project_coefficient(rod5_spec[150], state)


def test_spectrum_labels(rod5_spec):
    sp = rod5_spec.truncated(3)
    assert sorted(m.index for m in sp) == [-3, -2, -1, 0, 1, 2]
    assert [m.index for m in sp.ordered] == [0, -1, 1, -2, 2, -3]


def test_rod_spectrum_equals_finder(two_seg):
    p = make_dielectric_rod(3, 1.5, 0.7)
    a = rod_spectrum(p, 8)
    b = find_qnms(p, SearchWindow(a.nonnegative[-1].omega.real + 0.3 * np.pi / p.optical_length))
    np.testing.assert_allclose(np.sort_complex(a.omegas), np.sort_complex(b.omegas), rtol=1e-10)


def test_build_spectrum_generic(two_seg):
    sp = build_spectrum(two_seg, 12)
    assert len(sp.nonnegative) == 12
    assert len(sp) == 24


def test_make_mode_sign_rule(rod5):
    m = make_mode(rod5, rod_qnm_frequency(rod5, 2), 2)
    assert (m.derivative(0.0) / m.omega).real > 0


@given(st.floats(0.3, 40.0).filter(lambda n: abs(n - 1) > 0.05), st.floats(0.3, 3.0),
       st.integers(0, 6))
def test_closed_form_is_root(n, a, j):
    p = make_dielectric_rod(n, 1.0, a)
    w = rod_qnm_frequency(p, j)
    assert w.imag < 0
    vals = wronskian(p, np.array([w]))
    scale = np.cosh(abs(w.imag) * n * a) * (1 + abs(w))
    assert abs(vals[0]) < 1e-9 * scale


@given(st.floats(1.5, 20.0), st.floats(1.5, 20.0), st.floats(0.2, 0.8))
def test_two_segment_normalization_property(r1, r2, cut):
    if abs(r2 - 1.0) < 0.1:
        return
    p = layered([0.0, cut], [r1, r2], 1.0)
    sp = find_qnms(p, 3 * np.pi / p.optical_length)
    for m in sp.nonnegative[:3]:
        assert m.omega.imag < 0
        assert norm_residual(m) < 1e-9
