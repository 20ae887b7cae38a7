import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnmfield.errors import NearPole
from qnmfield.greens import (dissipation_magnitude, kramers_kronig_residual,
                             retarded_green_exact, retarded_green_qnm, retarded_green_qnm_time,
                             retarded_green_time_fourier, verify_dissipation_identity,
                             verify_qnm_sum_identity, wronskian_at, wronskian_constancy)
from qnmfield.profiles import free_string, make_dielectric_rod
from qnmfield.series import SeriesConfig
from qnmfield.spectrum import build_spectrum, rod_qnm_frequency


@pytest.fixture(scope="module")
def rod5_big(rod5):
    return build_spectrum(rod5, 2000)


def test_free_half_line_value():
    # (d^2 + w^2) G = delta, G(0) = 0, outgoing: -sin(w x<) e^{i w x>} / w
    g = retarded_green_exact(free_string(), 0.25, 0.5, 1.0)
    assert g == pytest.approx(-np.sin(0.25) * np.exp(0.5j), abs=1e-14)
    assert g == pytest.approx(-0.21712 - 0.11863j, abs=5e-5)


def test_rod_green_matches_closed_form(rod5):
    # closed form for the rod: -sin(n w x) [n cos(n w (a-y)) - i n0 sin(n w (a-y))] / (n w [...])
    x, y, w = 0.3, 0.7, 2.0
    num = 5 * np.cos(5 * w * 0.3) - 1j * np.sin(5 * w * 0.3)
    den = 5 * np.cos(5 * w) - 1j * np.sin(5 * w)
    ref = -np.sin(5 * w * x) / (5 * w) * num / den
    assert retarded_green_exact(rod5, x, y, w) == pytest.approx(ref, rel=1e-13)


def test_near_pole_raises(rod5):
    with pytest.raises(NearPole):
        retarded_green_exact(rod5, 0.3, 0.6, rod_qnm_frequency(rod5, 2))


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.05, 20.0))
def test_reciprocity(x, y, w):
    p = make_dielectric_rod(5, 1, 1)
    assert retarded_green_exact(p, x, y, w) == pytest.approx(retarded_green_exact(p, y, x, w),
                                                             rel=1e-12, abs=1e-15)


@given(st.floats(0.01, 0.99), st.floats(0.05, 15.0))
def test_dos_positive(x, w):
    p = make_dielectric_rod(5, 1, 1)
    assert -(2 * w / np.pi) * retarded_green_exact(p, x, x, w).imag >= -1e-15


def test_wronskian_constant(rod5, two_seg):
    assert wronskian_constancy(rod5, 1.3 + 0.2j) < 1e-10
    assert wronskian_constancy(two_seg, 2.1 - 0.05j) < 1e-10
    assert abs(wronskian_at(two_seg, 0.2, 3.0)) > 0


def test_dissipation_identity_examples(rod5, two_seg):
    assert verify_dissipation_identity(rod5, 0.3, 0.7, 2.0) < 1e-10
    assert verify_dissipation_identity(two_seg, 0.1, 0.9, 4.4) < 1e-10
    assert verify_dissipation_identity(rod5, 0.3, 0.7, 1e-6) < 1e-10
    assert dissipation_magnitude(rod5, 0.3, 0.7, 1e-6) < 1e-5


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.01, 30.0))
def test_dissipation_identity_property(x, y, w):
    p = make_dielectric_rod(5, 1, 1)
    assert verify_dissipation_identity(p, x, y, w) < 1e-10


def test_dissipation_shrinks_with_impedance_mismatch():
    vals = [dissipation_magnitude(make_dielectric_rod(5, n0, 1), 0.3, 0.7, 2.0)
            for n0 in (100.0, 1000.0, 10000.0)]
    # |G(w) - G(-w)| ~ 1/n0, so each decade gives a factor approaching 10
    assert vals[0] / vals[1] > 9.5 and vals[1] / vals[2] > 9.5


def test_qnm_green_converges(rod5, rod5_big):
    pts = [(x, y, w) for x in (0.2, 0.5, 0.9) for y in (0.3, 0.7) for w in (0.5, 1.7, 3.1)]
    errs = []
    for N in (50, 100, 200, 400):
        conf = SeriesConfig(qnm_terms=N)
        errs.append(max(abs(retarded_green_qnm(rod5_big, x, y, w, conf).value
                            - retarded_green_exact(rod5, x, y, w)) for x, y, w in pts))
    order = np.polyfit(np.log([50, 100, 200, 400]), np.log(errs), 1)[0]
    assert errs[-1] < 1e-7
    assert order < -2.5  # empirical order ~ 3


def test_qnm_green_two_segment(two_seg, two_seg_spec):
    big = build_spectrum(two_seg, 300)
    r = retarded_green_qnm(big, 0.2, 0.7, 1.1)
    ref = retarded_green_exact(two_seg, 0.2, 0.7, 1.1)
    assert abs(r.value - ref) / abs(ref) < 1e-3


def test_green_time_against_fourier_oracle(rod5, rod5_big):
    ref = retarded_green_time_fourier(rod5, 0.5, 0.5, 1.0)
    assert ref == pytest.approx(-0.1, abs=1e-6)  # -1/(2n) once the direct wave has passed
    r = retarded_green_qnm_time(rod5_big, 0.5, 0.5, 1.0)
    assert abs(r.value - ref) < 1e-4
    assert abs(r.value.imag) < 1e-12


def test_green_time_late(rod5, rod5_big):
    ref = retarded_green_time_fourier(rod5, 0.5, 0.5, 6.0)
    r = retarded_green_qnm_time(rod5_big, 0.5, 0.5, 6.0)
    assert abs(r.value - ref) < 1e-4


def test_green_time_rejects_negative(rod5_spec):
    with pytest.raises(ValueError):
        retarded_green_qnm_time(rod5_spec, 0.5, 0.5, -1.0)


def test_qnm_sum_identity(rod5_big):
    r200 = abs(verify_qnm_sum_identity(rod5_big, 0.5, 0.5, 200).value)
    assert r200 < 1e-3
    r100 = abs(verify_qnm_sum_identity(rod5_big, 0.5, 0.5, 100).value)
    r400 = abs(verify_qnm_sum_identity(rod5_big, 0.5, 0.5, 400).value)
    assert r400 < r200 < r100
    raw = [abs(verify_qnm_sum_identity(rod5_big, 0.5, 0.5, N, cesaro=False).value)
           for N in (100, 200, 400)]
    np.testing.assert_allclose(np.array(raw[:-1]) / np.array(raw[1:]), 2.0, rtol=0.05)
    assert verify_qnm_sum_identity(rod5_big, 0.0, 0.5, 50).value == 0


def test_kramers_kronig(rod5):
    assert kramers_kronig_residual(rod5, 0.5, np.array([0.5, 1.0, 1.5])) < 0.05
