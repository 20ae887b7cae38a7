import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnmfield.errors import InfiniteDissipation, InvalidProfile
from qnmfield.profiles import (CavityProfile, DielectricRod, free_string, layered, load_profile,
                               make_dielectric_rod, profile_from_dict, rho_at, validate)


def test_rod_densities():
    p = make_dielectric_rod(5, 1, 1)
    assert p.densities == (25.0,)
    assert p.rho_out == 1.0
    q = make_dielectric_rod(1, 2, 1)
    assert q.densities == (1.0,) and q.rho_out == 4.0 and q.n0 == 2.0


def test_rod_rejects_matched_index():
    with pytest.raises(InfiniteDissipation):
        make_dielectric_rod(5, 5, 1)
    with pytest.raises(InfiniteDissipation):
        DielectricRod(2, 2)


@pytest.mark.parametrize("args", [(0, 1, 1), (5, -1, 1), (5, 1, 0)])
def test_rod_rejects_nonpositive(args):
    with pytest.raises(InvalidProfile):
        make_dielectric_rod(*args)


def test_rho_at(rod5):
    assert rho_at(rod5, 0.5) == 25
    assert rho_at(rod5, 2.0) == 1
    assert rho_at(rod5, 1.0, side="inside") == 25
    assert rho_at(rod5, 1.0) == 1


def test_rho_at_negative_x(rod5):
    with pytest.raises(ValueError):
        rho_at(rod5, -0.1)


def test_validate_reports():
    assert validate(make_dielectric_rod(5, 1, 1)) == []
    bad = CavityProfile((0.0,), (1.0,), 1.0, 1.0, checked=False)
    assert validate(bad) == ["NoStepAtBoundary"]
    zero = CavityProfile((0.0, 0.5), (0.0, 4.0), 1.0, 1.0, checked=False)
    assert "NonPositiveDensity" in validate(zero)
    assert "EdgesNotIncreasing" in validate(
        CavityProfile((0.0, 0.7, 0.5), (2.0, 3.0, 4.0), 1.0, 1.0, checked=False))


def test_invalid_profile_raises():
    with pytest.raises(InvalidProfile):
        layered([0.0, 0.5], [4.0, -1.0], 1.0)


def test_free_string_is_unchecked():
    p = free_string(1.0)
    assert validate(p) == ["NoStepAtBoundary"]
    assert p.n0 == 1.0


def test_profile_json_roundtrip(tmp_path, two_seg):
    d = {"segments": [{"x0": 0.0, "rho": 9.0}, {"x0": 0.4, "rho": 4.0}], "a": 1.0, "rho_out": 1.0}
    assert profile_from_dict(d) == two_seg
    f = tmp_path / "p.json"
    f.write_text(json.dumps(d))
    assert load_profile(str(f)) == two_seg
    assert load_profile('{"rod": {"n": 5, "n0": 1, "a": 1}}') == make_dielectric_rod(5, 1, 1)
    assert load_profile("rod:5,1,1") == make_dielectric_rod(5, 1, 1)


def test_optical_length(two_seg):
    assert two_seg.optical_length == pytest.approx(3 * 0.4 + 2 * 0.6)


@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4),
       st.lists(st.floats(1.5, 50.0), min_size=4, max_size=4))
def test_segment_lookup_consistent(widths, rhos):
    edges = np.concatenate([[0.0], np.cumsum(widths)[:-1]])
    a = float(np.sum(widths))
    p = layered(edges, rhos[:len(edges)], a)
    xs = np.linspace(0, a, 37, endpoint=False)
    for x in xs:
        seg = int(p.segment_of(x))
        assert p.edges[seg] <= x
        assert seg == len(p.edges) - 1 or x < p.edges[seg + 1]
        assert rho_at(p, x) == p.densities[seg]
