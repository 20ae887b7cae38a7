import os
import subprocess
import sys

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from qnmfield import _core_py, _kernels

try:
    from qnmfield import _core
except ImportError:  # pragma: no cover - depends on build
    _core = None

BACKENDS = [_core_py] + ([_core] if _core is not None else [])
needs_core = pytest.mark.skipif(_core is None, reason="compiled core not built")

_r = np.random.default_rng(11)
W = _r.normal(size=12) * 3 - 1j * np.abs(_r.normal(size=12)) * 0.3


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_e1_reference(mod):
    RNG = np.random.default_rng(5)
    z = np.concatenate([RNG.normal(size=40) * 10 + 1j * RNG.normal(size=40) * 10,
                        [0.5, 3.9, 4.1, 39.0, 41.0, -5 + 1e-9j, 2j, -2j]])
    ref = np.array([complex(mpmath.e1(complex(v))) for v in z])
    np.testing.assert_allclose(mod.e1(z), ref, rtol=1e-12)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_matsubara_reference(mod):
    beta, t, M = 1.3, 0.05, 500
    mu = 2 * np.pi * np.arange(1, M + 1) / beta
    ref = np.array([np.sum(mu * np.exp(-mu * t) / (mu ** 2 + w ** 2)) for w in W])
    np.testing.assert_allclose(mod.matsubara_sum(W, beta, t, M), ref, rtol=1e-13)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_pole_series_reference(mod):
    RNG = np.random.default_rng(5)
    c = RNG.normal(size=12) + 1j * RNG.normal(size=12)
    t = np.linspace(0.1, 5, 17)
    ref = np.array([sum(ci * np.exp(-1j * wi * tt) for ci, wi in zip(c, W)) for tt in t])
    np.testing.assert_allclose(mod.pole_series(c, W, t), ref, rtol=1e-12)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("omega", [1.7, -0.6, 0.0])
def test_feynman_double_sum_reference(mod, omega):
    RNG = np.random.default_rng(5)
    fa, fx, fy = (RNG.normal(size=12) + 1j * RNG.normal(size=12) for _ in range(3))
    th_p = 1.0 if omega > 0 else (0.5 if omega == 0 else 0.0)
    ref = 0j
    for j in range(12):
        for k in range(12):
            wj, wk = W[j], W[k]
            br = th_p * wj / (wj - omega) + (1 - th_p) * wk / (wk + omega)
            ref += fa[j] * fa[k] * fx[j] * fy[k] / (2 * wj * wk * (wj + wk)) * br
    assert mod.feynman_double_sum(W, fa, fx, fy, omega) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_exp_integrator_reference(mod):
    w, kappa, a0, h = 2.3 - 0.1j, 0.4 + 0.2j, 1 - 1j, 0.01
    t = h * np.arange(501)
    b = np.cos(1.1 * t) + 0.5j * t   # reference uses the same linear interpolant
    out = mod.exp_integrator(w, kappa, a0, b, h)
    binterp = lambda s: np.interp(s, t, b.real) + 1j * np.interp(s, t, b.imag)  # noqa: E731
    sol = solve_ivp(lambda s, y: [-1j * w * y[0] + kappa * binterp(s)], (0, t[-1]), [complex(a0)],
                    t_eval=t, rtol=1e-11, atol=1e-13, max_step=h)
    np.testing.assert_allclose(out, sol.y[0], atol=1e-8)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_exp_integrator_small_step(mod):
    # series branch for |omega h| < 1e-4: constant b gives a0 e^{-iwt} + kappa b (1 - e^{-iwt}) / (i w)
    w, kappa, h = 1e-3 - 1e-4j, 1.0, 0.01
    t = h * np.arange(101)
    out = mod.exp_integrator(w, kappa, 0.3, np.full(101, 2.0 + 0j), h)
    ref = 0.3 * np.exp(-1j * w * t) + 2.0 * (1 - np.exp(-1j * w * t)) / (1j * w)
    np.testing.assert_allclose(out, ref, rtol=1e-12)


@needs_core
def test_backend_parity():
    RNG = np.random.default_rng(5)
    z = RNG.normal(size=200) * 20 + 1j * RNG.normal(size=200) * 20
    np.testing.assert_allclose(_core.e1(z), _core_py.e1(z), rtol=1e-12)
    np.testing.assert_allclose(_core.matsubara_sum(W, 0.7, 0.01, 3000),
                               _core_py.matsubara_sum(W, 0.7, 0.01, 3000), rtol=1e-13)
    c = RNG.normal(size=12) + 0j
    t = np.linspace(0, 3, 50)
    np.testing.assert_allclose(_core.pole_series(c, W, t), _core_py.pole_series(c, W, t), rtol=1e-13)
    b = np.sin(np.arange(300) * 0.02) + 0j
    np.testing.assert_allclose(_core.exp_integrator(1.2 - 0.05j, 0.3j, 1.0, b, 0.02),
                               _core_py.exp_integrator(1.2 - 0.05j, 0.3j, 1.0, b, 0.02), rtol=1e-13)


@needs_core
@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=200, allow_nan=False,
                          allow_infinity=False))
def test_e1_parity_property(z):
    a, b = _core.e1(z), _core_py.e1(z)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_shapes():
    for mod in BACKENDS:
        assert np.ndim(mod.e1(1.0)) == 0
        assert mod.e1(np.ones((2, 3))).shape == (2, 3)
        assert mod.matsubara_sum(W[:3], 1.0, 0.1, 10).shape == (3,)


def test_selected_backend():
    assert _kernels.BACKEND == ("cython" if _core is not None else "python")


def test_pure_python_env():
    env = dict(os.environ, QNMFIELD_PURE_PYTHON="1")
    code = ("from qnmfield import _kernels, thermal; print(_kernels.BACKEND); "
            "print(thermal.exp_integral_E1(1.0))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out[0] == "python"
    assert complex(out[1]) == pytest.approx(0.21938393439552029, rel=1e-13)
