"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise the
numpy implementations in ``_core_py`` are used.  Set ``QNMFIELD_PURE_PYTHON=1``
to force the fallback.
"""
import os

from . import _core_py

BACKEND = "python"
_impl = _core_py

if os.environ.get("QNMFIELD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _core_py

e1 = _impl.e1
matsubara_sum = _impl.matsubara_sum
pole_series = _impl.pole_series
feynman_double_sum = _impl.feynman_double_sum
exp_integrator = _impl.exp_integrator

__all__ = ["BACKEND", "e1", "matsubara_sum", "pole_series",
           "feynman_double_sum", "exp_integrator"]
