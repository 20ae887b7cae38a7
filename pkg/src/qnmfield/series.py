"""Truncation settings and helpers shared by every QNM / Matsubara sum."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TailTooLarge

TAIL_POLICIES = ("none", "geometric-estimate")


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation counts and tail handling.

    Parameters
    ----------
    qnm_terms : int or None
        Number of modes with ``Re omega >= 0`` kept (partners included
        automatically).  ``None`` keeps everything the spectrum holds.
    matsubara_terms : int
        Upper bound on Matsubara frequencies; sums also stop once
        ``mu_m t > 40``.
    tail_policy : str
        ``"none"`` or ``"geometric-estimate"``.  The latter reports the change
        of the partial sum over the second half of the terms.
    tolerance : float
        A tail estimate above this raises ``TailTooLarge``.
    cesaro : bool
        Replace the last partial sum by the mean of the partial sums.
    """

    qnm_terms: int | None = None
    matsubara_terms: int = 4000
    tail_policy: str = "geometric-estimate"
    tolerance: float = np.inf
    cesaro: bool = False

    def __post_init__(self):
        if self.qnm_terms is not None and self.qnm_terms < 1:
            raise ValueError("qnm_terms must be >= 1")
        if self.matsubara_terms < 1:
            raise ValueError("matsubara_terms must be >= 1")
        if self.tail_policy not in TAIL_POLICIES:
            raise ValueError(f"tail_policy must be one of {TAIL_POLICIES}")


DEFAULT = SeriesConfig()


@dataclass(frozen=True)
class GreensSeriesResult:
    value: complex
    terms_used: int
    tail_estimate: float

    def __complex__(self):
        return complex(self.value)


def pair_sums(spectrum, terms):
    """Sum ``terms`` (ordered like ``spectrum.ordered``) within each conjugate pair.

    Returns an array of shape ``(n_pairs,) + terms.shape[1:]``.
    """
    terms = np.asarray(terms)
    groups = spectrum.pair_groups
    out = np.zeros((groups[-1] + 1,) + terms.shape[1:], dtype=terms.dtype) if len(groups) else terms[:0]
    np.add.at(out, groups, terms)
    return out


def cesaro_mean(partial):
    """Mean of partial sums along axis 0 (first-order Cesaro)."""
    partial = np.asarray(partial)
    return partial.mean(axis=0)


def finish(partial, config: SeriesConfig = DEFAULT, scale=None) -> GreensSeriesResult:
    """Turn a sequence of partial sums into a value plus tail estimate."""
    partial = np.asarray(partial)
    n = partial.shape[0]
    if n == 0:
        return GreensSeriesResult(0j, 0, 0.0)
    if config.cesaro:
        value = cesaro_mean(partial)
        half = cesaro_mean(partial[: max(1, n // 2)])
    else:
        value = partial[-1]
        half = partial[max(0, n // 2 - 1)]
    if config.tail_policy == "none" or n < 2:
        tail = 0.0
    else:
        tail = float(np.max(np.abs(value - half)))
    if tail > config.tolerance:
        raise TailTooLarge(value, tail, config.tolerance)
    if np.ndim(value) == 0:
        value = complex(value)
    return GreensSeriesResult(value, n, tail)
