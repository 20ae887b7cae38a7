"""Piecewise-constant cavity density profiles.

A profile describes ``rho(x)`` on ``[0, a)`` as a list of constant segments
plus a constant value ``n0**2`` for ``x > a``.  The dielectric rod is the
one-segment case.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InfiniteDissipation, InvalidProfile

INSIDE = "inside"
OUTSIDE = "outside"


@dataclass(frozen=True)
class CavityProfile:
    """Piecewise-constant density ``rho(x)``.

    Parameters
    ----------
    edges : sequence of float
        Left edges of the segments; ``edges[0]`` must be 0.
    densities : sequence of float
        Density on each segment.
    a : float
        Cavity length; the last segment ends here.
    rho_out : float
        Density for ``x > a`` (``n0**2``).
    """

    edges: tuple
    densities: tuple
    a: float
    rho_out: float
    checked: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(float(e) for e in self.edges))
        object.__setattr__(self, "densities", tuple(float(r) for r in self.densities))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "rho_out", float(self.rho_out))
        if self.checked:
            problems = validate(self)
            if problems:
                if problems == ["NoStepAtBoundary"]:
                    raise InfiniteDissipation(
                        "last segment density equals the outside density")
                raise InvalidProfile(", ".join(problems))

    @property
    def n0(self) -> float:
        return float(np.sqrt(self.rho_out))

    @property
    def indices(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.densities))

    @property
    def lengths(self) -> np.ndarray:
        right = np.append(np.asarray(self.edges[1:]), self.a)
        return right - np.asarray(self.edges)

    @property
    def bounds(self):
        """List of ``(x0, x1)`` per segment."""
        right = list(self.edges[1:]) + [self.a]
        return list(zip(self.edges, right))

    @property
    def optical_length(self) -> float:
        return float(np.sum(self.indices * self.lengths))

    def segment_of(self, x, side=None):
        """Segment index containing ``x`` (right-limit convention at edges)."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(np.asarray(self.edges), x, side="right") - 1
        idx = np.clip(idx, 0, len(self.edges) - 1)
        return idx

    def to_dict(self) -> dict:
        return {
            "segments": [{"x0": e, "rho": r} for e, r in zip(self.edges, self.densities)],
            "a": self.a,
            "rho_out": self.rho_out,
        }


@dataclass(frozen=True)
class DielectricRod:
    """Uniform rod of index ``n`` in a medium of index ``n0``."""

    n: float
    n0: float
    a: float = 1.0

    def __post_init__(self):
        for name in ("n", "n0", "a"):
            if not getattr(self, name) > 0:
                raise InvalidProfile(f"{name} must be positive")
        if self.n == self.n0:
            raise InfiniteDissipation("n == n0: the QNM description breaks down")

    @property
    def profile(self) -> CavityProfile:
        return make_dielectric_rod(self.n, self.n0, self.a)


def make_dielectric_rod(n: float, n0: float, a: float = 1.0) -> CavityProfile:
    """Profile with ``rho = n**2`` on ``[0, a)`` and ``n0**2`` outside."""
    if not (n > 0 and n0 > 0 and a > 0):
        raise InvalidProfile("n, n0 and a must be positive")
    if n == n0:
        raise InfiniteDissipation("n == n0: the QNM description breaks down")
    return CavityProfile((0.0,), (n * n,), a, n0 * n0)


def free_string(n: float = 1.0, a: float = 1.0) -> CavityProfile:
    """Homogeneous half-line, ``rho = n**2`` everywhere.

    This has no cavity edge and therefore no QNMs; it is only useful for the
    exact (Wronskian) Green's function and free-string limits.
    """
    return CavityProfile((0.0,), (n * n,), a, n * n, checked=False)


def layered(edges: Sequence[float], densities: Sequence[float], a: float,
            rho_out: float = 1.0) -> CavityProfile:
    return CavityProfile(tuple(edges), tuple(densities), a, rho_out)


def rho_at(profile: CavityProfile, x, side: str = OUTSIDE):
    """Density at ``x``.

    Interior edges return the right-limit value.  At ``x == a`` the outside
    value is returned unless ``side="inside"``.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("x must be non-negative")
    dens = np.asarray(profile.densities)
    vals = dens[profile.segment_of(xa)]
    if side == INSIDE:
        outside = xa > profile.a
    else:
        outside = xa >= profile.a
    vals = np.where(outside, profile.rho_out, vals)
    return float(vals) if vals.ndim == 0 else vals


def validate(profile: CavityProfile) -> list:
    """Return the list of invariant violations (empty if valid)."""
    problems = []
    edges = profile.edges
    if not profile.a > 0:
        problems.append("NonPositiveLength")
    if len(edges) == 0 or len(edges) != len(profile.densities):
        problems.append("SegmentMismatch")
        return problems
    if edges[0] != 0.0:
        problems.append("FirstEdgeNotZero")
    if any(e1 <= e0 for e0, e1 in zip(edges, edges[1:])) or edges[-1] >= profile.a:
        problems.append("EdgesNotIncreasing")
    if any(not r > 0 for r in profile.densities) or not profile.rho_out > 0:
        problems.append("NonPositiveDensity")
    if profile.densities[-1] == profile.rho_out:
        problems.append("NoStepAtBoundary")
    return problems


def profile_from_dict(data: dict) -> CavityProfile:
    """Build a profile from the JSON schema used by the CLI.

    Accepts ``{"segments": [{"x0":..,"rho":..}], "a":.., "rho_out":..}`` or
    ``{"rod": {"n":.., "n0":.., "a":..}}``.
    """
    if "rod" in data:
        rod = data["rod"]
        return make_dielectric_rod(float(rod["n"]), float(rod.get("n0", 1.0)),
                                   float(rod.get("a", 1.0)))
    segs = data["segments"]
    return CavityProfile(tuple(s["x0"] for s in segs), tuple(s["rho"] for s in segs),
                         data["a"], data.get("rho_out", 1.0))


def load_profile(spec: str) -> CavityProfile:
    """Load from a JSON file path, an inline JSON string, or ``rod:n,n0,a``."""
    spec = spec.strip()
    if spec.startswith("rod:"):
        parts = [float(p) for p in spec[4:].split(",")]
        n, n0, a = (parts + [1.0, 1.0])[:3] if len(parts) < 3 else parts[:3]
        return make_dielectric_rod(n, n0, a)
    if spec.startswith("{"):
        return profile_from_dict(json.loads(spec))
    with open(spec) as fh:
        return profile_from_dict(json.load(fh))
