"""QNM frequencies, normalized wavefunctions and the bilinear product.

Everything here works for a piecewise-constant profile by propagating the
state ``(u, u')`` across segments with exact 2x2 transfer matrices.  Two
homogeneous solutions are used throughout:

* the left solution ``f`` with ``f(0) = 0, f'(0) = 1``;
* the right solution ``g`` with ``g(a) = 1, g'(a) = i n0 omega``, i.e. the
  purely outgoing wave ``exp(i n0 omega (x - a))`` for ``x > a``.

Their Wronskian ``W = f g' - f' g`` vanishes exactly at the QNM frequencies.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import GridMismatch, NoConvergence, RootCountMismatch
from .profiles import CavityProfile, DielectricRod, make_dielectric_rod

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# transfer matrices

def _sin_over_k(k, u):
    """sin(k u)/k, continuous through k = 0."""
    k = np.asarray(k, dtype=complex)
    small = np.abs(k * u) < 1e-8
    safe = np.where(small, 1.0, k)
    return np.where(small, u * (1 - (k * u) ** 2 / 6), np.sin(safe * u) / safe)


def _propagate(u0, d0, k, length):
    c = np.cos(k * length)
    s = _sin_over_k(k, length)
    return u0 * c + d0 * s, -u0 * k * k * s + d0 * c


def left_states(profile: CavityProfile, omega):
    """Value and slope of the left solution at every segment start and at ``a``.

    Returns arrays of shape ``(nseg + 1,) + omega.shape``.
    """
    omega = np.asarray(omega, dtype=complex)
    nseg = len(profile.edges)
    vals = np.empty((nseg + 1,) + omega.shape, dtype=complex)
    ders = np.empty_like(vals)
    u, d = np.zeros(omega.shape, complex), np.ones(omega.shape, complex)
    for i, (n, L) in enumerate(zip(profile.indices, profile.lengths)):
        vals[i], ders[i] = u, d
        u, d = _propagate(u, d, n * omega, L)
    vals[nseg], ders[nseg] = u, d
    return vals, ders


def right_states(profile: CavityProfile, omega):
    """Value and slope of the outgoing solution ``g`` at every segment start and at ``a``."""
    omega = np.asarray(omega, dtype=complex)
    nseg = len(profile.edges)
    vals = np.empty((nseg + 1,) + omega.shape, dtype=complex)
    ders = np.empty_like(vals)
    u = np.ones(omega.shape, complex)
    d = 1j * profile.n0 * omega
    vals[nseg], ders[nseg] = u, d
    for i in range(nseg - 1, -1, -1):
        n, L = profile.indices[i], profile.lengths[i]
        u, d = _propagate(u, d, n * omega, -L)
        vals[i], ders[i] = u, d
    return vals, ders


def wronskian(profile: CavityProfile, omega, derivative=False):
    """``W(omega) = f g' - f' g`` evaluated at ``x = a``.

    With ``derivative=True`` also returns ``dW/domega`` obtained by
    differentiating the transfer matrices analytically.
    """
    omega = np.asarray(omega, dtype=complex)
    n0 = profile.n0
    u, d = np.zeros(omega.shape, complex), np.ones(omega.shape, complex)
    du, dd = np.zeros_like(u), np.zeros_like(u)
    for n, L in zip(profile.indices, profile.lengths):
        k = n * omega
        c = np.cos(k * L)
        s = _sin_over_k(k, L)
        sn = np.sin(k * L)
        # derivatives of the matrix entries with respect to k
        big = np.abs(k * L) > 1e-6
        ksafe = np.where(big, k, 1.0)
        ds_dk = np.where(big, (L * c - s) / ksafe, -k * L ** 3 / 3)
        dc_dk = -L * sn
        dm21_dk = -sn - k * L * c
        if derivative:
            du, dd = (n * (dc_dk * u + ds_dk * d) + c * du + s * dd,
                      n * (dm21_dk * u + dc_dk * d) - k * sn * du + c * dd)
        u, d = u * c + d * s, -u * k * sn + d * c
    W = 1j * n0 * omega * u - d
    if not derivative:
        return W
    dW = 1j * n0 * u + 1j * n0 * omega * du - dd
    return W, dW


def wronskian_scale(profile: CavityProfile, omega):
    """Magnitude against which ``|W|`` is judged small."""
    vals, ders = left_states(profile, omega)
    return np.abs(ders[-1]) + profile.n0 * np.abs(omega) * np.abs(vals[-1])


# ---------------------------------------------------------------------------
# closed form for the rod

def rod_qnm_frequency(rod, j: int) -> complex:
    """Exact QNM frequency of the dielectric rod.

    ``n > n0`` uses half-integer real parts (partner of ``j`` is ``-1 - j``);
    ``n < n0`` uses integer real parts (partner of ``j`` is ``-j``).
    """
    n, n0, a = _rod_params(rod)
    if n > n0:
        return ((j + 0.5) * np.pi - 1j * np.arctanh(n0 / n)) / (n * a)
    return (j * np.pi - 1j * np.arctanh(n / n0)) / (n * a)


def _rod_params(rod):
    if isinstance(rod, DielectricRod):
        return rod.n, rod.n0, rod.a
    if isinstance(rod, CavityProfile):
        if len(rod.edges) != 1:
            raise ValueError("profile is not a single-segment rod")
        return float(rod.indices[0]), rod.n0, rod.a
    n, n0, a = rod
    return float(n), float(n0), float(a)


# ---------------------------------------------------------------------------
# modes

@dataclass(frozen=True, eq=False)
class QnmMode:
    """One normalized QNM.

    Inside segment ``i`` the wavefunction is
    ``f(x) = B_i cos(k_i (x - x_i)) + A_i sin(k_i (x - x_i))`` with
    ``k_i = n_i omega``; ``seg_vals`` and ``seg_ders`` hold ``f`` and ``f'`` at
    each segment start (``B_i = seg_vals[i]``, ``A_i = seg_ders[i] / k_i``).
    """

    index: int
    omega: complex
    profile: CavityProfile
    seg_vals: np.ndarray
    seg_ders: np.ndarray
    norm_applied: bool = True

    @property
    def n0(self) -> float:
        return self.profile.n0

    @property
    def surface_value(self) -> complex:
        """``f(a+)``; ``f`` is continuous at ``a`` for a step profile."""
        return complex(self.seg_vals[-1])

    @property
    def gamma(self) -> float:
        return abs(self.omega.imag)

    @property
    def segment_coeffs(self):
        """Per-segment ``(A, B)`` in local coordinates ``x - x_i``."""
        k = self.profile.indices * self.omega
        return list(zip(self.seg_ders[:-1] / k, self.seg_vals[:-1]))

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x, derivative=False):
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12) or np.any(x > self.profile.a * (1 + 1e-12)):
            raise ValueError("x outside [0, a]")
        seg = self.profile.segment_of(x)
        u = x - np.asarray(self.profile.edges)[seg]
        k = self.profile.indices[seg] * self.omega
        f0 = self.seg_vals[seg]
        d0 = self.seg_ders[seg]
        if derivative:
            out = -f0 * k * np.sin(k * u) + d0 * np.cos(k * u)
        else:
            out = f0 * np.cos(k * u) + d0 * _sin_over_k(k, u)
        return complex(out) if out.ndim == 0 else out

    def derivative(self, x):
        return self.evaluate(x, derivative=True)

    def conjugate_partner(self, index: int) -> "QnmMode":
        return QnmMode(index, -np.conj(self.omega), self.profile,
                       np.conj(self.seg_vals), np.conj(self.seg_ders), self.norm_applied)

    def scaled(self, factor) -> "QnmMode":
        return QnmMode(self.index, self.omega, self.profile, self.seg_vals * factor,
                       self.seg_ders * factor, False)


def _unnormalized(profile, omega, index=0):
    vals, ders = left_states(profile, np.asarray(omega, dtype=complex))
    return QnmMode(index, complex(omega), profile, vals, ders, norm_applied=False)


def make_mode(profile: CavityProfile, omega: complex, index: int = 0,
              normalize: bool = True) -> QnmMode:
    """Build the mode at a known QNM frequency and normalize it.

    The sign is fixed so that ``f'(0)/omega`` has positive real part.
    """
    mode = _unnormalized(profile, omega, index)
    if not normalize:
        return mode
    grid = make_grid(profile, abs(omega))
    pair = FieldPair.from_mode(mode, grid)
    norm = bilinear_product(pair, pair, profile)
    c = np.sqrt(2 * mode.omega / norm)
    if (c / mode.omega).real < 0:
        c = -c
    return QnmMode(index, mode.omega, profile, mode.seg_vals * c, mode.seg_ders * c, True)


class Spectrum:
    """A set of QNMs closed under ``omega -> -conj(omega)``.

    Modes with ``Re omega > 0`` carry indices ``m, m+1, ...`` in order of
    increasing real part, where ``m`` is the number of purely imaginary
    modes (indices ``0..m-1``).  The partner of index ``j >= m`` is
    ``-(j - m + 1)``.  For the rod this reproduces the closed-form labels.
    """

    def __init__(self, profile: CavityProfile, modes):
        self.profile = profile
        self.modes = sorted(modes, key=lambda m: (_order_key(m.index)))
        self._by_index = {m.index: m for m in self.modes}
        self.n_imag = sum(1 for m in self.modes if m.omega.real == 0.0)

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, index) -> QnmMode:
        return self._by_index[index]

    def partner_index(self, j: int) -> int:
        m = self.n_imag
        if 0 <= j < m:
            return j
        if j >= m:
            return -(j - m + 1)
        return -j - 1 + m

    def partner(self, mode: QnmMode) -> QnmMode:
        return self._by_index[self.partner_index(mode.index)]

    @property
    def nonnegative(self):
        """Modes with ``Re omega >= 0`` in index order."""
        return [m for m in self.modes if m.index >= 0]

    @property
    def omegas(self) -> np.ndarray:
        return np.array([m.omega for m in self.modes])

    def truncated(self, n_pairs: int) -> "Spectrum":
        """Keep the first ``n_pairs`` modes with ``Re omega >= 0`` plus partners."""
        keep = self.nonnegative[:n_pairs]
        idx = {m.index for m in keep} | {self.partner_index(m.index) for m in keep}
        return Spectrum(self.profile, [self._by_index[i] for i in sorted(idx)
                                       if i in self._by_index])

    def table(self, x):
        """``(omega, f(x), f(a))`` arrays in the fixed summation order.

        The order pairs each mode with its partner, lowest ``|index|`` first.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        omegas = np.array([m.omega for m in self.ordered])
        fa = np.array([m.surface_value for m in self.ordered])
        fx = np.array([m.evaluate(x) for m in self.ordered]).reshape(len(omegas), x.size)
        return omegas, fx, fa

    @cached_property
    def ordered(self):
        out = []
        for m in self.nonnegative:
            out.append(m)
            p = self.partner_index(m.index)
            if p != m.index and p in self._by_index:
                out.append(self._by_index[p])
        return out

    @cached_property
    def pair_groups(self) -> np.ndarray:
        """Pair number of each entry of ``ordered``."""
        groups, g = [], -1
        for m in self.ordered:
            if m.index >= 0:
                g += 1
            groups.append(g)
        return np.array(groups, dtype=int)

    @cached_property
    def weights(self) -> np.ndarray:
        """Primed-sum weights (1/2 for purely imaginary modes) in ``ordered``."""
        return np.array([0.5 if m.omega.real == 0.0 else 1.0 for m in self.ordered])


def _order_key(j):
    return (abs(j) if j >= 0 else abs(j) - 0.5, j)


def modes_from_frequencies(profile: CavityProfile, omegas) -> Spectrum:
    """Spectrum from already-known frequencies with ``Re omega >= 0``.

    Partners are generated by ``f -> conj(f)``, ``omega -> -conj(omega)``.
    """
    omegas = sorted((complex(w) for w in omegas), key=lambda w: (w.real, w.imag))
    imag = [w for w in omegas if w.real == 0.0]
    pos = [w for w in omegas if w.real > 0.0]
    modes = []
    for i, w in enumerate(imag):
        modes.append(make_mode(profile, w, i))
    m = len(imag)
    for i, w in enumerate(pos):
        mode = make_mode(profile, w, m + i)
        modes.append(mode)
        modes.append(mode.conjugate_partner(-(i + 1)))
    return Spectrum(profile, modes)


def rod_spectrum(rod, n_pairs: int) -> Spectrum:
    """Closed-form rod spectrum with ``n_pairs`` modes of ``Re omega >= 0``."""
    n, n0, a = _rod_params(rod)
    profile = make_dielectric_rod(n, n0, a)
    start = 0
    js = range(start, start + n_pairs)
    return modes_from_frequencies(profile, [rod_qnm_frequency((n, n0, a), j) for j in js])


# ---------------------------------------------------------------------------
# root finding

@dataclass
class SearchWindow:
    """Search region for ``find_qnms``.

    ``re_max`` bounds the real part; ``im_min`` (negative) bounds the
    imaginary part from below and defaults to a generous multiple of the
    leakage rate implied by the profile's reflection coefficients.
    """

    re_max: float
    im_min: float | None = None
    max_count: int | None = None
    tol: float = 1e-10


def default_im_min(profile: CavityProfile) -> float:
    n = profile.indices
    r_edge = abs((n[-1] - profile.n0) / (n[-1] + profile.n0))
    loss = 0.5 * abs(np.log(r_edge))
    loss += float(np.sum(np.abs(np.log(n[1:] / n[:-1])))) if n.size > 1 else 0.0
    return -3.0 * (loss + 1.0) / profile.optical_length


def _boundary(corners, per_edge):
    z0, z1, z2, z3 = corners
    pts = []
    for a, b in ((z0, z1), (z1, z2), (z2, z3), (z3, z0)):
        s = np.linspace(0.0, 1.0, per_edge, endpoint=False)
        pts.append(a + (b - a) * s)
    pts = np.concatenate(pts)
    return np.append(pts, z0)


def _winding(profile, lo, hi, per_edge=24, max_refine=14):
    """Number of zeros of W inside the rectangle [lo, hi] (complex corners)."""
    corners = (complex(lo.real, lo.imag), complex(hi.real, lo.imag),
               complex(hi.real, hi.imag), complex(lo.real, hi.imag))
    z = _boundary(corners, per_edge)
    w = wronskian(profile, z)
    for _ in range(max_refine):
        dphi = np.angle(w[1:] / w[:-1])
        bad = np.abs(dphi) > 0.4
        if not bad.any():
            total = dphi.sum() / (2 * np.pi)
            count = int(round(total))
            if abs(total - count) > 1e-3:
                raise NoConvergence("winding number not close to an integer")
            return count
        # insert midpoints where the phase jumps
        mids = 0.5 * (z[:-1][bad] + z[1:][bad])
        wm = wronskian(profile, mids)
        pos = np.nonzero(bad)[0] + 1
        z = np.insert(z, pos, mids)
        w = np.insert(w, pos, wm)
    raise NoConvergence("contour phase could not be resolved")


def _newton(profile, z, tol, maxiter=60):
    for _ in range(maxiter):
        W, dW = wronskian(profile, z, derivative=True)
        step = complex(W / dW)
        z = z - step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    W = wronskian(profile, z)
    scale = float(wronskian_scale(profile, z))
    if not np.isfinite(z) or abs(W) > tol * scale:
        raise NoConvergence(f"Newton failed near {z}")
    return complex(z)


def _solve_cell(profile, lo, hi, count, tol, depth=0):
    if count == 0:
        return []
    if depth > 40:
        raise NoConvergence("cell subdivision too deep")
    if count == 1:
        center = 0.5 * (lo + hi)
        try:
            root = _newton(profile, center, tol)
        except NoConvergence:
            root = None
        if root is not None:
            mr = 0.05 * (hi.real - lo.real)
            mi = 0.05 * (hi.imag - lo.imag)
            if lo.real - mr <= root.real <= hi.real + mr and lo.imag - mi <= root.imag <= hi.imag + mi:
                return [root]
    # bisect along the longer side
    if (hi.real - lo.real) >= (hi.imag - lo.imag):
        mid = 0.5 * (lo.real + hi.real)
        cells = [(lo, complex(mid, hi.imag)), (complex(mid, lo.imag), hi)]
    else:
        mid = 0.5 * (lo.imag + hi.imag)
        cells = [(lo, complex(hi.real, mid)), (complex(lo.real, mid), hi)]
    roots = []
    for clo, chi in cells:
        c = _winding(profile, clo, chi)
        roots += _solve_cell(profile, clo, chi, c, tol, depth + 1)
    return roots


def _imaginary_roots(profile, im_min, tol):
    """Roots on the negative imaginary axis, where W is real."""
    kappa = np.linspace(0.0, -im_min, 2001)[1:]
    vals = wronskian(profile, -1j * kappa).real
    roots = []
    for k0, k1, v0, v1 in zip(kappa[:-1], kappa[1:], vals[:-1], vals[1:]):
        if v0 == 0.0:
            roots.append(-1j * k0)
        elif v0 * v1 < 0:
            k = brentq(lambda s: wronskian(profile, -1j * s).real, k0, k1, xtol=1e-15, rtol=1e-15)
            roots.append(complex(0.0, -k))
    return roots


def find_qnm_frequencies(profile: CavityProfile, window: SearchWindow):
    """All QNM frequencies with ``0 <= Re omega <= re_max`` and ``Im omega >= im_min``.

    Returns a sorted list of complex frequencies with non-negative real part.
    """
    im_min = window.im_min if window.im_min is not None else default_im_min(profile)
    spacing = np.pi / profile.optical_length
    top = 0.1 * spacing
    left = 1e-3 * spacing

    roots = _imaginary_roots(profile, im_min, window.tol)
    thin = _winding(profile, complex(-left, im_min), complex(left, top))
    if thin != len(roots):
        raise RootCountMismatch(f"imaginary axis: counted {thin}, found {len(roots)}")

    edges = np.arange(left, window.re_max, 0.5 * spacing)
    if window.re_max - edges[-1] < 0.05 * spacing:
        edges = edges[:-1]
    edges = np.append(edges, window.re_max)
    total = 0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        lo, hi = complex(x0, im_min), complex(x1, top)
        count = _winding(profile, lo, hi)
        total += count
        found = _solve_cell(profile, lo, hi, count, window.tol)
        if len(found) != count:
            raise RootCountMismatch(f"strip [{x0:.4g},{x1:.4g}]: counted {count}, found {len(found)}")
        roots += found
        if window.max_count is not None and len(roots) >= window.max_count:
            break
    roots = sorted(roots, key=lambda w: (w.real, w.imag))
    distinct = [roots[0]] if roots else []
    for w in roots[1:]:
        if abs(w - distinct[-1]) > 1e-9 * max(1.0, abs(w)):
            distinct.append(w)
    if len(distinct) != len(roots):
        raise RootCountMismatch("refinement merged distinct roots")
    if any(w.imag >= 0 for w in distinct):
        raise RootCountMismatch("found a non-decaying root")
    if window.max_count is not None:
        distinct = distinct[:window.max_count]
    return distinct


def find_qnms(profile: CavityProfile, window: SearchWindow | float) -> Spectrum:
    """QNMs of ``profile`` inside ``window`` (mirrored window included)."""
    if not isinstance(window, SearchWindow):
        window = SearchWindow(float(window))
    return modes_from_frequencies(profile, find_qnm_frequencies(profile, window))


# ---------------------------------------------------------------------------
# quadrature grids and the bilinear product

@dataclass(frozen=True, eq=False)
class QuadGrid:
    """Composite Gauss-Legendre nodes on ``[0, a]``, one set per segment.

    ``x`` starts with 0 and ends with ``a``; those two endpoints carry zero
    weight so nodal and surface values ride along on the same grid.
    """

    x: np.ndarray
    w: np.ndarray
    rho: np.ndarray
    a: float

    def same_as(self, other) -> bool:
        return self is other or (self.x.shape == other.x.shape and np.array_equal(self.x, other.x))


def make_grid(profile: CavityProfile, kmax: float = 1.0, order: int = 16,
              panel_phase: float = 3.0) -> QuadGrid:
    """Segment-aware Gauss-Legendre grid resolving wavenumbers up to ``kmax``.

    Panels never straddle a density discontinuity; within a segment of index
    ``n`` the panel width keeps ``n kmax width <= panel_phase``.
    """
    t, wt = np.polynomial.legendre.leggauss(order)
    xs, ws, rs = [np.array([0.0])], [np.array([0.0])], [np.array([profile.densities[0]])]
    for (x0, x1), n, rho in zip(profile.bounds, profile.indices, profile.densities):
        L = x1 - x0
        panels = max(1, int(np.ceil(n * max(kmax, 1e-12) * L / panel_phase)))
        b = np.linspace(x0, x1, panels + 1)
        for p0, p1 in zip(b[:-1], b[1:]):
            h = 0.5 * (p1 - p0)
            xs.append(p0 + h * (t + 1))
            ws.append(h * wt)
            rs.append(np.full(order, rho))
    xs.append(np.array([profile.a]))
    ws.append(np.array([0.0]))
    rs.append(np.array([profile.densities[-1]]))
    return QuadGrid(np.concatenate(xs), np.concatenate(ws), np.concatenate(rs), profile.a)


@dataclass(frozen=True, eq=False)
class FieldPair:
    """Two-component state ``(phi, phi_hat)`` sampled on a ``QuadGrid``."""

    grid: QuadGrid
    phi: np.ndarray
    phi_hat: np.ndarray

    @classmethod
    def from_mode(cls, mode: QnmMode, grid: QuadGrid) -> "FieldPair":
        f = mode.evaluate(grid.x)
        return cls(grid, f, -1j * grid.rho * mode.omega * f)

    @classmethod
    def from_functions(cls, grid: QuadGrid, phi, phi_hat) -> "FieldPair":
        return cls(grid, np.asarray(phi(grid.x), dtype=complex),
                   np.asarray(phi_hat(grid.x), dtype=complex))

    def __add__(self, other):
        _check_grid(self, other)
        return FieldPair(self.grid, self.phi + other.phi, self.phi_hat + other.phi_hat)

    def __rmul__(self, c):
        return FieldPair(self.grid, c * self.phi, c * self.phi_hat)


def _check_grid(A, B):
    if not A.grid.same_as(B.grid):
        raise GridMismatch("field pairs live on different grids")


def bilinear_product(A: FieldPair, B: FieldPair, profile: CavityProfile) -> complex:
    """``i { int (phi_A chi_B^ + phi_A^ chi_B) dx + n0 phi_A(a) chi_B(a) }``.

    No complex conjugation is applied anywhere.
    """
    _check_grid(A, B)
    w = A.grid.w
    integral = np.sum(w * (A.phi * B.phi_hat + A.phi_hat * B.phi))
    surface = profile.n0 * A.phi[-1] * B.phi[-1]
    return complex(1j * (integral + surface))


def project_coefficient(mode: QnmMode, state: FieldPair) -> complex:
    """Expansion coefficient ``a_j = <f_j, state> / (2 omega_j)``."""
    grid = state.grid
    n_max = float(np.max(np.sqrt(grid.rho)))
    wavelength = 2 * np.pi / max(n_max * abs(mode.omega.real), 1e-12)
    if grid.x.size < 10 * grid.a / wavelength:
        warnings.warn("grid under-resolves the mode", RuntimeWarning, stacklevel=2)
    fj = FieldPair.from_mode(mode, grid)
    return bilinear_product(fj, state, mode.profile) / (2 * mode.omega)


def check_orthogonality(modes, profile: CavityProfile, grid: QuadGrid | None = None) -> float:
    """``max_{j != k} |<f_j, f_k>| / |2 omega_j|`` over the given modes."""
    modes = list(modes)
    if len(modes) < 2:
        return 0.0
    if grid is None:
        grid = make_grid(profile, max(abs(m.omega) for m in modes))
    pairs = [FieldPair.from_mode(m, grid) for m in modes]
    worst = 0.0
    for i, (mi, pi) in enumerate(zip(modes, pairs)):
        for mk, pk in zip(modes[i + 1:], pairs[i + 1:]):
            val = abs(bilinear_product(pi, pk, profile))
            worst = max(worst, val / abs(2 * mi.omega), val / abs(2 * mk.omega))
    return worst


def norm_residual(mode: QnmMode, grid: QuadGrid | None = None) -> float:
    """``|<f,f> - 2 omega| / |2 omega|``."""
    grid = grid or make_grid(mode.profile, abs(mode.omega))
    p = FieldPair.from_mode(mode, grid)
    return abs(bilinear_product(p, p, mode.profile) - 2 * mode.omega) / abs(2 * mode.omega)


def build_spectrum(profile: CavityProfile, n_pairs: int) -> Spectrum:
    """At least ``n_pairs`` modes with ``Re omega >= 0`` (plus partners).

    Single-segment profiles use the closed-form rod frequencies; anything else
    goes through the contour root finder with a window grown until enough
    modes are inside.
    """
    if len(profile.edges) == 1:
        return rod_spectrum(profile, n_pairs)
    spacing = np.pi / profile.optical_length
    re_max = (n_pairs + 2) * spacing
    for _ in range(8):
        freqs = find_qnm_frequencies(profile, SearchWindow(re_max))
        if len(freqs) >= n_pairs:
            return modes_from_frequencies(profile, freqs[:n_pairs])
        re_max *= 1.5
    raise NoConvergence("could not collect the requested number of modes")
