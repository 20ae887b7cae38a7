# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Signatures mirror ``_core_py`` one to one."""
import numpy as np
cimport numpy as cnp
from libc.math cimport M_PI, exp, fabs, ceil, floor

cdef extern from "<complex.h>" nogil:
    double complex cexp(double complex)
    double complex clog(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)

cnp.import_array()

cdef double EULER_GAMMA = 0.57721566490153286061
cdef double SERIES_RADIUS = 4.0
cdef double ASYMPTOTIC_RADIUS = 40.0
cdef int CF_DEPTH = 400


cdef double complex _e1_series(double complex z) nogil:
    cdef double complex total = 0.0
    cdef double complex term = 1.0
    cdef int k
    cdef int kmax = <int>ceil(2.718281828459045 * (cabs(z) if cabs(z) > 1.0 else 1.0)) + 30
    for k in range(1, kmax + 1):
        term = term * (-z) / k
        total = total + term / k
    return -EULER_GAMMA - clog(z) - total


cdef double complex _e1_cf(double complex z) nogil:
    cdef double complex tail = 0.0
    cdef int k
    for k in range(CF_DEPTH, 0, -1):
        tail = (<double>k * k) / (z + (2 * k + 1) - tail)
    return cexp(-z) / (z + 1 - tail)


cdef double complex _e1_asymptotic(double complex z) nogil:
    cdef double complex total = 1.0
    cdef double complex term = 1.0
    cdef int k
    cdef int kmax = <int>floor(cabs(z))
    for k in range(1, kmax):
        term = term * (-k) / z
        total = total + term
    return cexp(-z) / z * total


cdef double complex _e1(double complex z) nogil:
    cdef double r = cabs(z)
    cdef double complex out
    if r <= SERIES_RADIUS or ((r + creal(z)) < SERIES_RADIUS and r < ASYMPTOTIC_RADIUS):
        out = _e1_series(z)
    elif r >= ASYMPTOTIC_RADIUS:
        out = _e1_asymptotic(z)
    else:
        out = _e1_cf(z)
    if cimag(z) == 0.0 and creal(z) < 0.0:
        out = creal(out)
    return out


def e1(z):
    """Exponential integral E1, principal branch, principal value on the cut."""
    arr = np.asarray(z, dtype=complex)
    flat = np.ascontiguousarray(arr.ravel())
    if np.any(flat == 0):
        raise ZeroDivisionError("E1 is singular at z=0")
    out = np.empty_like(flat)
    cdef double complex[::1] zin = flat
    cdef double complex[::1] res = out
    cdef Py_ssize_t i, n = flat.shape[0]
    with nogil:
        for i in range(n):
            res[i] = _e1(zin[i])
    return out.reshape(arr.shape)


def matsubara_sum(omega, double beta, double t, long mmax):
    """sum_{m=1}^{mmax} mu_m exp(-mu_m t) / (mu_m^2 + omega^2)."""
    arr = np.ascontiguousarray(np.asarray(omega, dtype=complex).ravel())
    out = np.zeros_like(arr)
    cdef double complex[::1] w = arr
    cdef double complex[::1] res = out
    cdef Py_ssize_t i, n = arr.shape[0]
    cdef long m
    mus = 2.0 * np.pi * np.arange(1, mmax + 1) / beta
    weights = mus * np.exp(-mus * t)
    cdef double[::1] mu = mus
    cdef double[::1] wt = weights
    cdef double mu2
    cdef double complex w2, acc
    with nogil:
        for i in range(n):
            w2 = w[i] * w[i]
            acc = 0.0
            for m in range(mmax):
                mu2 = mu[m] * mu[m]
                acc = acc + wt[m] / (mu2 + w2)
            res[i] = acc
    return out.reshape(np.shape(omega))


def pole_series(coeff, omega, t):
    """sum_j coeff_j exp(-i omega_j t) for each t."""
    c = np.ascontiguousarray(np.asarray(coeff, dtype=complex).ravel())
    w = np.ascontiguousarray(np.asarray(omega, dtype=complex).ravel())
    tt = np.ascontiguousarray(np.atleast_1d(np.asarray(t, dtype=float)).ravel())
    out = np.zeros(tt.shape[0], dtype=complex)
    cdef double complex[::1] cv = c
    cdef double complex[::1] wv = w
    cdef double[::1] tv = tt
    cdef double complex[::1] res = out
    cdef Py_ssize_t i, j, nt = tt.shape[0], nm = w.shape[0]
    cdef double complex acc
    with nogil:
        for i in range(nt):
            acc = 0.0
            for j in range(nm):
                acc = acc + cv[j] * cexp(-1j * wv[j] * tv[i])
            res[i] = acc
    return out


def feynman_double_sum(w, fa, fx, fy, double omega):
    """Non-diagonal Feynman kernel contracted with mode values."""
    wa = np.ascontiguousarray(np.asarray(w, dtype=complex).ravel())
    left = np.ascontiguousarray(np.asarray(fa, dtype=complex) * np.asarray(fx, dtype=complex) / wa)
    right = np.ascontiguousarray(np.asarray(fa, dtype=complex) * np.asarray(fy, dtype=complex) / wa)
    cdef double complex[::1] wv = wa
    cdef double complex[::1] lv = left
    cdef double complex[::1] rv = right
    cdef Py_ssize_t j, k, n = wa.shape[0]
    cdef double pos = 1.0 if omega > 0 else (0.5 if omega == 0 else 0.0)
    cdef double neg = 1.0 - pos
    cdef double complex acc = 0.0, row, bj
    with nogil:
        for j in range(n):
            row = 0.0
            bj = pos * wv[j] / (wv[j] - omega) if pos != 0.0 else 0.0
            for k in range(n):
                if neg != 0.0:
                    row = row + (bj + neg * wv[k] / (wv[k] + omega)) / (2.0 * (wv[j] + wv[k])) * rv[k]
                else:
                    row = row + bj / (2.0 * (wv[j] + wv[k])) * rv[k]
            acc = acc + lv[j] * row
    return complex(acc)


def exp_integrator(double complex omega, double complex kappa, double complex a0, b, double h):
    """Exact update for a' + i omega a = kappa b with piecewise-linear b."""
    barr = np.ascontiguousarray(np.asarray(b, dtype=complex).ravel())
    out = np.empty_like(barr)
    cdef double complex[::1] bv = barr
    cdef double complex[::1] res = out
    cdef Py_ssize_t k, n = barr.shape[0]
    cdef double complex z = -1j * omega * h
    cdef double complex e = cexp(z)
    cdef double complex c_now, c_next, a
    if cabs(z) < 1e-4:
        c_now = h * (0.5 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0)
        c_next = h * (0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0)
    else:
        c_now = h * (e * (z - 1.0) + 1.0) / (z * z)
        c_next = h * (e - 1.0) / z - c_now
    a = a0
    if n == 0:
        return out
    res[0] = a
    with nogil:
        for k in range(n - 1):
            a = a * e + kappa * (c_now * bv[k] + c_next * bv[k + 1])
            res[k + 1] = a
    return out
