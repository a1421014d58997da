# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled coherence-sum kernels.

Both evaluate  out[i] = offset + sum_k Re(c_k * exp(1j * omega_k * tau_i)).
"""
import numpy as np
from libc.math cimport cos, sin

DEF RESYNC = 64


def coherence_sum(const double[::1] taus, const double[::1] c_re, const double[::1] c_im,
                  const double[::1] omega, double offset):
    cdef Py_ssize_t n = taus.shape[0], nk = omega.shape[0], i, k
    cdef double acc, ph
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        acc = 0.0
        for k in range(nk):
            ph = omega[k] * taus[i]
            acc += c_re[k] * cos(ph) - c_im[k] * sin(ph)
        o[i] = offset + acc
    return out


def coherence_sum_uniform(double tau0, double dt, Py_ssize_t n, const double[::1] c_re,
                          const double[::1] c_im, const double[::1] omega, double offset):
    """Uniform grid tau_i = tau0 + i*dt; phasors advance by recurrence and are
    recomputed exactly every RESYNC steps to bound rounding drift."""
    cdef Py_ssize_t nk = omega.shape[0], i, k
    cdef double acc, ph, zr, zi, tmp
    out = np.empty(n)
    cdef double[::1] o = out
    zre_a = np.empty(nk)
    zim_a = np.empty(nk)
    wre_a = np.empty(nk)
    wim_a = np.empty(nk)
    cdef double[::1] zre = zre_a, zim = zim_a, wre = wre_a, wim = wim_a
    for k in range(nk):
        wre[k] = cos(omega[k] * dt)
        wim[k] = sin(omega[k] * dt)
    for i in range(n):
        if i % RESYNC == 0:
            for k in range(nk):
                ph = omega[k] * (tau0 + i * dt)
                zre[k] = cos(ph)
                zim[k] = sin(ph)
        acc = 0.0
        for k in range(nk):
            zr = zre[k]
            zi = zim[k]
            acc += c_re[k] * zr - c_im[k] * zi
            tmp = zr * wre[k] - zi * wim[k]
            zim[k] = zr * wim[k] + zi * wre[k]
            zre[k] = tmp
        o[i] = offset + acc
    return out
