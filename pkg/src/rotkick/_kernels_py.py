"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np

_CHUNK = 4096


def coherence_sum(taus, c_re, c_im, omega, offset):
    taus = np.asarray(taus, dtype=float)
    out = np.empty(len(taus))
    for s in range(0, len(taus), _CHUNK):
        ph = np.multiply.outer(taus[s : s + _CHUNK], omega)
        out[s : s + _CHUNK] = offset + np.cos(ph) @ c_re - np.sin(ph) @ c_im
    return out


def coherence_sum_uniform(tau0, dt, n, c_re, c_im, omega, offset):
    return coherence_sum(tau0 + dt * np.arange(n), c_re, c_im, omega, offset)
