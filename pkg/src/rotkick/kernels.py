"""Kernel selection: the compiled extension when importable, else numpy.

Set ``ROTKICK_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

import numpy as np

if os.environ.get("ROTKICK_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"


def _prep(c, omega):
    c = np.ascontiguousarray(c, dtype=complex)
    return (
        np.ascontiguousarray(c.real),
        np.ascontiguousarray(c.imag),
        np.ascontiguousarray(omega, dtype=float),
    )


def coherence_sum(taus, coeffs, omega, offset=0.0, impl=None):
    """offset + sum_k Re(coeffs_k * exp(1j*omega_k*tau)) for each tau."""
    impl = impl or _impl
    c_re, c_im, om = _prep(coeffs, omega)
    return impl.coherence_sum(np.ascontiguousarray(taus, dtype=float), c_re, c_im, om, float(offset))


def coherence_sum_uniform(tau0, dt, n, coeffs, omega, offset=0.0, impl=None):
    impl = impl or _impl
    c_re, c_im, om = _prep(coeffs, omega)
    return impl.coherence_sum_uniform(float(tau0), float(dt), int(n), c_re, c_im, om, float(offset))
