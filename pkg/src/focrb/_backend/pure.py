"""scipy/numpy implementation of the kernel backend.

Semantics must match ``focrb._backend._core`` exactly up to floating-point
rounding; tests compare the two at 1e-12 relative tolerance.
"""

import numpy as np
import scipy.signal


def lfilter_zero_state(num, den, x):
    """Direct-form IIR filter with zero initial conditions.

    ``den`` must be monic (den[0] == 1); the caller validates.  Output has
    the same length as ``x``.
    """
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return scipy.signal.lfilter(num, den, x)


def gram(psi):
    """Symmetric Gram matrix ``psi.T @ psi`` of an (N, d) gradient block.

    Uses einsum with default (non-BLAS) dispatch so the per-call result is
    a fixed-order summation, independent of BLAS threading.
    """
    psi = np.ascontiguousarray(psi, dtype=np.float64)
    out = np.einsum("ki,kj->ij", psi, psi)
    return 0.5 * (out + out.T)
