"""Numeric kernel backends.

Two interchangeable implementations of the hot kernels (zero-state IIR
filtering and gradient Gram accumulation):

* ``_core`` -- Cython extension, built at install time when a compiler is
  available.  Plain C loops, no BLAS, so results do not depend on thread
  count or BLAS vendor.
* ``pure``  -- scipy/numpy fallback with identical semantics.

The compiled backend is preferred.  Set ``FOCRB_BACKEND=pure`` or
``FOCRB_BACKEND=compiled`` to force a choice (the latter raises if the
extension is missing).
"""

import os

from . import pure

_requested = os.environ.get("FOCRB_BACKEND", "").strip().lower()

_compiled = None
if _requested != "pure":
    try:
        from . import _core as _compiled
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "FOCRB_BACKEND=compiled but the focrb._backend._core "
                "extension is not built; reinstall with a C compiler or "
                "unset FOCRB_BACKEND"
            )

if _compiled is not None:
    BACKEND_NAME = "compiled"
    lfilter_zero_state = _compiled.lfilter_zero_state
    gram = _compiled.gram
else:
    BACKEND_NAME = "pure"
    lfilter_zero_state = pure.lfilter_zero_state
    gram = pure.gram

__all__ = ["BACKEND_NAME", "lfilter_zero_state", "gram", "pure"]
