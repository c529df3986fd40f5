"""Asymptotic Cramer-Rao bounds for the joint estimation of power-system
electromechanical modes and forced-oscillation parameters.

Layers:

* :mod:`focrb.sigcore`      polynomials, filtering, spectra, pole/mode maps
* :mod:`focrb.sysmodel`     ARMAX systems, FO definitions, synthesis, calibration
* :mod:`focrb.fisher`       gradients, Monte-Carlo Fisher, CRB matrices
* :mod:`focrb.propagation`  mode and output-FO covariance propagation
* :mod:`focrb.scenarios`    scenario/sweep engine and CSV output
* :mod:`focrb.cli`          the ``crb`` command

The hot kernels run on a compiled extension when available; see
:mod:`focrb._backend`.
"""

from ._backend import BACKEND_NAME
from .sigcore import Mode, Pole, Polynomial
from .sysmodel import ArmaxSystem, FoSpec, default_system

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "Polynomial",
    "Mode",
    "Pole",
    "ArmaxSystem",
    "FoSpec",
    "default_system",
    "__version__",
]
