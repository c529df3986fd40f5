import math

import pytest

from focrb.sigcore import Polynomial
from focrb.sysmodel import ArmaxSystem, FoSpec


@pytest.fixture(scope="session")
def white_system():
    """Degenerate system: output is a pure sinusoid in white noise."""
    return ArmaxSystem(Polynomial([1.0]), Polynomial([1.0]),
                       Polynomial([1.0]), 0.01, 3.0)


@pytest.fixture(scope="session")
def arma21_system():
    """Small ARMA(2,1) with a lightly damped pair at |p| = 0.837."""
    return ArmaxSystem(Polynomial([1.0, -1.5, 0.7]), Polynomial([1.0, 0.5]),
                       Polynomial([1.0, 0.4]), 1.0, 3.0)


@pytest.fixture(scope="session")
def surrogate():
    from focrb.sysmodel import default_system
    return default_system()


def fo_output(amp=1.0, phase=0.8, omega=2.0 * math.pi * 0.353 / 3.0):
    return FoSpec(amplitude=amp, phase_rad=phase, omega=omega,
                  start=-math.inf, stop=math.inf, reference="output")


def fo_input(amp=1.0, phase=0.8, omega=2.0 * math.pi * 0.353 / 3.0):
    return FoSpec(amplitude=amp, phase_rad=phase, omega=omega,
                  start=0, stop=math.inf, reference="input")
