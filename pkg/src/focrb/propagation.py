"""First-order propagation of the parameter CRB to derived quantities:
mode frequency/damping from the AR block, and output-FO amplitude/phase
from the transient-case parameters via the output-FO phasor.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import sigcore, sysmodel
from .fisher import CASE1, CASE2, CrbMatrix
from .sigcore import Mode
from .sysmodel import ArmaxSystem, FoSpec

__all__ = [
    "ModeCrb",
    "FoPhasor",
    "crb_modes",
    "crb_fo_case1",
    "jacobian_X",
    "crb_fo_case2",
]


@dataclass(frozen=True)
class ModeCrb:
    """Variance bounds for one mode's frequency (Hz^2) and damping (%^2)."""

    mode: Mode
    var_freq: float
    var_damp: float
    covar: float

    def __post_init__(self):
        if self.var_freq < 0 or self.var_damp < 0:
            raise ValueError("propagated variances must be non-negative")
        bound = math.sqrt(self.var_freq * self.var_damp)
        if abs(self.covar) > bound * (1 + 1e-9) + 1e-300:
            raise ValueError("covariance violates Cauchy-Schwarz")


@dataclass(frozen=True)
class FoPhasor:
    """Rectangular form of the output FO, ``alpha + j beta = A1 e^{j phi1}``."""

    alpha: float
    beta: float

    @classmethod
    def from_polar(cls, amplitude: float, phase_rad: float) -> "FoPhasor":
        return cls(alpha=amplitude * math.cos(phase_rad),
                   beta=amplitude * math.sin(phase_rad))

    def to_polar(self) -> tuple[float, float]:
        return (math.hypot(self.alpha, self.beta),
                math.atan2(self.beta, self.alpha))


def _clip_variance(v: float, scale: float) -> float:
    """Zero out roundoff-negative variances; genuine negatives are bugs."""
    if v < -1e-10 * max(scale, 1e-300):
        raise ValueError(f"propagated variance is negative: {v}")
    return max(v, 0.0)


def mode_jacobian(a, fs: float, pole: complex) -> np.ndarray:
    """Rows d(frequency Hz)/da_j and d(damping %)/da_j at one pole.

    Chain: dp/da_j = -p^(na-j)/P'(p) on the monic z-image P, then
    lambda = fs log p with dlambda/dp = fs/p, then the real maps
    f = Im(lambda)/2pi and zeta% = -100 Re(lambda)/|lambda|.
    """
    coeffs = a.asarray() if isinstance(a, sigcore.Polynomial) else \
        np.asarray(a, float)
    na = coeffs.size - 1
    dP = np.polyder(coeffs)      # derivative of z^na + a1 z^(na-1) + ...
    dP_at = np.polyval(dP, pole)
    scale = max(1.0, abs(pole)) ** max(na - 1, 0)
    if abs(dP_at) < 1e-9 * scale:
        raise ValueError("Jacobian singular: repeated pole")
    lam = fs * cmath.log(pole)
    if lam == 0:
        raise ValueError("degenerate pole at z=1")
    x, y = lam.real, lam.imag
    r3 = abs(lam) ** 3

    jac = np.empty((2, na))
    for j in range(1, na + 1):
        dp = -pole ** (na - j) / dP_at
        dlam = fs * dp / pole
        jac[0, j - 1] = dlam.imag / (2.0 * math.pi)
        jac[1, j - 1] = (-100.0 * y * y * dlam.real
                        + 100.0 * x * y * dlam.imag) / r3
    return jac


def crb_modes(crb_ar_block: np.ndarray, a, fs: float) -> list[ModeCrb]:
    """Propagate an AR-coefficient covariance to per-mode bounds.

    One entry per conjugate pole pair (reported once, keyed by the
    non-negative-frequency member) and per real pole, in the deterministic
    root order.
    """
    coeffs = a.asarray() if isinstance(a, sigcore.Polynomial) else \
        np.asarray(a, float)
    na = coeffs.size - 1
    block = np.asarray(crb_ar_block, float)
    if block.shape != (na, na):
        raise ValueError("AR covariance block has the wrong shape")

    out = []
    for pole in sigcore.roots(coeffs):
        if pole.imag < 0:        # conjugate partner of an emitted pole
            continue
        mode = sigcore.mode_from_pole(sigcore.Pole(pole, fs))
        jac = mode_jacobian(coeffs, fs, pole)
        cov2 = jac @ block @ jac.T
        scale = float(np.max(np.abs(cov2)))
        out.append(ModeCrb(mode=mode,
                           var_freq=_clip_variance(cov2[0, 0], scale),
                           var_damp=_clip_variance(cov2[1, 1], scale),
                           covar=float(cov2[0, 1])))
    return out


def crb_fo_case1(crb: CrbMatrix) -> tuple[float, float, float]:
    """FO-parameter variances in the steady-state case: the final three
    diagonal entries (amplitude, phase, radian frequency)."""
    if crb.case != CASE1:
        raise ValueError(f"expected a case1 CRB, got {crb.case}")
    d = np.diag(crb.matrix)
    return float(d[-3]), float(d[-2]), float(d[-1])


def jacobian_X(sys: ArmaxSystem, fo_in: FoSpec) -> np.ndarray:
    """Complex derivative of the output-FO phasor w.r.t. the transient-case
    parameter vector.

    ``X = (B/A)(omega) * amp * e^{j phase}``; the frequency entry is the
    quotient-rule derivative with dA/domega = -j sum i a_i e^{-j i omega}
    (and likewise for B).
    """
    if fo_in.reference != "input":
        raise ValueError("jacobian_X needs an input-referenced FO")
    na, nb, nc = sys.orders
    omega = fo_in.omega
    aw = sigcore.eval_at_frequency(sys.a, omega)
    if aw == 0:
        raise ValueError("AR polynomial vanishes at the FO frequency")
    bw = sigcore.eval_at_frequency(sys.b, omega)
    daw = sigcore.eval_dcoeff_frequency(sys.a, omega)
    dbw = sigcore.eval_dcoeff_frequency(sys.b, omega)
    s = fo_in.amplitude * cmath.exp(1j * fo_in.phase_rad)

    jac = np.zeros(na + nb + 1 + nc + 3, dtype=complex)
    for i in range(1, na + 1):
        jac[i - 1] = -cmath.exp(-1j * i * omega) * bw / aw**2 * s
    for i in range(0, nb + 1):
        jac[na + i] = cmath.exp(-1j * i * omega) / aw * s
    # MA entries are exactly zero: X does not depend on the noise shaping
    jac[-3] = bw / aw * cmath.exp(1j * fo_in.phase_rad)
    jac[-2] = bw / aw * 1j * s
    jac[-1] = (dbw * aw - daw * bw) / aw**2 * s
    return jac


def crb_fo_case2(crb: CrbMatrix, sys: ArmaxSystem,
                 fo_in: FoSpec) -> tuple[float, float, float]:
    """Output-FO variances in the transient case.

    The parameter vector holds the input FO, so amplitude/phase bounds
    come from two chained linearizations: theta -> (alpha, beta) via the
    phasor Jacobian, then (alpha, beta) -> (A1, phi1).  The frequency is a
    primary parameter; its variance is the last diagonal entry.
    """
    if crb.case != CASE2:
        raise ValueError(f"expected a case2 CRB, got {crb.case}")
    if crb.orders != sys.orders:
        raise ValueError("CRB and system orders disagree")
    amp_out, phase_out = sysmodel.output_fo_from_input(sys, fo_in)
    if amp_out == 0:
        raise ValueError("output FO amplitude is zero; phase is undefined")

    jx = jacobian_X(sys, fo_in)
    j_ab = np.vstack([jx.real, jx.imag])
    cov_ab = j_ab @ crb.matrix @ j_ab.T

    cosp, sinp = math.cos(phase_out), math.sin(phase_out)
    j_aphi = np.array([[cosp, sinp],
                       [-sinp / amp_out, cosp / amp_out]])
    cov = j_aphi @ cov_ab @ j_aphi.T
    scale = float(np.max(np.abs(cov)))
    return (_clip_variance(cov[0, 0], scale),
            _clip_variance(cov[1, 1], scale),
            float(crb.matrix[-1, -1]))
