"""Delay-operator polynomials, IIR filtering, spectra, and pole/mode maps.

Everything here is a pure function of its inputs; no interior mutability,
so values can be shared freely across threads.

Conventions
-----------
* A polynomial ``P(q) = c0 + c1 q^-1 + ... + cn q^-n`` is stored as the
  coefficient list ``[c0, c1, ..., cn]``.
* Frequencies are radians/sample internally; Hz appears only at the edges
  (mode frequencies, CLI).
* Power spectral densities are two-sided with no sample-rate scaling:
  ``S(w) = sigma_e^2 |C(w)|^2 / |A(w)|^2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._backend import lfilter_zero_state

__all__ = [
    "Polynomial",
    "Mode",
    "Pole",
    "eval_at_frequency",
    "eval_dcoeff_frequency",
    "roots",
    "mode_from_pole",
    "pole_from_mode",
    "burn_in_length",
    "filter_zero_state",
    "filter_steady_state",
    "arma_psd",
    "arma_variance",
]

#: decay level that defines "transient has died out" for burn-in choices
BURN_IN_TOL = 1e-12

#: hard cap on burn-in length; beyond this the pole is too close to the
#: unit circle for steady-state filtering to be meaningful
BURN_IN_CAP = 10**6


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial in the delay operator, ``coeffs[i]`` multiplying q^-i."""

    coeffs: tuple

    def __init__(self, coeffs: Sequence[float]):
        c = tuple(float(v) for v in coeffs)
        if not c:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return self.coeffs[0] == 1.0

    def asarray(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=np.float64)


@dataclass(frozen=True)
class Mode:
    """Oscillatory mode: frequency in Hz and damping ratio in percent."""

    frequency_hz: float
    damping_pct: float

    def __post_init__(self):
        if self.frequency_hz < 0:
            raise ValueError("mode frequency must be >= 0")
        if not -100.0 <= self.damping_pct <= 100.0:
            raise ValueError("damping must be within [-100, 100] percent")


@dataclass(frozen=True)
class Pole:
    """Discrete-time pole together with the sample rate it belongs to."""

    value: complex
    fs: float

    def __post_init__(self):
        if self.value == 0:
            raise ValueError("pole at the origin has no continuous-time image")
        if self.fs <= 0:
            raise ValueError("sample rate must be positive")


def _coeff_array(p) -> np.ndarray:
    if isinstance(p, Polynomial):
        return p.asarray()
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("coefficients must be a non-empty 1-D sequence")
    return arr


def eval_at_frequency(poly, omega: float) -> complex:
    """Evaluate ``sum_i c_i exp(-j i omega)`` at a radian frequency."""
    c = _coeff_array(poly)
    i = np.arange(c.size)
    return complex(np.sum(c * np.exp(-1j * i * omega)))


def eval_dcoeff_frequency(poly, omega: float) -> complex:
    """Frequency derivative ``d/domega sum_i c_i exp(-j i omega)``.

    Equals ``-j * sum_i i c_i exp(-j i omega)``; the i = 0 term vanishes.
    """
    c = _coeff_array(poly)
    i = np.arange(c.size)
    return complex(-1j * np.sum(i * c * np.exp(-1j * i * omega)))


def _companion(monic_z: np.ndarray) -> np.ndarray:
    """Companion matrix of ``z^n + c1 z^(n-1) + ... + cn``."""
    n = monic_z.size - 1
    m = np.zeros((n, n), dtype=np.float64)
    m[0, :] = -monic_z[1:]
    if n > 1:
        m[np.arange(1, n), np.arange(0, n - 1)] = 1.0
    return m


def _order_roots(vals: np.ndarray) -> list[complex]:
    """Deterministic root ordering: conjugate pairs adjacent (positive-
    imaginary member first), groups sorted by descending imaginary part of
    the representative, ties by descending real part."""
    scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
    tol = 1e-10 * scale
    reals = [complex(v.real, 0.0) for v in vals if abs(v.imag) <= tol]
    pos = sorted((complex(v) for v in vals if v.imag > tol),
                 key=lambda z: (-z.imag, -z.real))
    neg = sorted((complex(v) for v in vals if v.imag < -tol),
                 key=lambda z: (z.imag, -z.real))

    groups: list[tuple[complex, list[complex]]] = []
    unmatched_neg = list(neg)
    for z in pos:
        if unmatched_neg:
            j = min(range(len(unmatched_neg)),
                    key=lambda idx: abs(unmatched_neg[idx] - z.conjugate()))
            unmatched_neg.pop(j)
            groups.append((z, [z, z.conjugate()]))
        else:
            groups.append((z, [z, z.conjugate()]))
    for z in unmatched_neg:  # numerically possible only for near-real pairs
        groups.append((complex(z.real, 0.0), [complex(z.real, 0.0)]))
    for r in reals:
        groups.append((r, [r]))

    groups.sort(key=lambda g: (-g[0].imag, -g[0].real))
    out: list[complex] = []
    for _, members in groups:
        out.extend(members)
    return out


def roots(poly) -> list[complex]:
    """All roots of the z-domain image of a monic delay polynomial.

    For ``1 + c1 q^-1 + ... + cn q^-n`` these are the roots of
    ``z^n + c1 z^(n-1) + ... + cn``, found as companion-matrix eigenvalues.
    Conjugate pairs are returned adjacent and exactly conjugate.
    """
    c = _coeff_array(poly)
    if c.size < 2:
        raise ValueError("degree-0 polynomial has no roots")
    if c[0] == 0:
        raise ValueError("leading coefficient must be nonzero")
    monic = c / c[0]
    # strip trailing zero coefficients: they contribute roots at z = 0
    nz = np.nonzero(monic)[0][-1]
    zero_roots = [0j] * (monic.size - 1 - nz)
    monic = monic[: nz + 1]
    vals = np.linalg.eigvals(_companion(monic)) if monic.size > 1 else np.array([])
    return _order_roots(np.concatenate([vals, np.zeros(len(zero_roots), complex)]))


def mode_from_pole(p: Pole) -> Mode:
    """Map a discrete pole to (frequency Hz, damping %).

    Uses the principal branch of ``lambda = fs log p``; frequency is
    ``Im(lambda)/2pi`` and damping is ``-100 Re(lambda)/|lambda|``.
    """
    if p.value == 0:
        raise ValueError("pole at the origin has no continuous-time image")
    lam = p.fs * cmath.log(complex(p.value))
    if lam == 0:
        raise ValueError("degenerate pole at z=1")
    freq = lam.imag / (2.0 * math.pi)
    damp = -100.0 * lam.real / abs(lam)
    return Mode(frequency_hz=abs(freq), damping_pct=damp)


def pole_from_mode(m: Mode, fs: float) -> Pole:
    """Inverse of :func:`mode_from_pole` (upper-half-plane member of a pair).

    The critically damped case (0 Hz, 100 %) does not pin the decay rate;
    the convention here is a unit decay rate, ``lambda = -1`` rad/s.
    """
    if fs <= 0:
        raise ValueError("sample rate must be positive")
    if m.frequency_hz >= fs / 2.0:
        raise ValueError("mode frequency at or above Nyquist")
    zeta = m.damping_pct / 100.0
    if m.frequency_hz == 0.0:
        if zeta != 1.0:
            raise ValueError(
                "zero-frequency mode is degenerate unless damping is 100 %")
        lam = complex(-1.0, 0.0)
    else:
        if not 0.0 <= zeta < 1.0:
            raise ValueError("damping must be in [0, 100) percent")
        mag = 2.0 * math.pi * m.frequency_hz / math.sqrt(1.0 - zeta * zeta)
        lam = mag * complex(-zeta, math.sqrt(1.0 - zeta * zeta))
    return Pole(value=cmath.exp(lam / fs), fs=fs)


def burn_in_length(max_pole_radius: float,
                   tol: float = BURN_IN_TOL,
                   cap: int = BURN_IN_CAP) -> int:
    """Smallest K with ``max_pole_radius ** K < tol``.

    Raises if the radius is >= 1 or if K would exceed the cap.
    """
    r = float(max_pole_radius)
    if r < 0:
        raise ValueError("pole radius must be >= 0")
    if r == 0.0:
        return 0
    if r >= 1.0:
        raise ValueError("unstable or marginally stable denominator")
    k = int(math.ceil(math.log(tol) / math.log(r)))
    k = max(k, 0)
    if k > cap:
        raise ValueError(
            f"burn-in of {k} samples exceeds the cap of {cap}; "
            "pole radius too close to 1")
    return k


def _max_root_radius(coeffs: np.ndarray) -> float:
    if coeffs.size < 2:
        return 0.0
    return max(abs(z) for z in roots(coeffs))


def filter_zero_state(num, den, x) -> np.ndarray:
    """IIR-filter ``x`` through num/den with zero initial conditions.

    ``y[k] = sum_i num_i x[k-i] - sum_{i>=1} den_i y[k-i]`` with all
    signals zero before k = 0.  ``den`` must be monic.
    """
    b = _coeff_array(num)
    a = _coeff_array(den)
    if a[0] != 1.0:
        raise ValueError("denominator must be monic")
    x = np.asarray(x, dtype=np.float64)
    return lfilter_zero_state(b, a, x)


def filter_steady_state(num, den, gen: Callable[[np.ndarray], np.ndarray],
                        n: int) -> np.ndarray:
    """Steady-state response to a generator defined on all integers.

    The generator is evaluated from ``k = -K`` (K chosen so the slowest
    pole of ``den`` has decayed below 1e-12), filtered with zero initial
    state, and samples ``k = 0 .. n-1`` are returned.  For a sinusoid
    generator this equals the analytic frequency-response sinusoid to
    better than 1e-9.
    """
    b = _coeff_array(num)
    a = _coeff_array(den)
    if a[0] != 1.0:
        raise ValueError("denominator must be monic")
    k_burn = burn_in_length(_max_root_radius(a)) + b.size + a.size
    k = np.arange(-k_burn, n)
    x = np.asarray(gen(k), dtype=np.float64)
    if x.shape != k.shape:
        raise ValueError("generator must return one value per index")
    return lfilter_zero_state(b, a, x)[k_burn:]


def arma_psd(sys, omega: float) -> float:
    """Two-sided ARMA power spectral density ``sigma_e^2 |C/A|^2``."""
    cw = eval_at_frequency(sys.c, omega)
    aw = eval_at_frequency(sys.a, omega)
    return sys.sigma_e2 * (abs(cw) / abs(aw)) ** 2


def arma_variance(sys) -> float:
    """Variance of the stationary ARMA process ``(C/A) e``.

    Computed as ``sigma_e^2 sum_k h[k]^2`` with the impulse response
    truncated once the remaining tail is below 1e-12 of the accumulated
    sum.  Agrees with numerical integration of :func:`arma_psd` over a
    period to 1e-6 relative for pole radii up to 0.99.
    """
    a = _coeff_array(sys.a)
    c = _coeff_array(sys.c)
    r = _max_root_radius(a)
    if r >= 1.0:
        raise ValueError("unstable AR polynomial")
    # start in the geometric-decay regime, then double until the last
    # block's mass certifies the tail is negligible
    length = max(burn_in_length(r, tol=1e-8) if r > 0 else 0, c.size, 64)
    prev_total = None
    for _ in range(40):
        impulse = np.zeros(length)
        impulse[0] = 1.0
        h = filter_zero_state(c, a, impulse)
        total = float(np.dot(h, h))
        if prev_total is not None and total - prev_total <= 1e-12 * total:
            return sys.sigma_e2 * total
        prev_total = total
        if r == 0.0:
            return sys.sigma_e2 * total
        length *= 2
    raise ValueError("impulse-response energy did not converge")
