"""ARMAX system and forced-oscillation definitions, signal synthesis,
SNR calibration, and the packaged default system.

Synthesis is deterministic given (system, FO, seed, N).  Noise uses a
counter-based generator (Philox) keyed by a pure function of the seed, so
realizations are reproducible regardless of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from . import sigcore
from .sigcore import Polynomial, burn_in_length, filter_zero_state

__all__ = [
    "ArmaxSystem",
    "FoSpec",
    "NoiseRealization",
    "make_noise",
    "system_burn_in",
    "synth_ambient",
    "synth_case1",
    "synth_case2",
    "output_fo_from_input",
    "input_fo_from_output",
    "calibrate_sigma_local",
    "calibrate_sigma_global",
    "default_system",
    "load_system_file",
    "save_system_file",
]


@dataclass(frozen=True)
class ArmaxSystem:
    """A(q) y = B(q) u + C(q) e with white noise e of variance sigma_e2.

    ``a`` and ``c`` must be monic with all roots strictly inside the unit
    circle (stable AR, invertible MA); ``b`` is unconstrained.
    """

    a: Polynomial
    b: Polynomial
    c: Polynomial
    sigma_e2: float
    fs: float

    def __post_init__(self):
        if not self.a.is_monic:
            raise ValueError("AR polynomial must be monic")
        if not self.c.is_monic:
            raise ValueError("MA polynomial must be monic")
        if self.sigma_e2 <= 0:
            raise ValueError("noise variance must be positive")
        if self.fs <= 0:
            raise ValueError("sample rate must be positive")
        for name, poly in (("AR", self.a), ("MA", self.c)):
            if poly.degree >= 1:
                radius = max(abs(z) for z in sigcore.roots(poly))
                if radius >= 1.0:
                    raise ValueError(f"{name} polynomial has a root at or "
                                     f"outside the unit circle (|z|={radius:.6f})")

    def with_sigma(self, sigma_e2: float) -> "ArmaxSystem":
        return ArmaxSystem(self.a, self.b, self.c, sigma_e2, self.fs)

    @property
    def orders(self) -> tuple[int, int, int]:
        return (self.a.degree, self.b.degree, self.c.degree)


@dataclass(frozen=True)
class FoSpec:
    """One cosine disturbance: amplitude, phase, radian frequency, span.

    ``reference`` records whether amplitude/phase describe the input u or
    the output steady-state component of y.
    """

    amplitude: float
    phase_rad: float
    omega: float
    start: float = 0.0
    stop: float = math.inf
    reference: str = "input"

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("FO amplitude must be >= 0")
        if not 0.0 < self.omega < math.pi:
            raise ValueError("FO frequency must lie strictly inside (0, pi) "
                             "radians/sample")
        if self.start > self.stop:
            raise ValueError("FO start must not exceed stop")
        if self.reference not in ("input", "output"):
            raise ValueError("reference must be 'input' or 'output'")


@dataclass(frozen=True)
class NoiseRealization:
    """A reproducible white-noise record of length N + burn-in."""

    samples: np.ndarray = field(repr=False)
    seed: object

    def __post_init__(self):
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("noise contains non-finite samples")


@lru_cache(maxsize=256)
def system_burn_in(sys: ArmaxSystem) -> int:
    """Samples needed for all AR/MA transients to decay below 1e-12.

    Floored at a few filter orders so shifted-column indexing in gradient
    construction always stays inside the extended record.
    """
    radius = 0.0
    for poly in (sys.a, sys.c):
        if poly.degree >= 1:
            radius = max(radius, max(abs(z) for z in sigcore.roots(poly)))
    k = burn_in_length(radius) if radius > 0 else 0
    na, nb, nc = sys.orders
    return max(k, 2 * (na + nb + nc), 16)


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def make_noise(sys: ArmaxSystem, n: int, seed) -> NoiseRealization:
    """Draw e ~ N(0, sigma_e2) of length n + burn-in for this system.

    ``seed`` may be an int or a tuple of ints; identical seeds give
    bit-identical samples.
    """
    if n <= 0:
        raise ValueError("record length must be positive")
    total = n + system_burn_in(sys)
    samples = _rng(seed).standard_normal(total) * math.sqrt(sys.sigma_e2)
    return NoiseRealization(samples=samples, seed=seed)


def _check_noise(sys: ArmaxSystem, e: NoiseRealization, n: int) -> np.ndarray:
    need = n + system_burn_in(sys)
    if e.samples.size != need:
        raise ValueError(f"noise record has {e.samples.size} samples, "
                         f"expected {need} for N={n}")
    return e.samples


def ambient_ext(sys: ArmaxSystem, e_samples: np.ndarray) -> np.ndarray:
    """(C/A)-filtered noise over the full burn-in-extended record."""
    return filter_zero_state(sys.c, sys.a, e_samples)


def synth_ambient(sys: ArmaxSystem, e: NoiseRealization, n: int) -> np.ndarray:
    """Stationary ARMA output: last n samples of the burned-in filter."""
    samples = _check_noise(sys, e, n)
    return ambient_ext(sys, samples)[-n:]


def _require_reference(fo: FoSpec, reference: str):
    if fo.reference != reference:
        raise ValueError(f"FO must be {reference}-referenced, "
                         f"got {fo.reference}-referenced")


def output_fo_from_input(sys: ArmaxSystem, fo_in: FoSpec) -> tuple[float, float]:
    """Steady-state output amplitude and phase of an input-referenced FO.

    ``A1 = |B/A| * amp_in`` and ``phi1 = phase_in + angle(B) - angle(A)``,
    wrapped to (-pi, pi].
    """
    _require_reference(fo_in, "input")
    aw = sigcore.eval_at_frequency(sys.a, fo_in.omega)
    bw = sigcore.eval_at_frequency(sys.b, fo_in.omega)
    if aw == 0:
        raise ValueError("AR polynomial vanishes at the FO frequency")
    h = bw / aw
    amp = abs(h) * fo_in.amplitude
    phase = _wrap_phase(fo_in.phase_rad + math.atan2(h.imag, h.real))
    return amp, phase


def input_fo_from_output(sys: ArmaxSystem, amp: float, phase: float,
                         omega: float) -> FoSpec:
    """Back-solve the input FO that produces a given steady-state output FO."""
    aw = sigcore.eval_at_frequency(sys.a, omega)
    bw = sigcore.eval_at_frequency(sys.b, omega)
    # relative tolerance: the X polynomial may have exact unit-circle zeros
    # that land on rounding noise when evaluated
    if abs(bw) <= 1e-12 * (1.0 + sum(abs(v) for v in sys.b.coeffs)):
        raise ValueError("FO unobservable through X polynomial at this "
                         "frequency")
    h = bw / aw
    return FoSpec(amplitude=amp / abs(h),
                  phase_rad=_wrap_phase(phase - math.atan2(h.imag, h.real)),
                  omega=omega, start=0, stop=math.inf, reference="input")


def _wrap_phase(phi: float) -> float:
    """Wrap to (-pi, pi]."""
    out = math.fmod(phi + math.pi, 2.0 * math.pi)
    if out <= 0.0:
        out += 2.0 * math.pi
    return out - math.pi


def fo_cosine(fo: FoSpec, k: np.ndarray) -> np.ndarray:
    """The FO waveform ``amp cos(omega k + phase)`` gated by [start, stop]."""
    wave = fo.amplitude * np.cos(fo.omega * k + fo.phase_rad)
    gate = (k >= fo.start) & (k <= fo.stop)
    return np.where(gate, wave, 0.0)


def synth_case1_ext(sys: ArmaxSystem, fo_out: FoSpec,
                    e_samples: np.ndarray, n: int) -> np.ndarray:
    """Steady-state-FO output over the extended record (k = -K .. n-1).

    The cosine is present throughout, including the burn-in region, since
    a steady-state FO predates the observation window.
    """
    k_burn = e_samples.size - n
    k = np.arange(-k_burn, n, dtype=np.float64)
    cos_part = fo_out.amplitude * np.cos(fo_out.omega * k + fo_out.phase_rad)
    return cos_part + ambient_ext(sys, e_samples)


def synth_case1(sys: ArmaxSystem, fo_out: FoSpec, e: NoiseRealization,
                n: int) -> np.ndarray:
    """Output with only the steady-state FO response plus ambient noise."""
    _require_reference(fo_out, "output")
    if fo_out.start > 0 or fo_out.stop < n - 1:
        raise ValueError("case-1 FO must span the whole record")
    samples = _check_noise(sys, e, n)
    return synth_case1_ext(sys, fo_out, samples, n)[-n:]


def synth_case2_ext(sys: ArmaxSystem, fo_in: FoSpec,
                    e_samples: np.ndarray, n: int) -> np.ndarray:
    """Transient-plus-steady-state FO output over the extended record.

    Ambient noise is stationary (burned in); the FO input switches on at
    k = 0 and is filtered through B/A with zero initial state, so the
    onset transient is retained.
    """
    k_burn = e_samples.size - n
    u = fo_in.amplitude * np.cos(fo_in.omega * np.arange(n, dtype=np.float64)
                                 + fo_in.phase_rad)
    fo_part = np.zeros(e_samples.size)
    fo_part[k_burn:] = filter_zero_state(sys.b, sys.a, u)
    return fo_part + ambient_ext(sys, e_samples)


def synth_case2(sys: ArmaxSystem, fo_in: FoSpec, e: NoiseRealization,
                n: int) -> np.ndarray:
    """Output including the FO startup transient (FO begins at sample 0)."""
    _require_reference(fo_in, "input")
    if fo_in.start != 0 or fo_in.stop < n - 1:
        raise ValueError("case-2 FO must start at sample 0 and span the record")
    samples = _check_noise(sys, e, n)
    return synth_case2_ext(sys, fo_in, samples, n)[-n:]


def calibrate_sigma_local(sys: ArmaxSystem, fo_out: FoSpec,
                          snr_db: float) -> float:
    """Noise variance giving a target SNR against the ambient PSD at the
    FO frequency: ``snr = (A1^2/2) / (sigma_e2 |C/A|^2)``."""
    _require_reference(fo_out, "output")
    aw = sigcore.eval_at_frequency(sys.a, fo_out.omega)
    cw = sigcore.eval_at_frequency(sys.c, fo_out.omega)
    if aw == 0:
        raise ValueError("AR polynomial vanishes at the FO frequency")
    gain2 = (abs(cw) / abs(aw)) ** 2
    return (fo_out.amplitude ** 2 / 2.0) / gain2 * 10.0 ** (-snr_db / 10.0)


def calibrate_sigma_global(sys: ArmaxSystem, fo_out: FoSpec,
                           snr_db: float) -> float:
    """Noise variance giving a target SNR against the total ambient
    process variance (variance scales linearly in sigma_e2, so the
    solution is closed form)."""
    _require_reference(fo_out, "output")
    unit_var = sigcore.arma_variance(sys.with_sigma(1.0))
    return (fo_out.amplitude ** 2 / 2.0) / unit_var * 10.0 ** (-snr_db / 10.0)


# ---------------------------------------------------------------------------
# system coefficient files


def load_system_file(path_or_text) -> ArmaxSystem:
    """Parse the plain-text coefficient format.

    Section headers ``A``, ``B``, ``C``, ``sigma_e2``, ``fs`` each start a
    block; every following line holds one number.  ``#`` starts a comment.
    """
    if hasattr(path_or_text, "read"):
        text = path_or_text.read()
    else:
        with open(path_or_text, "r", encoding="utf-8") as fh:
            text = fh.read()
    sections: dict[str, list[float]] = {}
    current: list[float] | None = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("A", "B", "C", "sigma_e2", "fs"):
            current = sections.setdefault(line, [])
            continue
        if current is None:
            raise ValueError(f"value before any section header: {line!r}")
        try:
            current.append(float(line))
        except ValueError as exc:
            raise ValueError(f"bad coefficient line {line!r}") from exc
    missing = [s for s in ("A", "B", "C", "sigma_e2", "fs") if s not in sections]
    if missing:
        raise ValueError(f"system file missing sections: {', '.join(missing)}")
    for scalar in ("sigma_e2", "fs"):
        if len(sections[scalar]) != 1:
            raise ValueError(f"section {scalar} must hold exactly one value")
    return ArmaxSystem(a=Polynomial(sections["A"]),
                       b=Polynomial(sections["B"]),
                       c=Polynomial(sections["C"]),
                       sigma_e2=sections["sigma_e2"][0],
                       fs=sections["fs"][0])


def save_system_file(sys: ArmaxSystem, path) -> None:
    """Write a system in the plain-text coefficient format."""
    lines = []
    for name, poly in (("A", sys.a), ("B", sys.b), ("C", sys.c)):
        lines.append(name)
        lines.extend(repr(v) for v in poly.coeffs)
    lines.append("sigma_e2")
    lines.append(repr(sys.sigma_e2))
    lines.append("fs")
    lines.append(repr(sys.fs))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


@lru_cache(maxsize=1)
def default_system() -> ArmaxSystem:
    """The packaged order-(10, 1, 10) system at 3 samples/s.

    Its AR polynomial places one lightly damped conjugate pair at
    0.372 Hz / 4.67 % (the monitored mode) among four well-damped pairs,
    so the ambient PSD peaks at the monitored mode.  Coefficients are
    frozen in ``focrb/data/default_system.txt``; see
    ``scripts/make_default_system.py`` for their construction.
    """
    ref = resources.files("focrb.data").joinpath("default_system.txt")
    with ref.open("r", encoding="utf-8") as fh:
        return load_system_file(fh)
