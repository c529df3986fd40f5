"""Scenario engine: single-point CRB runs, parameter sweeps, and PSD
export, with flat key-value config files and CSV output.

Seeding: every sweep point gets the seed tuple ``(base_seed, point_index)``
and each Monte-Carlo trial within it extends that tuple by the trial
index, so any point (and any trial) is individually reproducible and the
CSV is bit-identical for a given config regardless of thread count.
Both measurement cases at a point share the point seed, which keeps their
comparison free of independent sampling noise.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import fisher, propagation, sigcore, sysmodel
from .fisher import AMBIENT, CASE1, CASE2, FisherConditionError
from .sysmodel import ArmaxSystem, FoSpec

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "CrbReport",
    "CSV_COLUMNS",
    "DEFAULT_SWEEP_VALUES",
    "parse_config_text",
    "make_config",
    "config_text",
    "load_system",
    "run_point",
    "run_sweep",
    "emit_psd",
    "rows_to_csv",
    "psd_to_csv",
]


class ConfigError(ValueError):
    """Invalid scenario configuration."""


DEFAULT_SWEEP_VALUES = {
    "freq": tuple(round(0.05 * i, 2) for i in range(1, 30)),      # Hz
    "snr": (0.0, 5.0, 9.5, 15.0, 20.0, 30.0, 40.0),               # dB
    "length": (1350, 2700, 5400, 10800),                          # samples
}


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario: system source, FO (output-referenced), SNR target,
    record/trial counts, and an optional sweep axis."""

    system: str = "surrogate"
    case: str = "both"              # 1 | 2 | both
    fo_amp: float = 1.0
    fo_phase_rad: float = 0.8
    fo_freq_hz: float = 0.353
    snr_db: float = 9.5
    snr_mode: str = "global"        # local | global
    sweep: str = "none"             # none | freq | snr | length
    sweep_values: tuple = ()
    samples: int = 5400
    trials: int = 1000
    seed: int = 0
    threads: int = 1


_INT_KEYS = {"samples", "trials", "seed", "threads"}
_FLOAT_KEYS = {"fo_amp", "fo_phase_rad", "fo_freq_hz", "snr_db"}
_STR_KEYS = {"system", "case", "snr_mode", "sweep"}


def parse_config_text(text: str) -> dict:
    """Parse the flat ``key = value`` format; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    return values


def _coerce(key: str, val):
    if isinstance(val, str):
        try:
            if key in _INT_KEYS:
                return int(val)
            if key in _FLOAT_KEYS:
                return float(val)
            if key == "sweep_values":
                parts = [p for p in val.replace(",", " ").split() if p]
                return tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {val!r}") from None
    return val


def make_config(file_values: dict | None = None,
                overrides: dict | None = None) -> ScenarioConfig:
    """Build a validated config; override values win over file values."""
    known = {f.name for f in fields(ScenarioConfig)}
    merged: dict = {}
    for source in (file_values or {}), (overrides or {}):
        for key, val in source.items():
            if val is None:
                continue
            if key not in known:
                raise ConfigError(f"unknown config key: {key}")
            merged[key] = _coerce(key, val)
    cfg = ScenarioConfig(**merged)

    if cfg.case not in ("1", "2", "both"):
        raise ConfigError("case must be 1, 2 or both")
    if cfg.snr_mode not in ("local", "global"):
        raise ConfigError("snr_mode must be local or global")
    if cfg.sweep not in ("none", "freq", "snr", "length"):
        raise ConfigError("sweep must be none, freq, snr or length")
    if cfg.sweep != "none" and not cfg.sweep_values:
        cfg = replace(cfg, sweep_values=DEFAULT_SWEEP_VALUES[cfg.sweep])
    if cfg.sweep == "none" and cfg.sweep_values:
        raise ConfigError("sweep_values given but sweep = none")
    if cfg.samples <= 0 or cfg.trials <= 0 or cfg.threads <= 0:
        raise ConfigError("samples, trials and threads must be positive")
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    if cfg.fo_amp < 0:
        raise ConfigError("fo_amp must be >= 0")
    if cfg.sweep == "length":
        for v in cfg.sweep_values:
            if v != int(v) or v <= 0:
                raise ConfigError("length sweep values must be positive "
                                  "integers")
    return cfg


def config_text(cfg: ScenarioConfig) -> str:
    """Render a config in the same format the parser accepts."""
    lines = []
    for f in fields(ScenarioConfig):
        val = getattr(cfg, f.name)
        if f.name == "sweep_values":
            val = ",".join(repr(v) for v in val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"


def load_system(cfg: ScenarioConfig) -> ArmaxSystem:
    if cfg.system == "surrogate":
        return sysmodel.default_system()
    try:
        return sysmodel.load_system_file(cfg.system)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load system {cfg.system!r}: {exc}") from exc


def _validate_point(cfg: ScenarioConfig, sys: ArmaxSystem):
    nyquist = sys.fs / 2.0
    if not 0.0 < cfg.fo_freq_hz < nyquist:
        raise ConfigError(f"FO frequency {cfg.fo_freq_hz} Hz outside "
                          f"(0, {nyquist}) Hz")
    worst = fisher.theta_dim(CASE2 if cfg.case in ("2", "both") else CASE1,
                             sys.orders)
    if cfg.samples <= worst:
        raise ConfigError(f"samples = {cfg.samples} must exceed the "
                          f"parameter count {worst}")


@dataclass(frozen=True)
class CrbReport:
    """One result row: scenario coordinates plus square-root bounds."""

    case: str
    fo_freq_hz: float
    fo_amp: float
    fo_phase_rad: float
    snr_db: float
    snr_mode: str
    samples: int
    trials: int
    base_seed: int
    point_index: int
    sigma_e2: float = math.nan
    sqrtcrb_a1: float = math.nan
    sqrtcrb_phi1_rad: float = math.nan
    sqrtcrb_f1_hz: float = math.nan
    sqrtcrb_mode_freq_hz: float = math.nan
    sqrtcrb_mode_damp_pct: float = math.nan
    mode_freq_hz: float = math.nan
    mode_damp_pct: float = math.nan
    fisher_condition: float = math.nan
    wall_s: float = math.nan        # informational; not part of the CSV
    error: str = ""

    def __post_init__(self):
        for name in ("sqrtcrb_a1", "sqrtcrb_phi1_rad", "sqrtcrb_f1_hz",
                     "sqrtcrb_mode_freq_hz", "sqrtcrb_mode_damp_pct"):
            val = getattr(self, name)
            if math.isfinite(val) and val < 0:
                raise ValueError(f"{name} must be non-negative")


# wall_s is excluded: CSV output must be bit-identical across reruns
CSV_COLUMNS = [
    "case", "fo_freq_hz", "fo_amp", "fo_phase_rad", "snr_db", "snr_mode",
    "samples", "trials", "base_seed", "point_index", "sigma_e2",
    "sqrtcrb_a1", "sqrtcrb_phi1_rad", "sqrtcrb_f1_hz",
    "sqrtcrb_mode_freq_hz", "sqrtcrb_mode_damp_pct",
    "mode_freq_hz", "mode_damp_pct", "fisher_condition", "error",
]


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.11e}"           # 12 significant digits


def rows_to_csv(rows, stream):
    stream.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(getattr(row, c)) for c in CSV_COLUMNS)
                     + "\n")


def _monitored_mode(mode_crbs) -> propagation.ModeCrb | None:
    """The least-damped oscillatory mode; None when no pair exists."""
    osc = [m for m in mode_crbs if m.mode.frequency_hz > 0]
    if not osc:
        return None
    return min(osc, key=lambda m: m.mode.damping_pct)


def _case_row(case_tag: str, cfg: ScenarioConfig, sys_cal: ArmaxSystem,
              fo_out: FoSpec | None, point_index: int,
              mc_threads: int = 1) -> CrbReport:
    start = time.perf_counter()
    common = dict(case=case_tag, fo_freq_hz=cfg.fo_freq_hz, fo_amp=cfg.fo_amp,
                  fo_phase_rad=cfg.fo_phase_rad, snr_db=cfg.snr_db,
                  snr_mode=cfg.snr_mode, samples=cfg.samples,
                  trials=cfg.trials, base_seed=cfg.seed,
                  point_index=point_index)
    try:
        if case_tag == CASE1:
            fo = fo_out
        elif case_tag == CASE2:
            fo = sysmodel.input_fo_from_output(
                sys_cal, fo_out.amplitude, fo_out.phase_rad, fo_out.omega)
        else:
            fo = None
        crb = fisher.crb_monte_carlo(case_tag, sys_cal, fo, cfg.samples,
                                     cfg.trials, (cfg.seed, point_index),
                                     threads=mc_threads)
        na = sys_cal.a.degree
        modes = propagation.crb_modes(crb.matrix[:na, :na], sys_cal.a,
                                      sys_cal.fs) if na else []
        mode = _monitored_mode(modes)

        row = dict(common, sigma_e2=sys_cal.sigma_e2,
                   fisher_condition=crb.condition,
                   wall_s=time.perf_counter() - start)
        if mode is not None:
            row.update(sqrtcrb_mode_freq_hz=math.sqrt(mode.var_freq),
                       sqrtcrb_mode_damp_pct=math.sqrt(mode.var_damp),
                       mode_freq_hz=mode.mode.frequency_hz,
                       mode_damp_pct=mode.mode.damping_pct)
        if case_tag == CASE1:
            var_a, var_p, var_w = propagation.crb_fo_case1(crb)
        elif case_tag == CASE2:
            var_a, var_p, var_w = propagation.crb_fo_case2(crb, sys_cal, fo)
        else:
            return CrbReport(**row)
        row.update(sqrtcrb_a1=math.sqrt(var_a),
                   sqrtcrb_phi1_rad=math.sqrt(var_p),
                   sqrtcrb_f1_hz=math.sqrt(var_w) * sys_cal.fs
                   / (2.0 * math.pi))
        return CrbReport(**row)
    except (FisherConditionError, ValueError) as exc:
        return CrbReport(**common, wall_s=time.perf_counter() - start,
                         error=f"{case_tag}: {exc}")


def run_point(cfg: ScenarioConfig, sys: ArmaxSystem | None = None,
              point_index: int = 0, mc_threads: int = 1) -> list[CrbReport]:
    """Run one scenario point; returns one row per requested case.

    Calibrates the noise variance to the configured SNR, back-solves the
    input FO for the transient case, and propagates the parameter CRB to
    mode and FO bounds.  A zero FO amplitude runs the no-FO model (one
    ``ambient`` row, no SNR calibration).  ``mc_threads`` parallelizes the
    Monte-Carlo trials; results are identical for any value.
    """
    if sys is None:
        sys = load_system(cfg)
    _validate_point(cfg, sys)
    omega = 2.0 * math.pi * cfg.fo_freq_hz / sys.fs

    if cfg.fo_amp == 0.0:
        return [_case_row(AMBIENT, cfg, sys, None, point_index, mc_threads)]

    fo_out = FoSpec(amplitude=cfg.fo_amp, phase_rad=cfg.fo_phase_rad,
                    omega=omega, start=-math.inf, stop=math.inf,
                    reference="output")
    if cfg.snr_mode == "local":
        sigma = sysmodel.calibrate_sigma_local(sys, fo_out, cfg.snr_db)
    else:
        sigma = sysmodel.calibrate_sigma_global(sys, fo_out, cfg.snr_db)
    sys_cal = sys.with_sigma(sigma)

    cases = {"1": [CASE1], "2": [CASE2], "both": [CASE1, CASE2]}[cfg.case]
    return [_case_row(tag, cfg, sys_cal, fo_out, point_index, mc_threads)
            for tag in cases]


def _point_config(cfg: ScenarioConfig, value) -> ScenarioConfig:
    if cfg.sweep == "freq":
        return replace(cfg, fo_freq_hz=float(value))
    if cfg.sweep == "snr":
        return replace(cfg, snr_db=float(value))
    return replace(cfg, samples=int(value))


def run_sweep(cfg: ScenarioConfig,
              sys: ArmaxSystem | None = None) -> list[CrbReport]:
    """Run every sweep point; rows appear in sweep order.

    A failing point contributes rows with the error column set and the
    sweep continues.  Points are independent work units; with
    ``cfg.threads > 1`` they run concurrently.
    """
    if cfg.sweep == "none":
        raise ConfigError("run_sweep requires a sweep axis")
    if sys is None:
        sys = load_system(cfg)
    point_cfgs = [_point_config(cfg, v) for v in cfg.sweep_values]
    for pc in point_cfgs:
        _validate_point(pc, sys)

    def work(item):
        index, pc = item
        try:
            return run_point(pc, sys, point_index=index)
        except (FisherConditionError, ValueError) as exc:
            return [CrbReport(case=pc.case, fo_freq_hz=pc.fo_freq_hz,
                              fo_amp=pc.fo_amp, fo_phase_rad=pc.fo_phase_rad,
                              snr_db=pc.snr_db, snr_mode=pc.snr_mode,
                              samples=pc.samples, trials=pc.trials,
                              base_seed=pc.seed, point_index=index,
                              error=str(exc))]

    items = list(enumerate(point_cfgs))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            per_point = list(pool.map(work, items))
    else:
        per_point = [work(item) for item in items]
    return [row for rows in per_point for row in rows]


def emit_psd(cfg: ScenarioConfig, sys: ArmaxSystem | None = None,
             points: int = 2048) -> np.ndarray:
    """Ambient PSD on a uniform grid over [0, fs/2): columns (Hz, PSD).

    Uses the system's stored noise variance; the spectral shape is what
    matters for inspection, and SNR calibration is a per-scenario concern.
    """
    if sys is None:
        sys = load_system(cfg)
    freqs = np.arange(points) * (sys.fs / 2.0) / points
    omegas = 2.0 * math.pi * freqs / sys.fs
    psd = np.array([sigcore.arma_psd(sys, w) for w in omegas])
    return np.column_stack([freqs, psd])


def psd_to_csv(table: np.ndarray, stream):
    stream.write("freq_hz,psd\n")
    for freq, val in table:
        stream.write(f"{freq:.11e},{val:.11e}\n")
