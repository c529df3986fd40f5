"""Gradient signals, Monte-Carlo Fisher accumulation, and CRB matrices.

The asymptotic bound for a parameter vector theta with one-step predictor
gradient psi is ``Cov(theta_hat) >= (sigma_e^2/N) * Sbar^{-1}`` where
``Sbar = (1/N) sum_k E{psi psi^T}``.  The expectation is approximated by
averaging over M independent noise realizations; trials are independent
work units whose partial Gram matrices are merged in fixed trial order
(compensated summation), so results are bit-identical for any thread
count.

Parameter layouts
-----------------
* steady-state case ("case1"):  a_1..a_na, c_1..c_nc, A1, phi1, omega1
* transient case ("case2"):     a_1..a_na, b_0..b_nb, c_1..c_nc,
                                amp_in, phase_in, omega1
* no FO ("ambient"):            a_1..a_na, c_1..c_nc
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import sigcore, sysmodel
from ._backend import gram as _gram
from .sigcore import filter_steady_state, filter_zero_state
from .sysmodel import ArmaxSystem, FoSpec, make_noise, system_burn_in

__all__ = [
    "CASE1",
    "CASE2",
    "AMBIENT",
    "ThetaCase1",
    "ThetaCase2",
    "GradientMatrix",
    "CrbMatrix",
    "FisherConditionError",
    "theta_dim",
    "theta_names",
    "theta_from_truth",
    "gradients_case1",
    "gradients_case2",
    "predict_one_step",
    "crb_monte_carlo",
    "fisher_semi_analytic",
    "invert_fisher",
]

CASE1 = "case1"
CASE2 = "case2"
AMBIENT = "ambient"

#: refuse to invert averaged Fisher matrices whose equilibrated condition
#: number exceeds this; high-SNR transient-case scenarios genuinely reach
#: ~5e12 (directions informed only by the finite-energy onset transient
#: against N-growing steady-state terms), and double precision keeps
#: several significant digits up to ~1e14
CONDITION_CAP = 1e14


class FisherConditionError(ValueError):
    """Averaged Fisher matrix is singular or too ill-conditioned to invert."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


def _seed_tuple(base_seed) -> tuple[int, ...]:
    """Normalize a seed value to a flat tuple of non-negative ints."""
    if isinstance(base_seed, (tuple, list)):
        parts = tuple(int(v) for v in base_seed)
    else:
        parts = (int(base_seed),)
    if any(v < 0 for v in parts):
        raise ValueError("seed components must be non-negative")
    return parts


def _norm_case(case) -> str:
    aliases = {1: CASE1, 2: CASE2, "1": CASE1, "2": CASE2,
               CASE1: CASE1, CASE2: CASE2, AMBIENT: AMBIENT}
    try:
        return aliases[case]
    except KeyError:
        raise ValueError(f"unknown case tag {case!r}") from None


def theta_dim(case, orders: tuple[int, int, int]) -> int:
    na, nb, nc = orders
    case = _norm_case(case)
    if case == AMBIENT:
        return na + nc
    if case == CASE1:
        return na + nc + 3
    return na + nb + 1 + nc + 3


def theta_names(case, orders: tuple[int, int, int]) -> list[str]:
    na, nb, nc = orders
    case = _norm_case(case)
    names = [f"a{i}" for i in range(1, na + 1)]
    if case == CASE2:
        names += [f"b{i}" for i in range(0, nb + 1)]
    names += [f"c{i}" for i in range(1, nc + 1)]
    if case != AMBIENT:
        names += ["amp", "phase", "omega"]
    return names


@dataclass(frozen=True)
class ThetaCase1:
    """Parameters of the steady-state-FO model, in CRB index order."""

    a: np.ndarray            # a_1..a_na
    c: np.ndarray            # c_1..c_nc
    amplitude: float         # output-referenced
    phase_rad: float
    omega: float

    @property
    def a_full(self) -> np.ndarray:
        return np.concatenate(([1.0], np.asarray(self.a, float)))

    @property
    def c_full(self) -> np.ndarray:
        return np.concatenate(([1.0], np.asarray(self.c, float)))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.c,
                               [self.amplitude, self.phase_rad, self.omega]])

    @classmethod
    def from_vector(cls, vec, na: int, nc: int) -> "ThetaCase1":
        vec = np.asarray(vec, float)
        if vec.size != na + nc + 3:
            raise ValueError("theta vector length mismatch")
        return cls(a=vec[:na].copy(), c=vec[na:na + nc].copy(),
                   amplitude=float(vec[-3]), phase_rad=float(vec[-2]),
                   omega=float(vec[-1]))


@dataclass(frozen=True)
class ThetaCase2:
    """Parameters of the transient-FO model, in CRB index order."""

    a: np.ndarray            # a_1..a_na
    b: np.ndarray            # b_0..b_nb
    c: np.ndarray            # c_1..c_nc
    amplitude: float         # input-referenced
    phase_rad: float
    omega: float

    @property
    def a_full(self) -> np.ndarray:
        return np.concatenate(([1.0], np.asarray(self.a, float)))

    @property
    def c_full(self) -> np.ndarray:
        return np.concatenate(([1.0], np.asarray(self.c, float)))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, self.c,
                               [self.amplitude, self.phase_rad, self.omega]])

    @classmethod
    def from_vector(cls, vec, na: int, nb: int, nc: int) -> "ThetaCase2":
        vec = np.asarray(vec, float)
        if vec.size != na + nb + 1 + nc + 3:
            raise ValueError("theta vector length mismatch")
        return cls(a=vec[:na].copy(), b=vec[na:na + nb + 1].copy(),
                   c=vec[na + nb + 1:na + nb + 1 + nc].copy(),
                   amplitude=float(vec[-3]), phase_rad=float(vec[-2]),
                   omega=float(vec[-1]))


def theta_from_truth(case, sys: ArmaxSystem, fo: FoSpec | None):
    """Assemble the true parameter vector object for a system and FO."""
    case = _norm_case(case)
    a_tail = np.asarray(sys.a.coeffs[1:], float)
    c_tail = np.asarray(sys.c.coeffs[1:], float)
    if case == CASE1:
        if fo is None or fo.reference != "output":
            raise ValueError("case1 needs an output-referenced FO")
        return ThetaCase1(a_tail, c_tail, fo.amplitude, fo.phase_rad, fo.omega)
    if case == CASE2:
        if fo is None or fo.reference != "input":
            raise ValueError("case2 needs an input-referenced FO")
        return ThetaCase2(a_tail, np.asarray(sys.b.coeffs, float), c_tail,
                          fo.amplitude, fo.phase_rad, fo.omega)
    raise ValueError("ambient runs have no FO parameters")


@dataclass(frozen=True)
class GradientMatrix:
    """Per-sample predictor gradients for one realization, (N, dim)."""

    values: np.ndarray = field(repr=False)
    case: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("gradient matrix contains non-finite entries")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CrbMatrix:
    """Parameter CRB with run metadata."""

    matrix: np.ndarray = field(repr=False)
    case: str
    n: int
    m: int
    sigma_e2: float
    condition: float
    orders: tuple[int, int, int]

    def __post_init__(self):
        mat = self.matrix
        scale = np.max(np.abs(mat))
        if scale > 0 and np.max(np.abs(mat - mat.T)) > 1e-10 * scale:
            raise ValueError("CRB matrix is not symmetric")

    def sqrt_diagonal(self) -> np.ndarray:
        return np.sqrt(np.diag(self.matrix))


# ---------------------------------------------------------------------------
# deterministic gradient columns (reused across Monte-Carlo trials)


def _fo_terms(fo, k: np.ndarray, gated: bool):
    cos_t = np.cos(fo.omega * k + fo.phase_rad)
    sin_t = np.sin(fo.omega * k + fo.phase_rad)
    if gated:
        on = k >= 0
        cos_t = np.where(on, cos_t, 0.0)
        sin_t = np.where(on, sin_t, 0.0)
    return cos_t, sin_t


def _det_columns_case1(sys: ArmaxSystem, fo: FoSpec, n: int):
    """Steady-state deterministic pieces of the case-1 gradient.

    Returns ``ss_base`` (the (1/C)-filtered FO cosine on k = -na .. n-1,
    used shifted for the AR columns) and the three FO columns.
    """
    na = sys.a.degree
    amp, phase, omega = fo.amplitude, fo.phase_rad, fo.omega
    one = [1.0]

    ss_base = filter_steady_state(
        one, sys.c,
        lambda k: amp * np.cos(omega * (k - na) + phase), n + na)

    col_amp = filter_steady_state(
        sys.a, sys.c, lambda k: np.cos(omega * k + phase), n)
    col_phase = filter_steady_state(
        sys.a, sys.c, lambda k: -amp * np.sin(omega * k + phase), n)
    col_omega = filter_steady_state(
        sys.a, sys.c, lambda k: -amp * k * np.sin(omega * k + phase), n)
    return ss_base, np.column_stack([col_amp, col_phase, col_omega])


def _det_columns_case2(sys: ArmaxSystem, fo: FoSpec, n: int):
    """Transient-retaining deterministic pieces of the case-2 gradient.

    Returns ``d_base`` (the (1/C)-filtered switched-on FO input on
    k = 0 .. n-1, used shifted for the X columns) and the three FO
    columns, all filtered from k = 0 with zero initial state.
    """
    k = np.arange(n, dtype=np.float64)
    amp, phase, omega = fo.amplitude, fo.phase_rad, fo.omega
    cos_t = np.cos(omega * k + phase)
    sin_t = np.sin(omega * k + phase)
    one = [1.0]

    d_base = filter_zero_state(one, sys.c, amp * cos_t)
    col_amp = filter_zero_state(sys.b, sys.c, cos_t)
    col_phase = filter_zero_state(sys.b, sys.c, -amp * sin_t)
    col_omega = filter_zero_state(sys.b, sys.c, -amp * k * sin_t)
    return d_base, np.column_stack([col_amp, col_phase, col_omega])


def _shift_into(dest: np.ndarray, base: np.ndarray, offset: int, n: int):
    """dest[k] = base[k + offset] treating out-of-range entries as zero."""
    if offset >= 0:
        dest[:] = base[offset:offset + n]
    else:
        dest[:-offset] = 0.0
        dest[-offset:] = base[:n + offset]


def _assemble_case1(sys, y_ext, e_ext, n, ss_base, fo_cols):
    na, _, nc = sys.orders
    k_burn = y_ext.size - n
    one = [1.0]
    w = filter_zero_state(one, sys.c, y_ext)
    v = filter_zero_state(one, sys.c, e_ext)
    psi = np.empty((n, na + nc + 3))
    for i in range(1, na + 1):
        psi[:, i - 1] = ss_base[na - i:na - i + n] - w[k_burn - i:k_burn - i + n]
    for i in range(1, nc + 1):
        psi[:, na + i - 1] = v[k_burn - i:k_burn - i + n]
    psi[:, -3:] = fo_cols
    return psi


def _assemble_case2(sys, y_ext, e_ext, n, d_base, fo_cols):
    na, nb, nc = sys.orders
    k_burn = y_ext.size - n
    one = [1.0]
    w = filter_zero_state(one, sys.c, y_ext)
    v = filter_zero_state(one, sys.c, e_ext)
    psi = np.empty((n, na + nb + 1 + nc + 3))
    for i in range(1, na + 1):
        psi[:, i - 1] = -w[k_burn - i:k_burn - i + n]
    for i in range(0, nb + 1):
        _shift_into(psi[:, na + i], d_base, -i, n)
    for i in range(1, nc + 1):
        psi[:, na + nb + 1 + i - 1] = v[k_burn - i:k_burn - i + n]
    psi[:, -3:] = fo_cols
    return psi


def _assemble_ambient(sys, y_ext, e_ext, n):
    na, _, nc = sys.orders
    k_burn = y_ext.size - n
    one = [1.0]
    w = filter_zero_state(one, sys.c, y_ext)
    v = filter_zero_state(one, sys.c, e_ext)
    psi = np.empty((n, na + nc))
    for i in range(1, na + 1):
        psi[:, i - 1] = -w[k_burn - i:k_burn - i + n]
    for i in range(1, nc + 1):
        psi[:, na + i - 1] = v[k_burn - i:k_burn - i + n]
    return psi


def _check_signals(sys, y, e):
    y = np.asarray(y, float)
    e = np.asarray(e, float)
    if y.shape != e.shape or y.ndim != 1:
        raise ValueError("y and e must be 1-D arrays of equal length")
    n = y.size - system_burn_in(sys)
    if n <= 0:
        raise ValueError("signals shorter than the system burn-in")
    return y, e, n


def gradients_case1(sys: ArmaxSystem, fo_out: FoSpec, y, e) -> GradientMatrix:
    """Predictor gradients for the steady-state-FO model.

    ``y`` and ``e`` are burn-in-extended records (as produced by the
    synthesis helpers); the last ``len(y) - burn_in`` samples form the
    observation window.  Deterministic sinusoid terms use steady-state
    filtering; the stochastic terms filter the extended records so their
    transients have died before the window starts.
    """
    if fo_out.reference != "output":
        raise ValueError("case1 gradients need an output-referenced FO")
    y, e, n = _check_signals(sys, y, e)
    ss_base, fo_cols = _det_columns_case1(sys, fo_out, n)
    return GradientMatrix(_assemble_case1(sys, y, e, n, ss_base, fo_cols),
                          CASE1)


def gradients_case2(sys: ArmaxSystem, fo_in: FoSpec, y, e) -> GradientMatrix:
    """Predictor gradients for the transient-FO model.

    Deterministic FO terms are filtered from k = 0 with zero initial
    state so the onset transient is retained; shifted sinusoid terms are
    zero before the FO starts.
    """
    if fo_in.reference != "input":
        raise ValueError("case2 gradients need an input-referenced FO")
    y, e, n = _check_signals(sys, y, e)
    d_base, fo_cols = _det_columns_case2(sys, fo_in, n)
    return GradientMatrix(_assemble_case2(sys, y, e, n, d_base, fo_cols),
                          CASE2)


# ---------------------------------------------------------------------------
# one-step-ahead predictor (finite-difference validation target)


def predict_one_step(case, theta, y, n_keep: int):
    """Run the one-step-ahead predictor over an extended record.

    Returns ``(y_hat, eps)`` with ``eps = y - y_hat``, both covering the
    full extended record; the last ``n_keep`` samples are the observation
    window (sample index 0 of the window is the FO phase reference).  At
    the true parameters the prediction errors reproduce the driving noise
    once the startup transient has decayed.
    """
    case = _norm_case(case)
    y = np.asarray(y, float)
    if n_keep <= 0 or n_keep > y.size:
        raise ValueError("invalid retained-window length")
    expected = ThetaCase1 if case == CASE1 else ThetaCase2
    if case == AMBIENT or not isinstance(theta, expected):
        raise ValueError("theta object does not match the case tag")
    c_full = theta.c_full
    if c_full.size > 1:
        radius = max(abs(z) for z in sigcore.roots(c_full))
        if radius >= 1.0:
            raise ValueError("MA polynomial is not invertible")
    a_full = theta.a_full
    k_burn = y.size - n_keep

    if case == CASE1:
        coeffs, gated = a_full, False
    else:
        coeffs, gated = np.asarray(theta.b, float), True
    deg = coeffs.size - 1
    k_fo = np.arange(-k_burn - deg, n_keep, dtype=np.float64)
    fo_wave = theta.amplitude * np.cos(theta.omega * k_fo + theta.phase_rad)
    if gated:
        fo_wave = np.where(k_fo >= 0, fo_wave, 0.0)
    det = np.convolve(coeffs, fo_wave)[deg:deg + y.size]

    ar_part = filter_zero_state(a_full, [1.0], y) - y  # sum_{i>=1} a_i y[k-i]
    driver = det - ar_part
    eps = filter_zero_state([1.0], c_full, y - driver)
    return y - eps, eps


# ---------------------------------------------------------------------------
# Monte-Carlo CRB


def invert_fisher(sbar: np.ndarray, cap: float = CONDITION_CAP):
    """Invert an averaged Fisher matrix via symmetric eigendecomposition.

    The matrix mixes parameter units (AR coefficients vs rad/sample), so
    it is Jacobi-equilibrated first; the reported condition number is that
    of the equilibrated matrix.  Refuses (rather than regularizes)
    singular or ill-conditioned input.
    """
    s = 0.5 * (sbar + sbar.T)
    d = np.diag(s).copy()
    if np.any(~np.isfinite(d)) or np.any(d <= 0):
        raise FisherConditionError("Fisher matrix has non-positive diagonal",
                                   math.inf)
    scale = np.sqrt(d)
    r = s / np.outer(scale, scale)
    w, v = np.linalg.eigh(r)
    if w[0] <= 0:
        raise FisherConditionError("Fisher matrix is singular", math.inf)
    cond = float(w[-1] / w[0])
    if cond > cap:
        raise FisherConditionError("Fisher matrix too ill-conditioned",
                                   cond)
    r_inv = (v / w) @ v.T
    inv = r_inv / np.outer(scale, scale)
    return 0.5 * (inv + inv.T), cond


def _trial_gram(case, sys, fo, n, base_seed, trial, det):
    e = make_noise(sys, n, _seed_tuple(base_seed) + (trial,))
    if case == CASE1:
        y_ext = sysmodel.synth_case1_ext(sys, fo, e.samples, n)
        psi = _assemble_case1(sys, y_ext, e.samples, n, *det)
    elif case == CASE2:
        y_ext = sysmodel.synth_case2_ext(sys, fo, e.samples, n)
        psi = _assemble_case2(sys, y_ext, e.samples, n, *det)
    else:
        y_ext = sysmodel.ambient_ext(sys, e.samples)
        psi = _assemble_ambient(sys, y_ext, e.samples, n)
    if not np.all(np.isfinite(psi)):
        raise FloatingPointError(f"non-finite gradient in trial {trial}")
    return _gram(psi)


def averaged_fisher(case, sys: ArmaxSystem, fo: FoSpec | None, n: int,
                    m: int, base_seed, threads: int = 1) -> np.ndarray:
    """Monte-Carlo estimate of ``(1/N) sum_k E{psi psi^T}``.

    Per-trial noise comes from a stream keyed by (base_seed, trial index);
    partial Gram matrices are merged in trial order with Kahan
    compensation, so the result is bit-identical for any ``threads``.
    """
    case = _norm_case(case)
    if m < 1:
        raise ValueError("need at least one Monte-Carlo trial")
    dim = theta_dim(case, sys.orders)
    if n <= dim:
        raise ValueError(f"record length {n} must exceed dim(theta)={dim}")
    if case == CASE1:
        if fo is None or fo.reference != "output":
            raise ValueError("case1 needs an output-referenced FO")
        det = _det_columns_case1(sys, fo, n)
    elif case == CASE2:
        if fo is None or fo.reference != "input":
            raise ValueError("case2 needs an input-referenced FO")
        det = _det_columns_case2(sys, fo, n)
    else:
        det = None

    acc = np.zeros((dim, dim))
    comp = np.zeros((dim, dim))

    def work(trial):
        return _trial_gram(case, sys, fo, n, base_seed, trial, det)

    def merge(g):
        nonlocal acc, comp
        term = g - comp
        total = acc + term
        comp = (total - acc) - term
        acc = total

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for g in pool.map(work, range(m)):
                merge(g)
    else:
        for trial in range(m):
            merge(work(trial))
    return acc / (float(n) * float(m))


def structural_null(sys: ArmaxSystem, fo: FoSpec) -> np.ndarray:
    """The exact non-identifiable direction of the transient-case model.

    The output depends on the X coefficients and the input-FO amplitude
    only through their products, so ``amp * psi_amp = sum_i b_i psi_bi``
    holds sample by sample and the Fisher matrix has this direction in
    its null space.  Returned unit-normalized.
    """
    na, nb, nc = sys.orders
    v = np.zeros(theta_dim(CASE2, sys.orders))
    v[na:na + nb + 1] = -np.asarray(sys.b.coeffs, float)
    v[-3] = fo.amplitude
    return v / np.linalg.norm(v)


def _complement_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to unit vector v."""
    d = v.size
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(d)]))
    return q[:, 1:d]


def crb_monte_carlo(case, sys: ArmaxSystem, fo: FoSpec | None, n: int,
                    m: int, base_seed, threads: int = 1) -> CrbMatrix:
    """Monte-Carlo CRB: ``(sigma_e^2/N)`` times the inverse averaged Fisher.

    The transient-case parametrization carries one exact scale
    indeterminacy (see :func:`structural_null`); there the Fisher matrix
    is inverted on the identifiable subspace, which leaves every reported
    quantity (mode bounds, frequency bound, propagated output-FO bounds)
    unchanged because their gradients are orthogonal to the null
    direction.  The resulting matrix is positive definite on that
    subspace and zero along the null direction.
    """
    case = _norm_case(case)
    sbar = averaged_fisher(case, sys, fo, n, m, base_seed, threads)
    if case == CASE2:
        basis = _complement_basis(structural_null(sys, fo))
        restricted = basis.T @ sbar @ basis
        inv_r, cond = invert_fisher(restricted)
        inv = basis @ inv_r @ basis.T
        inv = 0.5 * (inv + inv.T)
    else:
        inv, cond = invert_fisher(sbar)
    return CrbMatrix(matrix=(sys.sigma_e2 / n) * inv, case=case, n=n, m=m,
                     sigma_e2=sys.sigma_e2, condition=cond,
                     orders=sys.orders)


# ---------------------------------------------------------------------------
# semi-analytic Fisher (oracle for the Monte-Carlo path)


def _residue_impulse(coeffs: np.ndarray, tail: float = 1e-14) -> np.ndarray:
    """Impulse response of 1/P(q) via partial fractions over simple poles.

    Independent of the recursive filter kernels on purpose: this backs the
    oracle that cross-checks them.
    """
    coeffs = np.asarray(coeffs, float)
    if coeffs.size == 1:
        return np.array([1.0 / coeffs[0]])
    poles = np.array(sigcore.roots(coeffs), dtype=complex)
    if np.any(np.abs(poles) < 1e-12):
        raise ValueError("oracle impulse response requires nonzero poles")
    for i in range(poles.size):
        for j in range(i + 1, poles.size):
            if abs(poles[i] - poles[j]) < 1e-8:
                raise ValueError("oracle impulse response requires simple poles")
    gammas = np.empty(poles.size, dtype=complex)
    for i, p in enumerate(poles):
        others = np.delete(poles, i)
        gammas[i] = 1.0 / np.prod(1.0 - others / p)
    radius = float(np.max(np.abs(poles)))
    if radius >= 1.0:
        raise ValueError("unstable polynomial in oracle impulse response")
    gsum = float(np.sum(np.abs(gammas)))
    length = int(math.ceil(math.log(tail / max(gsum, 1e-30))
                           / math.log(radius))) + 1
    k = np.arange(max(length, coeffs.size))
    h = np.real(np.sum(gammas[:, None] * poles[:, None] ** k[None, :], axis=0))
    return h


def _lag_dot(f: np.ndarray, g: np.ndarray, lag: int) -> float:
    """``sum_m f[m] g[m + lag]`` with out-of-range terms zero."""
    if lag >= 0:
        length = min(f.size, g.size - lag)
        if length <= 0:
            return 0.0
        return float(np.dot(f[:length], g[lag:lag + length]))
    return _lag_dot(g, f, -lag)


def fisher_semi_analytic(case, sys: ArmaxSystem, fo: FoSpec | None,
                         n: int) -> np.ndarray:
    """Exact ``sum_k E{psi psi^T}`` for small systems.

    Deterministic gradient columns contribute their outer products;
    stochastic columns are lag-shifted filtered noise, whose stationary
    cross-covariances are impulse-response correlation sums.  Restricted
    to small orders so the exact evaluation stays cheap.  The inverse of
    this matrix times sigma_e^2 is the CRB the Monte-Carlo path should
    reproduce.
    """
    case = _norm_case(case)
    na, nb, nc = sys.orders
    budget = na + nc + (nb if case == CASE2 else 0)
    if budget > 8:
        raise ValueError("semi-analytic oracle limited to n_a+n_b+n_c <= 8")
    dim = theta_dim(case, sys.orders)
    k = np.arange(n, dtype=np.float64)

    # deterministic columns
    det = np.zeros((n, dim))
    if case == CASE1:
        amp, phase, omega = fo.amplitude, fo.phase_rad, fo.omega
        aw = sigcore.eval_at_frequency(sys.a, omega)
        cw = sigcore.eval_at_frequency(sys.c, omega)
        daw = sigcore.eval_dcoeff_frequency(sys.a, omega)
        dcw = sigcore.eval_dcoeff_frequency(sys.c, omega)
        h = aw / cw
        dh = (daw * cw - dcw * aw) / cw**2
        rot = np.exp(1j * (omega * k + phase))
        det[:, -3] = np.real(h * rot)
        det[:, -2] = -amp * np.imag(h * rot)
        det[:, -1] = -amp * np.imag((k * h - 1j * dh) * rot)
    elif case == CASE2:
        amp, phase, omega = fo.amplitude, fo.phase_rad, fo.omega
        h_a = _residue_impulse(sys.a.asarray())
        h_c = _residue_impulse(sys.c.asarray())
        cos_t = np.cos(omega * k + phase)
        sin_t = np.sin(omega * k + phase)
        h_ac = np.convolve(h_a, h_c)
        h_bac = np.convolve(sys.b.asarray(), h_ac)
        h_bc = np.convolve(sys.b.asarray(), h_c)
        base_a = -np.convolve(h_bac, amp * cos_t)[:n]
        base_b = np.convolve(h_c, amp * cos_t)[:n]
        for i in range(1, na + 1):
            det[i:, i - 1] = base_a[:n - i]
        for i in range(0, nb + 1):
            det[i:, na + i] = base_b[:n - i]
        det[:, -3] = np.convolve(h_bc, cos_t)[:n]
        det[:, -2] = np.convolve(h_bc, -amp * sin_t)[:n]
        det[:, -1] = np.convolve(h_bc, -amp * k * sin_t)[:n]

    out = det.T @ det

    # stationary covariances of the stochastic components:
    # AR columns carry -(1/A)e[k-i], MA columns carry (1/C)e[k-i]
    h_inv_a = _residue_impulse(sys.a.asarray()) if na else np.zeros(0)
    h_inv_c = _residue_impulse(sys.c.asarray()) if nc else np.zeros(0)
    stoch = []  # (column index, impulse response, sign, delay)
    for i in range(1, na + 1):
        stoch.append((i - 1, h_inv_a, -1.0, i))
    c_offset = na if case != CASE2 else na + nb + 1
    for i in range(1, nc + 1):
        stoch.append((c_offset + i - 1, h_inv_c, 1.0, i))
    for idx_x, h_x, s_x, d_x in stoch:
        for idx_y, h_y, s_y, d_y in stoch:
            if idx_y < idx_x:
                continue
            cov = (s_x * s_y * sys.sigma_e2
                   * _lag_dot(h_x, h_y, d_x - d_y))
            out[idx_x, idx_y] += n * cov
            if idx_y != idx_x:
                out[idx_y, idx_x] += n * cov
    return out
