import cmath
import math

import numpy as np
import pytest

from focrb import sigcore
from focrb.sigcore import (Mode, Pole, Polynomial, arma_psd, arma_variance,
                           burn_in_length, eval_at_frequency,
                           filter_steady_state, filter_zero_state,
                           mode_from_pole, pole_from_mode, roots)


def naive_impulse_response(num, den, length):
    """Plain-Python difference equation, independent of the kernel backends."""
    num = list(num) + [0.0] * length
    den = list(den)
    h = []
    for k in range(length):
        acc = num[k]
        for i in range(1, len(den)):
            if k - i >= 0:
                acc -= den[i] * h[k - i]
        h.append(acc)
    return np.array(h)


class TestEvalAtFrequency:
    def test_constant(self):
        assert eval_at_frequency(Polynomial([1.0]), 0.3) == 1 + 0j

    def test_zero_at_dc(self):
        assert abs(eval_at_frequency(Polynomial([1.0, -1.0]), 0.0)) < 1e-15

    def test_direct_arithmetic(self):
        # 1 + 0.5 e^{-j pi} = 0.5
        val = eval_at_frequency(Polynomial([1.0, 0.5]), math.pi)
        assert abs(val - 0.5) < 1e-14

    def test_derivative_matches_finite_difference(self):
        poly = Polynomial([1.0, -0.9, 0.4, 0.1])
        omega, h = 0.7, 1e-6
        fd = (eval_at_frequency(poly, omega + h)
              - eval_at_frequency(poly, omega - h)) / (2 * h)
        an = sigcore.eval_dcoeff_frequency(poly, omega)
        assert abs(fd - an) < 1e-8


class TestRoots:
    def test_linear(self):
        assert np.allclose(roots(Polynomial([1.0, -0.5])), [0.5])

    def test_perfect_square(self):
        got = roots(Polynomial([1.0, -1.0, 0.25]))
        assert np.allclose(sorted(z.real for z in got), [0.5, 0.5], atol=1e-8)
        assert all(abs(z.imag) < 1e-8 for z in got)

    def test_degree10_matches_companion_oracle(self, surrogate):
        got = np.array(roots(surrogate.a))
        oracle = np.roots(surrogate.a.asarray())
        # multiset comparison: each oracle root has a close partner
        for z in oracle:
            assert np.min(np.abs(got - z)) < 1e-8

    def test_newton_polish_does_not_move_roots(self, surrogate):
        coeffs = surrogate.a.asarray()
        dcoeffs = np.polyder(coeffs)
        for z in roots(surrogate.a):
            for _ in range(3):
                z = z - np.polyval(coeffs, z) / np.polyval(dcoeffs, z)
            assert abs(np.polyval(coeffs, z)) < 1e-12
            assert np.min(np.abs(np.array(roots(surrogate.a)) - z)) < 1e-10

    def test_reconstruction_property(self, surrogate):
        for poly in (surrogate.a, surrogate.c, Polynomial([1.0, -0.3, 0.5])):
            rebuilt = np.real(np.poly(roots(poly)))
            assert np.allclose(rebuilt, poly.asarray(),
                               rtol=1e-8, atol=1e-12)

    def test_conjugate_pairs_adjacent_and_exact(self):
        got = roots(Polynomial([1.0, -1.0, 0.89]))  # complex pair
        assert got[0] == got[1].conjugate()
        assert got[0].imag > 0

    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            roots(Polynomial([1.0]))

    def test_ordering_deterministic(self):
        poly = Polynomial(np.real(np.poly([0.5 + 0.4j, 0.5 - 0.4j,
                                           0.2 + 0.7j, 0.2 - 0.7j, 0.3])))
        got = roots(poly)
        imags = [z.imag for z in got]
        assert imags[0] >= imags[2]          # groups by descending imag
        assert abs(got[-1].imag) < 1e-12     # real root last


class TestModePole:
    def test_quarter_rate_pole(self):
        m = mode_from_pole(Pole(cmath.exp(1j * math.pi / 2), 3.0))
        assert abs(m.frequency_hz - 0.75) < 1e-12
        assert abs(m.damping_pct) < 1e-12

    def test_real_pole_critically_damped(self):
        m = mode_from_pole(Pole(0.5, 3.0))
        assert m.frequency_hz == 0.0
        assert abs(m.damping_pct - 100.0) < 1e-12

    def test_monitored_mode_round_trip(self):
        p = pole_from_mode(Mode(0.372, 4.67), 3.0)
        assert abs(p.value) < 1.0
        m = mode_from_pole(p)
        assert abs(m.frequency_hz - 0.372) < 1e-10
        assert abs(m.damping_pct - 4.67) < 1e-10

    def test_inverse_of_quarter_rate(self):
        p = pole_from_mode(Mode(0.75, 0.0), 3.0)
        assert abs(p.value - cmath.exp(1j * math.pi / 2)) < 1e-12

    def test_critically_damped_inverse(self):
        p = pole_from_mode(Mode(0.0, 100.0), 3.0)
        assert p.value.imag == 0
        assert 0 < p.value.real < 1

    def test_round_trip_grid(self):
        fs = 3.0
        for freq in np.linspace(0.01, 1.49, 23):
            for damp in (0.0, 1.0, 4.67, 30.0, 99.0):
                m = Mode(float(freq), float(damp))
                back = mode_from_pole(pole_from_mode(m, fs))
                assert abs(back.frequency_hz - m.frequency_hz) \
                    <= 1e-10 * max(1, m.frequency_hz)
                assert abs(back.damping_pct - m.damping_pct) \
                    <= 1e-10 * max(1, abs(m.damping_pct))

    def test_degenerate_pole_rejected(self):
        with pytest.raises(ValueError, match="z=1"):
            mode_from_pole(Pole(1.0, 3.0))

    def test_nyquist_rejected(self):
        with pytest.raises(ValueError, match="Nyquist"):
            pole_from_mode(Mode(1.5, 10.0), 3.0)


class TestBurnIn:
    def test_tolerance_rule(self):
        k = burn_in_length(0.5)
        assert 0.5 ** k < 1e-12 <= 0.5 ** (k - 1)

    def test_cap_binds(self):
        with pytest.raises(ValueError, match="cap"):
            burn_in_length(0.9999999)

    def test_unstable_rejected(self):
        with pytest.raises(ValueError):
            burn_in_length(1.0)


class TestFilterZeroState:
    def test_identity(self):
        x = np.random.default_rng(0).standard_normal(64)
        assert np.array_equal(filter_zero_state([1.0], [1.0], x), x)

    def test_geometric_impulse_response(self):
        x = np.zeros(8)
        x[0] = 1.0
        y = filter_zero_state([1.0], [1.0, -0.5], x)
        assert np.allclose(y, 0.5 ** np.arange(8), rtol=0, atol=1e-15)

    @pytest.mark.parametrize("num,den", [
        ([1.0, 0.3], [1.0, -0.6]),
        ([0.5], [1.0, -1.2, 0.45]),
        ([1.0, -0.2, 0.1], [1.0, 0.3, 0.15, -0.05]),
    ])
    def test_matches_convolution_oracle(self, num, den):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(300)
        h = naive_impulse_response(num, den, 600)
        ref = np.convolve(h, x)[:300]
        got = filter_zero_state(num, den, x)
        assert np.max(np.abs(got - ref)) < 1e-10

    def test_linearity(self):
        rng = np.random.default_rng(3)
        x, z = rng.standard_normal((2, 200))
        num, den = [1.0, 0.2], [1.0, -0.7, 0.1]
        lhs = filter_zero_state(num, den, 2.5 * x - 1.25 * z)
        rhs = (2.5 * filter_zero_state(num, den, x)
               - 1.25 * filter_zero_state(num, den, z))
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))

    def test_non_monic_rejected(self):
        with pytest.raises(ValueError, match="monic"):
            filter_zero_state([1.0], [2.0, 1.0], np.zeros(4))


class TestFilterSteadyState:
    def test_identity(self):
        out = filter_steady_state([1.0], [1.0],
                                  lambda k: np.cos(0.3 * k), 50)
        assert np.allclose(out, np.cos(0.3 * np.arange(50)), atol=1e-12)

    def test_ar1_amplitude(self):
        omega = 0.9
        out = filter_steady_state([1.0], [1.0, -0.5],
                                  lambda k: np.cos(omega * k), 4000)
        expected_amp = 1.0 / abs(1 - 0.5 * cmath.exp(-1j * omega))
        assert abs(np.max(np.abs(out)) - expected_amp) < 1e-3
        # pointwise against the analytic frequency-response sinusoid
        h = 1.0 / eval_at_frequency(Polynomial([1.0, -0.5]), omega)
        k = np.arange(4000)
        ref = abs(h) * np.cos(omega * k + cmath.phase(h))
        assert np.max(np.abs(out - ref)) < 1e-9

    @pytest.mark.parametrize("num,den", [
        ([1.0], [1.0, -0.8]),
        ([1.0, 0.4], [1.0, -1.0, 0.41]),
    ])
    def test_growing_generator_long_burn_in_oracle(self, num, den):
        omega, n = 0.6, 256

        def gen(k):
            return k * np.sin(omega * k)

        got = filter_steady_state(num, den, gen, n)
        k_burn = burn_in_length(max(abs(z) for z in roots(Polynomial(den))))
        k_long = np.arange(-10 * k_burn, n)
        ref = filter_zero_state(num, den, gen(k_long.astype(float)))[-n:]
        assert np.max(np.abs(got - ref)) < 1e-9

    def test_sinusoid_matches_response_up_to_099(self):
        # radius 0.99 pole pair
        den = np.real(np.poly([0.99 * cmath.exp(0.9j),
                               0.99 * cmath.exp(-0.9j)]))
        omega = 0.5
        out = filter_steady_state([1.0], den,
                                  lambda k: np.cos(omega * k + 0.2), 500)
        h = 1.0 / eval_at_frequency(Polynomial(den), omega)
        k = np.arange(500)
        ref = abs(h) * np.cos(omega * k + 0.2 + cmath.phase(h))
        assert np.max(np.abs(out - ref)) < 1e-9

    def test_unstable_rejected(self):
        with pytest.raises(ValueError):
            filter_steady_state([1.0], [1.0, -1.01], lambda k: k * 0.0, 10)


class TestSpectra:
    def test_white_psd(self, white_system):
        sys = white_system.with_sigma(2.0)
        assert abs(arma_psd(sys, 1.1) - 2.0) < 1e-14

    def test_ar1_psd_dc(self):
        from focrb.sysmodel import ArmaxSystem
        sys = ArmaxSystem(Polynomial([1.0, -0.5]), Polynomial([1.0]),
                          Polynomial([1.0]), 1.0, 3.0)
        assert abs(arma_psd(sys, 0.0) - 4.0) < 1e-12

    def test_surrogate_peak_at_monitored_mode(self, surrogate):
        grid = np.arange(1e-4, math.pi, 1e-4)
        psd = np.array([arma_psd(surrogate, w) for w in grid])
        peak_hz = grid[np.argmax(psd)] * surrogate.fs / (2 * math.pi)
        assert abs(peak_hz - 0.372) < 0.01

    def test_white_variance(self, white_system):
        assert abs(arma_variance(white_system.with_sigma(3.0)) - 3.0) < 1e-12

    def test_ar1_variance_closed_form(self):
        from focrb.sysmodel import ArmaxSystem
        sys = ArmaxSystem(Polynomial([1.0, -0.5]), Polynomial([1.0]),
                          Polynomial([1.0]), 1.0, 3.0)
        assert abs(arma_variance(sys) - 4.0 / 3.0) < 1e-9

    def test_variance_lower_bound(self, arma21_system):
        assert arma_variance(arma21_system) >= arma21_system.sigma_e2

    @pytest.mark.parametrize("radius", [0.5, 0.9, 0.99])
    def test_variance_matches_psd_integral(self, radius):
        from focrb.sysmodel import ArmaxSystem
        den = np.real(np.poly([radius * cmath.exp(0.8j),
                               radius * cmath.exp(-0.8j)]))
        sys = ArmaxSystem(Polynomial(den), Polynomial([1.0]),
                          Polynomial([1.0, 0.3]), 1.7, 3.0)
        var = arma_variance(sys)
        omegas = np.linspace(-math.pi, math.pi, 200001)
        vals = np.array([arma_psd(sys, w) for w in omegas])
        integral = np.trapezoid(vals, omegas) / (2 * math.pi)
        assert abs(var - integral) < 1e-6 * integral
