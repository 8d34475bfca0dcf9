"""Channel protocols, decay parameters and the QZE scaling study."""

import math

import numpy as np
import pytest

from zenosense.channel import (
    ChannelRealization,
    ProbeState,
    calibrate_unit_shift,
    constant_coupling,
    decay_parameter,
    protected_survival_spectral,
    qze_scaling_report,
    run_protected,
    run_unprotected,
    second_order_survival,
    uniform_coupling,
)
from zenosense.noise_model import NoiseAlphabet, config_realization, enumerate_configurations
from zenosense.wavepacket import apply_noise_kernel, make_gaussian

import oracles

QUARTER = math.pi / 4.0


class TestTypes:
    def test_probe_state_range(self):
        ProbeState(0.0)
        ProbeState(math.pi / 2)
        with pytest.raises(ValueError):
            ProbeState(-0.1)
        with pytest.raises(ValueError):
            ProbeState(2.0)

    def test_delta_s_squared(self):
        assert ProbeState(QUARTER).delta_s_squared == pytest.approx(0.25)
        assert ProbeState(0.0).delta_s_squared == 0.0

    def test_realization_validation(self):
        with pytest.raises(ValueError):
            ChannelRealization(())
        with pytest.raises(ValueError):
            ChannelRealization((1.0, -0.5))


class TestRunProtected:
    def test_all_zero_couplings(self):
        report = run_protected(QUARTER, 1.0, ChannelRealization((0.0,) * 5))
        assert report.total_survival == pytest.approx(1.0, abs=1e-15)
        assert report.final_state.components == ((1.0 + 0.0j, 0.0),)

    def test_pure_h_never_decoheres(self):
        report = run_protected(0.0, 2.0, ChannelRealization((1.0, 3.0, 0.4)))
        assert report.total_survival == pytest.approx(1.0, abs=1e-12)

    def test_single_step_two_sigma(self):
        sigma = 1.0
        report = run_protected(QUARTER, sigma, ChannelRealization((2.0 * sigma,)))
        expected = 0.5 * (1.0 + math.exp(-0.5))
        assert report.total_survival == pytest.approx(expected, rel=1e-13)
        assert report.total_survival == pytest.approx(
            oracles.quad_norm_sq(report.final_state), abs=1e-12
        )

    def test_survival_product_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            real = ChannelRealization(tuple(rng.uniform(0.0, 2.5, size=6)))
            report = run_protected(QUARTER, 1.0, real)
            assert math.prod(report.step_survivals) == pytest.approx(
                report.total_survival, abs=1e-12
            )
            assert all(0.0 <= s <= 1.0 for s in report.step_survivals)

    def test_first_momentum_moment(self):
        sigma = 1.5
        report = run_protected(QUARTER, sigma, ChannelRealization((1.0, 1.0)))
        assert report.momentum_moments[0] == pytest.approx(1.0 / (4.0 * sigma**2), rel=1e-14)

    def test_ordering_invariance(self):
        rng = np.random.default_rng(17)
        base = tuple(rng.uniform(0.1, 2.0, size=5))
        ref = run_protected(QUARTER, 1.0, ChannelRealization(base))
        for _ in range(5):
            perm = tuple(rng.permutation(base))
            rep = run_protected(QUARTER, 1.0, ChannelRealization(perm))
            assert rep.total_survival == pytest.approx(ref.total_survival, abs=1e-12)
            assert rep.final_state.centers == pytest.approx(ref.final_state.centers, abs=1e-12)
            assert np.allclose(rep.final_state.amplitudes, ref.final_state.amplitudes, atol=1e-12)

    def test_momentum_moments_strictly_decrease(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            couplings = tuple(rng.uniform(0.2, 3.0, size=6))
            report = run_protected(QUARTER, 1.0, ChannelRealization(couplings))
            mm = report.momentum_moments
            assert all(b < a for a, b in zip(mm, mm[1:]))


class TestRunUnprotected:
    def test_zero_total(self):
        assert run_unprotected(QUARTER, 1.0, ChannelRealization((0.0, 0.0))) == 1.0

    def test_matches_single_step_protected(self):
        sigma = 1.0
        real = ChannelRealization((2.0 * sigma,))
        assert run_unprotected(QUARTER, sigma, real) == pytest.approx(
            run_protected(QUARTER, sigma, real).total_survival, rel=1e-13
        )

    def test_saturates_at_half(self):
        # ten events of >= 0.6 sigma each: survival 0.50 within 0.01
        for g in (0.6, 0.76, 1.0):
            real = ChannelRealization((g,) * 10)
            assert run_unprotected(QUARTER, 1.0, real) == pytest.approx(0.5, abs=0.01)

    def test_against_quadrature(self):
        sigma, g_total = 1.0, 1.7
        # single final measurement == one kernel with the total shift
        state = apply_noise_kernel(make_gaussian(sigma), 0.7, g_total)
        survival = run_unprotected(0.7, sigma, ChannelRealization((g_total / 2, g_total / 2)))
        assert survival == pytest.approx(oracles.quad_norm_sq(state), abs=1e-12)


class TestDecayParameter:
    def test_fixed_bath_constant_coupling(self):
        n, g, sigma = 6, 0.5, 1.0
        real = ChannelRealization((g,) * n)
        expected = n * g * g / (16.0 * sigma * sigma)
        assert decay_parameter(QUARTER, sigma, real, "fixed-bath") == pytest.approx(expected, rel=1e-13)

    def test_single_measurement_ratio(self):
        n, g = 8, 0.5
        real = ChannelRealization((g,) * n)
        j_n = decay_parameter(QUARTER, 1.0, real, "fixed-bath")
        j_1 = decay_parameter(QUARTER, 1.0, real, "single-measurement")
        assert j_1 == pytest.approx(n * n * g * g / 16.0, rel=1e-13)
        assert j_n / j_1 == pytest.approx(1.0 / n, rel=1e-13)

    def test_theta_zero_gives_zero(self):
        real = ChannelRealization((1.0, 2.0))
        for mode in ("fixed-bath", "evolving-bath", "single-measurement"):
            assert decay_parameter(0.0, 1.0, real, mode) == 0.0

    def test_evolving_bath_uses_recorded_moments(self):
        real = ChannelRealization((0.8, 1.2, 0.5))
        report = run_protected(QUARTER, 1.0, real)
        expected = 0.25 * sum(
            g * g * b2 for g, b2 in zip(real.couplings, report.momentum_moments)
        )
        got = decay_parameter(QUARTER, 1.0, real, "evolving-bath")
        assert got == pytest.approx(expected, rel=1e-13)
        assert got < decay_parameter(QUARTER, 1.0, real, "fixed-bath")

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            decay_parameter(QUARTER, 1.0, ChannelRealization((1.0,)), "banana")


class TestSecondOrderSurvival:
    def test_trivial_points(self):
        assert second_order_survival(QUARTER, 1.0, 0.0) == 1.0
        assert second_order_survival(math.pi / 2, 1.0, 5.0) == 1.0

    def test_small_coupling_value(self):
        # 1 - (0.2)^2 * 1/4 * 1/4 = 0.9975
        assert second_order_survival(QUARTER, 1.0, 0.2) == pytest.approx(0.9975, abs=1e-12)

    def test_clamped_at_zero(self):
        assert second_order_survival(QUARTER, 1.0, 100.0) == 0.0

    def test_quartic_residual_shrinkage(self):
        sigma = 1.0
        ratios = []
        for g_total in (0.4, 0.2, 0.1):
            exact = run_unprotected(QUARTER, sigma, ChannelRealization((g_total,)))
            approx = second_order_survival(QUARTER, sigma, g_total)
            ratios.append(abs(exact - approx))
        assert ratios[0] / ratios[1] == pytest.approx(16.0, rel=0.1)
        assert ratios[1] / ratios[2] == pytest.approx(16.0, rel=0.1)


class TestExponentialApproximation:
    def test_evolving_bath_exponent_quartic_error(self):
        # calibrate the constant C at one scale, then check the bound with
        # a generous factor at finer scales while the error shrinks ~16x
        sigma = 1.0
        base = (0.3, 0.6, 0.3, 0.9, 0.6, 0.3)

        def rel_error(scale):
            real = ChannelRealization(tuple(g * scale for g in base))
            exact = run_protected(QUARTER, sigma, real).total_survival
            approx = math.exp(-decay_parameter(QUARTER, sigma, real, "evolving-bath"))
            return abs(approx - exact) / exact

        errors = [rel_error(s) for s in (1.0, 0.5, 0.25)]
        max_g4 = max(base) ** 4
        c = errors[0] / (max_g4 * len(base))
        for scale, err in zip((0.5, 0.25), errors[1:]):
            bound = 2.0 * c * (max(base) * scale) ** 4 * len(base)
            assert err <= bound
        assert errors[0] / errors[1] == pytest.approx(16.0, rel=0.25)


class TestZenoAdvantage:
    @pytest.mark.parametrize("g_over_sigma", [0.25, 0.4])
    def test_protected_beats_unprotected_in_zeno_regime(self, g_over_sigma):
        # exhaustive over all 210 configurations with distributed couplings
        # (sum >= 2 max); fails for g/sigma >= 0.5, see the calibrated case
        alphabet = NoiseAlphabet(g_over_sigma, (0.0, 1.0, 2.0, 3.0, 4.0), (0.2,) * 5)
        checked = 0
        for config in enumerate_configurations(5, 6):
            if config.counts[0] == 6:
                continue  # all-zero couplings: both survivals are 1
            real = config_realization(config, alphabet)
            if real.total < 2.0 * max(real.couplings):
                continue
            protected = run_protected(QUARTER, 1.0, real).total_survival
            unprotected = run_unprotected(QUARTER, 1.0, real)
            assert protected >= unprotected, config.counts
            checked += 1
        assert checked > 150

    def test_calibrated_reference_scenario(self):
        sigma = 150.0
        g = calibrate_unit_shift(sigma, 0.58, (0.0, 0.0, 2.0, 2.0, 3.0, 3.0))
        real = ChannelRealization((0.0, 0.0, 2 * g, 2 * g, 3 * g, 3 * g))
        assert run_protected(QUARTER, sigma, real).total_survival == pytest.approx(0.58, abs=1e-4)
        assert run_unprotected(QUARTER, sigma, real) == pytest.approx(0.50, abs=0.01)


class TestSpectralSurvival:
    def test_matches_exact_for_small_n(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            couplings = tuple(rng.uniform(0.0, 2.0, size=int(rng.integers(1, 9))))
            exact = run_protected(0.9, 1.3, ChannelRealization(couplings)).total_survival
            spectral = protected_survival_spectral(0.9, 1.3, couplings)
            assert spectral == pytest.approx(exact, abs=1e-10)

    def test_handles_long_channels(self):
        val = protected_survival_spectral(QUARTER, 1.0, np.full(100, 0.5))
        assert 0.0 < val < 1.0


class TestScalingReport:
    def test_constant_coupling_exact_identity(self):
        rows = qze_scaling_report(
            QUARTER, 1.0, constant_coupling(0.5), [1, 2, 3, 7, 50], 3, seed=1, survival_samples=1
        )
        for row in rows:
            assert row.j_ratio_mean == 1.0 / row.n_events
            assert row.j_ratio_std == 0.0
        assert rows[0].survival_ratio_mean == pytest.approx(1.0, abs=1e-12)

    def test_uniform_coupling_mean_ratio(self):
        # E[g^2]/E[g]^2 = 4/3 for uniform; mean of sum g^2/(sum g)^2 ~ (4/3)/N
        n = 100
        rows = qze_scaling_report(
            QUARTER, 1.0, uniform_coupling(1.0), [n], 10_000, seed=2, survival_samples=1
        )
        ratio = rows[0].j_ratio_mean
        assert 0.9 * (4.0 / 3.0) / n <= ratio <= 1.5 * (4.0 / 3.0) / n

    def test_deterministic_under_seed(self):
        a = qze_scaling_report(QUARTER, 1.0, uniform_coupling(1.0), [3, 5], 50, seed=42)
        b = qze_scaling_report(QUARTER, 1.0, uniform_coupling(1.0), [3, 5], 50, seed=42)
        assert a == b

    def test_monotone_improvement_at_fixed_total(self):
        total = 3.0
        survivals = []
        for n in (1, 2, 4, 8, 16, 32):
            rows = qze_scaling_report(
                QUARTER, 1.0, constant_coupling(total / n), [n], 1, seed=0
            )
            survivals.append(rows[0].protected_mean)
        assert all(b > a for a, b in zip(survivals, survivals[1:]))

    def test_rejects_empty_inputs(self):
        with pytest.raises(ValueError):
            qze_scaling_report(QUARTER, 1.0, constant_coupling(1.0), [], 5, seed=0)
        with pytest.raises(ValueError):
            qze_scaling_report(QUARTER, 1.0, constant_coupling(1.0), [2], 0, seed=0)


class TestCalibration:
    def test_reference_target(self):
        sigma = 150.0
        g = calibrate_unit_shift(sigma, 0.58, (0.0, 0.0, 2.0, 2.0, 3.0, 3.0))
        # frozen from an independent brute-force subset-sum enumeration
        assert g / sigma == pytest.approx(0.7603, abs=2e-3)

    def test_target_one_rejected(self):
        with pytest.raises(ValueError, match="unattainable"):
            calibrate_unit_shift(1.0, 1.0, (2.0, 2.0, 3.0, 3.0))

    def test_target_below_floor_rejected(self):
        with pytest.raises(ValueError, match="unattainable"):
            calibrate_unit_shift(1.0, 0.05, (2.0, 2.0, 3.0, 3.0))

    def test_weak_coupling_limit(self):
        sigma = 1.0
        g = calibrate_unit_shift(sigma, 0.999, (0.0, 0.0, 2.0, 2.0, 3.0, 3.0))
        real = ChannelRealization((0.0, 0.0, 2 * g, 2 * g, 3 * g, 3 * g))
        protected = run_protected(QUARTER, sigma, real).total_survival
        unprotected = run_unprotected(QUARTER, sigma, real)
        assert protected == pytest.approx(0.999, abs=1e-4)
        assert unprotected == pytest.approx(protected, abs=3e-3)

    def test_all_zero_multiples_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            calibrate_unit_shift(1.0, 0.5, (0.0, 0.0))
