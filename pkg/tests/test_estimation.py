import numpy as np
import pytest

from dihedral_rb.estimation import (
    RATE_CEILING,
    BoundEstimate,
    FitFailureError,
    assemble_interleaved,
    assemble_standard,
    fit_exponential_with_offset,
    fit_single_exponential,
    fit_standard,
    interleaved_bound,
)
from dihedral_rb.liouville import (
    avg_fidelity,
    chi_to_fidelity,
    effect_vector,
    fidelity_to_chi,
    state_vector,
)
from dihedral_rb.noise import GateNoiseMap, depolarizing_spec, over_rotation_spec
from dihedral_rb.protocol import ExperimentPlan, decay_dataset
from dihedral_rb.random_channels import random_cptp_superop

XZ = (2**-0.5, 0.0, 2**-0.5)


class TestFitSingleExponential:
    def test_exact_model_class(self):
        m = np.arange(1, 51)
        fit = fit_single_exponential(m, 0.5 * 0.99**m)
        assert fit.amplitude == pytest.approx(0.5, abs=1e-6)
        assert fit.rate == pytest.approx(0.99, abs=1e-6)
        assert not fit.rate_clamped

    def test_constant_data_gives_rate_one(self):
        m = np.array([1, 5, 10, 20])
        fit = fit_single_exponential(m, np.full(4, 0.37))
        assert fit.rate == pytest.approx(1.0, abs=1e-9)

    def test_scale_equivariance(self):
        m = np.arange(1, 40)
        y = 0.8 * 0.95**m
        base = fit_single_exponential(m, y)
        scaled = fit_single_exponential(m, 3.0 * y)
        assert scaled.rate == pytest.approx(base.rate, abs=1e-9)
        assert scaled.amplitude == pytest.approx(3.0 * base.amplitude, abs=1e-9)

    def test_weighted_fit_prefers_precise_points(self, rng):
        m = np.arange(1, 30)
        y = 0.5 * 0.9**m
        noisy = y.copy()
        noisy[-1] += 0.3  # a wild outlier...
        stderrs = np.full(m.size, 1e-4)
        stderrs[-1] = 10.0  # ...with a huge error bar
        fit = fit_single_exponential(m, noisy, stderrs)
        assert fit.rate == pytest.approx(0.9, abs=1e-3)

    def test_needs_three_lengths(self):
        with pytest.raises(FitFailureError):
            fit_single_exponential([1, 2], [0.5, 0.25])

    def test_needs_two_positive_values(self):
        with pytest.raises(FitFailureError):
            fit_single_exponential([1, 2, 3], [0.5, -0.1, -0.2])

    def test_zero_stderr_falls_back_unweighted(self):
        m = np.arange(1, 10)
        fit = fit_single_exponential(m, 0.5 * 0.9**m, np.zeros(m.size))
        assert fit.rate == pytest.approx(0.9, abs=1e-9)

    def test_recovery_grid(self):
        # Noiseless synthetic recovery across amplitudes, rates, lengths.
        m = np.array([1, 2, 4, 8, 16, 32, 64, 128, 256, 300])
        for a in (0.25, 0.5, 1.0):
            for p in (0.9, 0.99, 0.999):
                fit = fit_single_exponential(m, a * p ** m.astype(float))
                assert abs(fit.rate - p) < 1e-6
                assert fit.amplitude == pytest.approx(a, rel=1e-4)


class TestFitExponentialWithOffset:
    def test_recovery(self):
        m = np.arange(1, 40)
        y = 0.4 * 0.9**m + 0.25
        fit = fit_exponential_with_offset(m, y)
        assert fit.rate == pytest.approx(0.9, abs=1e-6)
        assert fit.amplitude == pytest.approx(0.4, abs=1e-6)
        assert fit.offset == pytest.approx(0.25, abs=1e-6)

    def test_needs_four_points(self):
        with pytest.raises(FitFailureError):
            fit_exponential_with_offset([1, 2, 3], [1.0, 0.8, 0.7])


class TestAssembleStandard:
    def _fit(self, amplitude, rate):
        return fit_single_exponential(
            np.array([1, 2, 4, 8, 16]), amplitude * rate ** np.array([1.0, 2, 4, 8, 16])
        )

    def test_perfect_rates(self):
        report = assemble_standard(self._fit(2.0, 1.0), self._fit(1.0, 1.0), j=8)
        assert report.average_fidelity == pytest.approx(1.0)

    def test_pure_dephasing_limit(self):
        # z rate 1, plane rate 0 is the fully dephasing channel: F = 2/3.
        from dihedral_rb.estimation import combined_fidelity

        assert combined_fidelity(1.0, 0.0) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_monotone_in_both_rates(self):
        f = lambda z, xy: assemble_standard(self._fit(1, z), self._fit(1, xy), j=8).average_fidelity
        assert f(0.9, 0.9) < f(0.95, 0.9) < f(0.95, 0.95)

    def test_error_propagation_formula(self):
        report = assemble_standard(
            self._fit(2.0, 0.99), self._fit(1.0, 0.98), j=8, z_rate_stderr=0.003, xy_rate_stderr=0.004
        )
        assert report.average_fidelity_stderr == pytest.approx(
            np.sqrt(0.003**2 + 4 * 0.004**2) / 6
        )


def run_dataset(p=0.92, j=4, k=60, lengths=(1, 2, 4, 8, 16, 32), shots=0, seed=5):
    plan = ExperimentPlan(
        j=j,
        mode="standard",
        lengths=lengths,
        sequences_per_length=k,
        shots=shots,
        prep=state_vector(XZ),
        measurement=effect_vector(XZ),
        noise=GateNoiseMap(depolarizing_spec(p=p)),
        seed=seed,
    )
    return decay_dataset(plan)


class TestFitStandard:
    def test_depolarizing_recovery_exact_mode(self):
        p = 0.92
        report = fit_standard(run_dataset(p=p), n_resamples=50)
        assert report.z_rate == pytest.approx(p, abs=1e-9)
        assert report.xy_rate == pytest.approx(p, abs=1e-9)
        assert report.average_fidelity == pytest.approx((1 + p) / 2, abs=1e-9)
        # 45-degree preparation and measurement: the SPAM constants carry
        # one factor of the inversion gate's noise, so 4A = p and 2B = p/2.
        assert report.z_amplitude == pytest.approx(p, abs=1e-9)
        assert report.xy_amplitude == pytest.approx(p / 2, abs=1e-9)

    def test_bootstrap_reports_spread_with_shot_noise(self):
        report = fit_standard(run_dataset(shots=200, k=100), n_resamples=100)
        assert report.z_rate_stderr > 0
        assert report.xy_rate_stderr > 0
        lo, hi = report.average_fidelity_ci
        assert lo < report.average_fidelity < hi
        assert lo < 0.96 < hi  # truth inside the percentile interval
        assert report.diagnostics["bootstrap_resamples"] == 100

    def test_bootstrap_deterministic(self):
        ds = run_dataset(shots=100, k=50)
        a = fit_standard(ds, n_resamples=40)
        b = fit_standard(ds, n_resamples=40)
        assert a.z_rate_stderr == b.z_rate_stderr
        assert a.average_fidelity_ci == b.average_fidelity_ci

    def test_odd_group_fallback(self):
        p = 0.9
        plan = ExperimentPlan(
            j=3,
            mode="standard",
            lengths=(1, 2, 4, 8, 16, 32),
            sequences_per_length=60,
            shots=0,
            prep=state_vector(XZ),
            measurement=effect_vector(XZ),
            noise=GateNoiseMap(depolarizing_spec(p=p)),
            seed=5,
        )
        report = fit_standard(decay_dataset(plan), n_resamples=25)
        assert report.diagnostics["odd_j_fallback"] is True
        assert report.z_rate == pytest.approx(p, abs=1e-6)
        assert report.xy_rate == pytest.approx(p, abs=1e-6)
        assert report.average_fidelity == pytest.approx((1 + p) / 2, abs=1e-6)


class TestInterleavedBound:
    def test_perfect_reference_collapses_interval(self):
        result = interleaved_bound(0.93, 1.0)
        assert result.chi_point == pytest.approx(0.93)
        assert result.fidelity_low == pytest.approx(chi_to_fidelity(0.93), abs=1e-7)
        assert result.fidelity_high == pytest.approx(chi_to_fidelity(0.93), abs=1e-7)

    def test_identity_target(self):
        result = interleaved_bound(0.985, 0.985)
        assert result.chi_point == pytest.approx(1.0)
        assert result.fidelity_point == pytest.approx(1.0)
        assert result.fidelity_high == pytest.approx(1.0)

    def test_interval_contains_point(self, rng):
        for _ in range(200):
            c = rng.uniform(0.3, 1.0)
            y = rng.uniform(0.2, 1.0) * c  # ratio in (0, 1]
            result = interleaved_bound(y, c)
            assert result.fidelity_low - 1e-7 <= result.fidelity_point <= result.fidelity_high + 1e-7

    def test_regime2_geometry(self):
        # Equal over-rotations (fidelity 0.99 each) about an axis tilted 60
        # degrees from z: frozen endpoints from the exact channel algebra.
        theta = np.arccos(3 * 0.99 - 2)
        axis = (np.sqrt(3) / 2, 0.0, 0.5)
        t_axis = (np.sqrt(3) / 2 * np.cos(np.pi / 4), np.sqrt(3) / 2 * np.sin(np.pi / 4), 0.5)
        lam = (
            over_rotation_spec(axis, angle=theta).superoperator()
            @ over_rotation_spec(t_axis, angle=theta).superoperator()
        )
        chi_comp = fidelity_to_chi(avg_fidelity(lam))
        result = interleaved_bound(chi_comp, 0.985)
        assert result.fidelity_point == pytest.approx(0.97449, abs=2e-4)
        assert result.fidelity_low == pytest.approx(0.91971, abs=2e-4)
        assert result.fidelity_high == pytest.approx(0.99225, abs=2e-4)
        assert result.fidelity_low <= 0.99 <= result.fidelity_high

    def test_rejects_zero_reference(self):
        with pytest.raises(ValueError):
            interleaved_bound(0.9, 0.0)

    def test_bound_inequality_on_random_channel_pairs(self, rng):
        # Direct numeric check of the inequality the estimator inverts.
        for _ in range(100):
            a, b = random_cptp_superop(rng), random_cptp_superop(rng)
            chi_a = fidelity_to_chi(avg_fidelity(a))
            chi_b = fidelity_to_chi(avg_fidelity(b))
            chi_ab = fidelity_to_chi(avg_fidelity(a @ b))
            slack = 2 * np.sqrt(
                max((1 - chi_a) * chi_a * (1 - chi_b) * chi_b, 0.0)
            ) + (1 - chi_a) * (1 - chi_b)
            assert abs(chi_ab - chi_a * chi_b) <= slack + 1e-10


class TestAssembleInterleaved:
    def _report(self, f, f_err=1e-4, j=4):
        m = np.array([2.0, 4, 8, 16, 32])
        rate = 2 * f - 1  # any consistent pair of rates works here
        fit = fit_single_exponential(m, 0.5 * rate**m)
        report = assemble_standard(fit, fit, j=j)
        report.average_fidelity = f
        report.average_fidelity_stderr = f_err
        return report

    def test_identity_error_gives_unit_fidelity(self):
        reference = self._report(0.99)
        interleaved = self._report(0.99)
        out = assemble_interleaved(reference, interleaved)
        assert out.t_fidelity == pytest.approx(1.0)
        assert out.t_interval[1] == pytest.approx(1.0)

    def test_regime1_style_estimate(self):
        theta_t = np.arccos(3 * 0.99 - 2)
        theta_c = np.arccos(3 * (1 - 1e-6) - 2)
        f_comp = 0.5 + (1 + 2 * np.cos(theta_t + theta_c)) / 6
        out = assemble_interleaved(self._report(1 - 1e-6), self._report(f_comp))
        assert out.t_fidelity == pytest.approx(0.9898, abs=5e-4)
        assert out.mode == "interleaved"
        assert out.reference_fidelity == pytest.approx(1 - 1e-6)

    def test_error_propagation(self):
        out = assemble_interleaved(self._report(0.99, 1e-3), self._report(0.96, 2e-3))
        assert out.t_fidelity_stderr > 0
        assert out.t_interval[0] <= out.t_fidelity <= out.t_interval[1]

    def test_rejects_useless_fidelities(self):
        with pytest.raises(FitFailureError):
            assemble_interleaved(self._report(0.4), self._report(0.3))
