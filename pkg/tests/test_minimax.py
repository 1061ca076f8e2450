"""
Tests for Gaussian-input mutual information under adversarial phases.

This module tests:
- Output variance and mutual information at fixed phases
- Worst-case phases: closed forms, grid and descent
- Independence optimality of the input correlation
- Ergodic averages and finite-constellation estimates
"""

import math

import numpy as np
import pytest

from conftest import *

from pisep.errors import ArgumentError, ValidationError
from pisep.minimax import (
    DiscreteInput,
    GaussianInputSpec,
    ergodic_avg_mi,
    ergodic_avg_mi_closed_form,
    grid_min_theta_mi,
    mi_discrete_input,
    mi_gaussian,
    min_theta_mi,
    sample_correlation_matrices,
    sigma_v_sq,
    verify_independence_optimal,
)
from pisep.model import PhaseVector

FULLY_CORRELATED = np.array([[1.0, 1.0], [1.0, 1.0]])
GOLDEN_RATIO_BITS = math.log2((3.0 + math.sqrt(5.0)) / 2.0)


def unit_pair(rho=None):
    return GaussianInputSpec((1.0, 1.0), (1.0, 1.0), 1.0, rho)


class TestGaussianInputSpec:
    """Validation of the input correlation matrix."""

    def test_defaults_to_identity(self):
        spec = unit_pair()
        np.testing.assert_array_equal(spec.rho, np.eye(2))
        assert spec.is_uncorrelated

    def test_rejects_magnitude_above_one(self):
        with pytest.raises(ValidationError) as excinfo:
            unit_pair(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert excinfo.value.field == "rho"

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError, match="Hermitian"):
            unit_pair(np.array([[1.0, 0.5j], [0.5j, 1.0]]))

    def test_rejects_indefinite(self):
        rho = np.array([[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]])
        with pytest.raises(ValidationError, match="positive semidefinite"):
            GaussianInputSpec((1.0,) * 3, (1.0,) * 3, 1.0, rho)

    def test_rejects_zero_noise(self):
        with pytest.raises(ValidationError):
            GaussianInputSpec((1.0,), (1.0,), 0.0)


class TestFixedPhase:
    """Variance and mutual information at a given phase vector."""

    def test_uncorrelated_variance_ignores_phase(self, rng):
        spec = GaussianInputSpec((1.5, 0.5), (2.0, 3.0), 0.7)
        for _ in range(5):
            theta = rng.uniform(0, 2 * math.pi, size=2)
            assert sigma_v_sq(spec, theta) == pytest.approx(1.5 ** 2 * 2 + 0.5 ** 2 * 3 + 0.7)

    def test_correlated_in_phase(self):
        assert sigma_v_sq(unit_pair(FULLY_CORRELATED), (0.3, 0.3)) == pytest.approx(5.0)

    def test_correlated_opposite_phase(self):
        spec = unit_pair(FULLY_CORRELATED)
        assert sigma_v_sq(spec, (math.pi, 0.0)) == pytest.approx(1.0)
        assert mi_gaussian(spec, PhaseVector((math.pi, 0.0))) == pytest.approx(0.0, abs=1e-12)

    def test_unit_independent(self):
        assert mi_gaussian(unit_pair(), (0.0, 1.0)) == pytest.approx(LOG2_3)

    def test_zero_gains(self):
        spec = GaussianInputSpec((0.0, 0.0), (1.0, 1.0), 1.0, FULLY_CORRELATED)
        assert mi_gaussian(spec, (1.0, 2.0)) == 0.0

    def test_wrong_length(self):
        with pytest.raises(ValidationError):
            mi_gaussian(unit_pair(), (0.0, 0.0, 0.0))


class TestMinThetaMI:
    """Adversarial minimization over phases."""

    def test_independent_closed_form(self):
        result = min_theta_mi(unit_pair())
        assert result.value == pytest.approx(LOG2_3)
        assert result.method == "closed_form"

    def test_fully_correlated_pair(self):
        result = min_theta_mi(unit_pair(FULLY_CORRELATED))
        assert result.value == pytest.approx(0.0, abs=1e-12)
        first, second = result.argmin_phases.phases
        assert (first - second) % (2 * math.pi) == pytest.approx(math.pi)

    def test_two_branch_closed_form_matches_descent(self):
        rho12 = 0.5 * np.exp(0.7j)
        spec = GaussianInputSpec((1.0, 2.0), (1.5, 0.5), 0.8,
                                 np.array([[1.0, rho12], [np.conj(rho12), 1.0]]))
        closed = min_theta_mi(spec)
        numeric = min_theta_mi(spec, method="descent")
        assert closed.method == "closed_form"
        assert numeric.method == "descent"
        assert numeric.value == pytest.approx(closed.value, abs=1e-8)
        assert mi_gaussian(spec, closed.argmin_phases) == pytest.approx(closed.value, abs=1e-12)

    def test_two_branch_closed_form_matches_descent_on_random_channels(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            rho12 = rng.uniform(0.05, 0.95) * np.exp(1j * rng.uniform(0, 2 * math.pi))
            spec = GaussianInputSpec(tuple(rng.uniform(0.05, 3.0, 2)), tuple(rng.uniform(0.1, 5.0, 2)),
                                     float(rng.uniform(0.2, 4.0)),
                                     np.array([[1.0, rho12], [np.conj(rho12), 1.0]]))
            closed = min_theta_mi(spec)
            numeric = min_theta_mi(spec, method="descent")
            assert numeric.value == pytest.approx(closed.value, abs=1e-9), seed
            assert mi_gaussian(spec, closed.argmin_phases) == pytest.approx(closed.value, abs=1e-12)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(1, 11))
    def test_three_branches_descent_not_worse_than_grid(self, seed):
        rng = np.random.default_rng(seed)
        rho = sample_correlation_matrices(3, 1, seed)[0]
        spec = GaussianInputSpec(tuple(rng.uniform(0.3, 2.0, 3)), tuple(rng.uniform(0.5, 2.0, 3)),
                                 float(rng.uniform(0.5, 2.0)), rho)
        grid = grid_min_theta_mi(spec, grid_points=64)
        descent = min_theta_mi(spec, grid_points=64)
        assert descent.method == "descent"
        assert descent.value <= grid.value + 1e-6
        assert descent.value >= 0.0
        assert mi_gaussian(spec, descent.argmin_phases) == pytest.approx(descent.value, abs=1e-12)

    def test_unrefined_returns_grid_cell(self):
        rho = sample_correlation_matrices(3, 1, 9)[0]
        spec = GaussianInputSpec((1.0,) * 3, (1.0,) * 3, 1.0, rho)
        result = min_theta_mi(spec, grid_points=16, refine=False)
        assert result.method == "grid"
        assert result.grid_resolution == 16
        assert result.argmin_phases.phases[0] == 0.0

    def test_threaded_descent_agrees(self):
        rho = sample_correlation_matrices(3, 1, 4)[0]
        spec = GaussianInputSpec((1.0, 0.5, 2.0), (1.0, 2.0, 0.5), 1.0, rho)
        serial = min_theta_mi(spec, grid_points=16)
        threaded = min_theta_mi(spec, grid_points=16, workers=4)
        assert threaded.value == serial.value

    def test_bad_options(self):
        with pytest.raises(ArgumentError):
            min_theta_mi(unit_pair(), method="anneal")
        rho = sample_correlation_matrices(3, 1, 0)[0]
        with pytest.raises(ArgumentError):
            min_theta_mi(GaussianInputSpec((1.0,) * 3, (1.0,) * 3, 1.0, rho), grid_points=1)


class TestIndependenceOptimal:
    """Independent inputs maximize the worst-phase information."""

    def test_two_branch_unit(self):
        report = verify_independence_optimal((1.0, 1.0), (1.0, 1.0), 1.0, rho_samples=20, seed=5)
        assert report.holds
        assert report.max_over_rho_of_min == pytest.approx(LOG2_3)
        assert report.independent_value == pytest.approx(LOG2_3)
        np.testing.assert_allclose(report.witness_rho, np.eye(2))
        assert report.samples == 22

    def test_half_correlation_only(self):
        rho = np.array([[1.0, 0.5], [0.5, 1.0]])
        report = verify_independence_optimal((1.0, 1.0), (1.0, 1.0), 1.0, rho_samples=1, seed=0,
                                             rhos=[rho], augment=False)
        assert report.max_over_rho_of_min == pytest.approx(1.0)
        assert report.max_over_rho_of_min < report.independent_value

    def test_three_branches(self):
        report = verify_independence_optimal((1.0, 0.8, 1.2), (1.0, 1.0, 1.0), 1.0,
                                             rho_samples=4, seed=11, grid_points=16)
        assert report.holds
        assert report.max_over_rho_of_min == pytest.approx(report.independent_value)
        assert len(report.values) == 6

    def test_two_branch_many_correlations(self):
        report = verify_independence_optimal((1.3, 0.7), (2.0, 0.5), 0.9, rho_samples=200, seed=6)
        assert report.samples == 202
        assert report.holds
        assert report.max_over_rho_of_min == pytest.approx(report.independent_value)
        assert max(report.values) <= report.independent_value + 1e-9

    @pytest.mark.slow
    def test_three_branches_many_correlations(self):
        report = verify_independence_optimal((1.0, 0.8, 1.2), (1.0, 2.0, 0.5), 1.0,
                                             rho_samples=200, seed=13, grid_points=16)
        assert report.samples == 202
        assert report.holds
        assert report.max_over_rho_of_min == pytest.approx(report.independent_value)

    def test_sampled_matrices_are_valid(self):
        for rho in sample_correlation_matrices(4, 10, seed=3):
            GaussianInputSpec((1.0,) * 4, (1.0,) * 4, 1.0, rho)
            np.testing.assert_allclose(np.diag(rho).real, 1.0)

    def test_needs_samples(self):
        with pytest.raises(ArgumentError):
            verify_independence_optimal((1.0, 1.0), (1.0, 1.0), 1.0, rho_samples=0, seed=0)

    def test_report_serializes_complex_witness(self):
        report = verify_independence_optimal((1.0, 1.0), (1.0, 1.0), 1.0, rho_samples=2, seed=1)
        witness = report.as_dict()["witness_rho"]
        assert witness[0][0] == [1.0, 0.0]


class TestErgodicAverage:
    """Averages over uniform phases."""

    def test_independent(self):
        estimate = ergodic_avg_mi(unit_pair())
        assert estimate.value == pytest.approx(LOG2_3)
        assert estimate.method == "closed_form"

    def test_fully_correlated_quadrature(self):
        estimate = ergodic_avg_mi(unit_pair(FULLY_CORRELATED))
        assert estimate.method == "quadrature"
        assert estimate.value == pytest.approx(1.3885, abs=1e-4)
        assert estimate.value == pytest.approx(GOLDEN_RATIO_BITS, abs=1e-9)

    def test_closed_form_oracle(self):
        assert ergodic_avg_mi_closed_form(unit_pair(FULLY_CORRELATED)) == \
            pytest.approx(GOLDEN_RATIO_BITS, abs=1e-12)

    def test_monte_carlo_within_three_stderr(self):
        spec = unit_pair(FULLY_CORRELATED)
        estimate = ergodic_avg_mi(spec, method="monte_carlo", mc_samples=100_000, seed=3)
        assert estimate.stderr > 0
        assert abs(estimate.value - GOLDEN_RATIO_BITS) <= 3 * estimate.stderr

    def test_monte_carlo_reproducible(self):
        spec = unit_pair(FULLY_CORRELATED)
        a = ergodic_avg_mi(spec, method="monte_carlo", mc_samples=1000, seed=8)
        b = ergodic_avg_mi(spec, method="monte_carlo", mc_samples=1000, seed=8)
        assert a == b

    def test_average_not_below_worst_case(self):
        rho = sample_correlation_matrices(3, 1, 2)[0]
        spec = GaussianInputSpec((1.0, 1.0, 1.0), (1.0, 1.0, 1.0), 1.0, rho)
        average = ergodic_avg_mi(spec, mc_samples=20_000, seed=1)
        assert average.method == "monte_carlo"
        assert average.value >= min_theta_mi(spec, grid_points=16).value

    def test_quadrature_needs_two_branches(self):
        rho = sample_correlation_matrices(3, 1, 2)[0]
        spec = GaussianInputSpec((1.0,) * 3, (1.0,) * 3, 1.0, rho)
        with pytest.raises(ArgumentError):
            ergodic_avg_mi(spec, method="quadrature")


class TestDiscreteInput:
    """Monte-Carlo mutual information of finite constellations."""

    def test_single_point_is_zero(self):
        point = DiscreteInput(np.array([[1.0]]), np.array([1.0]))
        estimate = mi_discrete_input(point, (1.0,), (0.0,), 1.0)
        assert estimate.value == 0.0
        assert estimate.method == "exact"

    def test_bpsk_low_snr(self):
        estimate = mi_discrete_input(DiscreteInput.bpsk(), (1.0,), (0.0,), 100.0, seed=2)
        assert estimate.value < 0.05

    def test_bpsk_high_snr(self):
        estimate = mi_discrete_input(DiscreteInput.bpsk(), (1.0,), (0.0,), 0.01, seed=2)
        assert estimate.value > 0.95

    def test_gaussian_upper_bound(self):
        constellation = DiscreteInput.product(DiscreteInput.bpsk(), DiscreteInput.bpsk())
        np.testing.assert_allclose(constellation.average_powers(), [1.0, 1.0])
        estimate = mi_discrete_input(constellation, (1.0, 1.0), (0.0, 0.4), 1.0, seed=4)
        assert estimate.value <= LOG2_3 + 3 * estimate.stderr

    def test_product_shape(self):
        constellation = DiscreteInput.product(DiscreteInput.bpsk(), DiscreteInput.bpsk(2.0))
        assert constellation.points.shape == (4, 2)
        np.testing.assert_allclose(constellation.priors, [0.25] * 4)

    def test_invalid_priors(self):
        with pytest.raises(ValidationError):
            DiscreteInput(np.array([[1.0], [-1.0]]), np.array([0.7, 0.7]))

    def test_branch_mismatch(self):
        with pytest.raises(ValidationError):
            mi_discrete_input(DiscreteInput.bpsk(), (1.0, 1.0), (0.0, 0.0), 1.0)
