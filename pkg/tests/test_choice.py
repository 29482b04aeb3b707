import math

import numpy as np
import pytest

from revpref.errors import DataValidationError, OnBoundaryError
from revpref.ingestion.dataset import StochasticDataset
from revpref.stochastic.choice import (
    ChoiceProbabilities,
    bootstrap_pvalue,
    compute_jn,
    default_tau,
    estimate_pi,
    validate_tau,
)
from revpref.stochastic.patches import enumerate_patches
from revpref.stochastic.types_matrix import TypeMatrix
from tests.conftest import CROSSING_PRICES, crossing_choices


def _grid_jn(pi: np.ndarray, A: np.ndarray, n: int, step: float) -> float:
    """Minimum of ``n * ||pi - A nu||^2`` over ``nu >= 0`` by a coarse grid refined to ``step``."""
    H = A.shape[1]

    def search(axes):
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, H)
        values = np.sum((pi[None, :] - mesh @ A.T) ** 2, axis=1)
        k = int(np.argmin(values))
        return mesh[k], float(values[k])

    coarse = 0.01
    best, _ = search([np.arange(0.0, 1.2 + coarse / 2, coarse)] * H)
    fine = [np.clip(np.arange(c - 3 * coarse, c + 3 * coarse + step / 2, step), 0.0, None) for c in best]
    _, value = search([np.unique(np.round(axis / step) * step) for axis in fine])
    return n * value


class TestEstimatePi:
    def test_frequencies(self, rationalizable_choices, crossing_layout):
        pi = estimate_pi(rationalizable_choices, crossing_layout)
        np.testing.assert_allclose(pi.stacked, [0.4, 0.6, 0.5, 0.5])
        np.testing.assert_array_equal(pi.sample_sizes, [10, 10])
        np.testing.assert_array_equal(pi.dropped_on_boundary, [0, 0])
        assert pi.total_n == 20
        np.testing.assert_allclose(pi.block(1), [0.5, 0.5])

    def test_scale_invariance(self, crossing_layout):
        a = estimate_pi(crossing_choices((4, 6, 5, 5), scales=(1.0, 1.0)), crossing_layout)
        b = estimate_pi(crossing_choices((4, 6, 5, 5), scales=(30.0, 0.01)), crossing_layout)
        np.testing.assert_array_equal(a.stacked, b.stacked)

    def test_boundary_drop(self, rationalizable_choices, crossing_layout):
        block0 = np.vstack([rationalizable_choices.choices[0], [[2 / 3, 2 / 3]]])
        data = StochasticDataset(CROSSING_PRICES, (block0, rationalizable_choices.choices[1]))
        pi = estimate_pi(data, crossing_layout, boundary="drop")
        np.testing.assert_array_equal(pi.dropped_on_boundary, [1, 0])
        np.testing.assert_allclose(pi.stacked, [0.4, 0.6, 0.5, 0.5])

    def test_boundary_abort(self, rationalizable_choices, crossing_layout):
        block0 = np.vstack([[[2 / 3, 2 / 3]], rationalizable_choices.choices[0]])
        data = StochasticDataset(CROSSING_PRICES, (block0, rationalizable_choices.choices[1]))
        with pytest.raises(OnBoundaryError):
            estimate_pi(data, crossing_layout, boundary="abort")

    def test_all_on_boundary(self, crossing_layout):
        data = StochasticDataset(CROSSING_PRICES, ([[1 / 3, 1 / 3]], [[1.0, 1.0]]))
        with pytest.raises(DataValidationError, match="no choices off the budget"):
            estimate_pi(data, crossing_layout)

    def test_unknown_policy(self, rationalizable_choices, crossing_layout):
        with pytest.raises(DataValidationError):
            estimate_pi(rationalizable_choices, crossing_layout, boundary="keep")

    def test_layout_from_other_prices(self, rationalizable_choices):
        other = enumerate_patches([[2.0, 1.0], [1.0, 3.0]])
        with pytest.raises(DataValidationError):
            estimate_pi(rationalizable_choices, other)


class TestChoiceProbabilities:
    def test_block_must_sum_to_one(self):
        with pytest.raises(DataValidationError):
            ChoiceProbabilities([0.5, 0.4], (2,), [10])

    def test_block_counts_must_match(self):
        with pytest.raises(DataValidationError):
            ChoiceProbabilities([0.5, 0.5], (3,), [10])

    def test_resample_needs_assignments(self):
        pi = ChoiceProbabilities([0.5, 0.5], (2,), [10])
        with pytest.raises(DataValidationError):
            pi.resample(np.random.default_rng(0))

    def test_resample_blocks_are_probabilities(self, rationalizable_choices, crossing_layout):
        pi = estimate_pi(rationalizable_choices, crossing_layout)
        draw = pi.resample(np.random.default_rng(1))
        assert draw[:2].sum() == pytest.approx(1.0)
        assert draw[2:].sum() == pytest.approx(1.0)
        np.testing.assert_allclose(draw * 10, np.round(draw * 10))


class TestJN:
    def test_rationalizable(self, rationalizable_choices, crossing_layout, crossing_types):
        pi = estimate_pi(rationalizable_choices, crossing_layout)
        result = compute_jn(pi, crossing_types)
        assert result.jn == pytest.approx(0.0, abs=1e-12)
        assert result.rationalizable
        np.testing.assert_allclose(result.nu_hat, [0.4, 0.5, 0.1], atol=1e-10)
        np.testing.assert_allclose(result.eta_hat, pi.stacked, atol=1e-10)

    def test_column_order_follows_assignments(self, rationalizable_choices, crossing_layout):
        pi = estimate_pi(rationalizable_choices, crossing_layout)
        reordered = TypeMatrix(np.array([[1, 1], [1, 0], [0, 1]]), crossing_layout)
        result = compute_jn(pi, reordered)
        np.testing.assert_allclose(result.nu_hat, [0.1, 0.5, 0.4], atol=1e-10)

    def test_violation(self, violating_choices, crossing_layout, crossing_types):
        pi = estimate_pi(violating_choices, crossing_layout)
        result = compute_jn(pi, crossing_types)
        assert result.jn == pytest.approx(0.2)
        assert not result.rationalizable
        np.testing.assert_allclose(result.nu_hat, [0.55, 0.45, 0.0], atol=1e-10)
        np.testing.assert_allclose(result.eta_hat, [0.55, 0.45, 0.45, 0.55], atol=1e-10)

    @pytest.mark.parametrize("counts", [(6, 4, 5, 5), (60, 40, 50, 50), (7, 3, 6, 4)])
    def test_matches_grid_search(self, counts, crossing_layout, crossing_types):
        pi = estimate_pi(crossing_choices(counts), crossing_layout)
        result = compute_jn(pi, crossing_types)
        grid = _grid_jn(pi.stacked, crossing_types.matrix.astype(float), pi.total_n, 0.001)
        assert result.jn > 0.0
        assert result.jn <= grid + 1e-9
        assert grid == pytest.approx(result.jn, abs=1e-5)

    def test_jn_scales_with_n(self, crossing_layout, crossing_types):
        small = estimate_pi(crossing_choices((6, 4, 5, 5)), crossing_layout)
        large = estimate_pi(crossing_choices((60, 40, 50, 50)), crossing_layout)
        assert compute_jn(large, crossing_types).jn == pytest.approx(
            10 * compute_jn(small, crossing_types).jn
        )

    def test_omega_scaling(self, violating_choices, crossing_layout, crossing_types):
        pi = estimate_pi(violating_choices, crossing_layout)
        base = compute_jn(pi, crossing_types)
        scaled = compute_jn(pi, crossing_types, omega=np.full(4, 4.0))
        assert scaled.jn == pytest.approx(4 * base.jn)
        assert scaled.omega == "diag"

    def test_omega_validation(self, violating_choices, crossing_layout, crossing_types):
        pi = estimate_pi(violating_choices, crossing_layout)
        with pytest.raises(DataValidationError):
            compute_jn(pi, crossing_types, omega=np.ones(3))
        with pytest.raises(DataValidationError):
            compute_jn(pi, crossing_types, omega=np.array([1.0, 1.0, 0.0, 1.0]))

    def test_dimension_mismatch(self, crossing_types):
        pi = ChoiceProbabilities([1.0], (1,), [5])
        with pytest.raises(DataValidationError):
            compute_jn(pi, crossing_types)


class TestTau:
    def test_default(self):
        assert default_tau(100) == pytest.approx(math.sqrt(math.log(100) / 100))

    def test_default_needs_two_observations(self):
        with pytest.raises(DataValidationError):
            default_tau(1)

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.1])
    def test_range(self, tau):
        with pytest.raises(DataValidationError):
            validate_tau(tau)


class TestBootstrap:
    def test_zero_statistic_accepts(self, rationalizable_choices, crossing_layout, crossing_types):
        result = bootstrap_pvalue(
            rationalizable_choices, crossing_layout, crossing_types, replications=20, seed=1
        )
        assert result.p_value == 1.0
        assert result.bootstrap_stats is None
        assert result.tau == pytest.approx(default_tau(20))

    def test_pvalue_formula(self, violating_choices, crossing_layout, crossing_types):
        result = bootstrap_pvalue(
            violating_choices, crossing_layout, crossing_types, replications=40, seed=3, tau=0.2
        )
        stats = result.bootstrap_stats
        assert stats.shape == (40,)
        assert np.all(stats >= -1e-12)
        expected = (1 + np.sum(stats >= result.jn)) / 41
        assert result.p_value == pytest.approx(expected)
        assert 0.0 < result.p_value <= 1.0

    def test_identical_across_threads(self, violating_choices, crossing_layout, crossing_types):
        kwargs = dict(replications=30, seed=11, tau=0.2)
        one = bootstrap_pvalue(violating_choices, crossing_layout, crossing_types, threads=1, **kwargs)
        four = bootstrap_pvalue(violating_choices, crossing_layout, crossing_types, threads=4, **kwargs)
        assert one.p_value == four.p_value
        assert one.bootstrap_stats.tobytes() == four.bootstrap_stats.tobytes()

    def test_rejects_zero_replications(self, violating_choices, crossing_layout, crossing_types):
        with pytest.raises(DataValidationError):
            bootstrap_pvalue(violating_choices, crossing_layout, crossing_types, replications=0)

    def test_rejects_tau_out_of_range(self, violating_choices, crossing_layout, crossing_types):
        with pytest.raises(DataValidationError):
            bootstrap_pvalue(
                violating_choices, crossing_layout, crossing_types, replications=5, tau=1.5
            )

    def test_to_dict(self, violating_choices, crossing_layout, crossing_types):
        result = bootstrap_pvalue(
            violating_choices, crossing_layout, crossing_types, replications=5, seed=2
        )
        d = result.to_dict()
        assert set(d) >= {"jn", "p_value", "nu_hat", "eta_hat", "tau", "replications", "seed"}
        assert d["replications"] == 5
