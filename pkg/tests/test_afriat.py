import dataclasses

import numpy as np
import pytest

from revpref.deterministic.afriat import (
    AfriatSolution,
    PricePreference,
    build_augmented_utility,
    evaluate_utility,
    price_preference_query,
    rationalization_ranks_above,
    solve_afriat,
    verify_rationalization,
)
from revpref.deterministic.relations import check_gapp, check_garp
from revpref.errors import DataValidationError, RationalityViolationError
from revpref.ingestion.dataset import DeterministicDataset
from revpref.stochastic.simulate import QuasilinearSpec, gen_quasilinear


def _random_panels(seed: int, count: int, passing) -> list[DeterministicDataset]:
    """``count`` random data sets accepted by ``passing``."""
    rng = np.random.default_rng(seed)
    panels = []
    while len(panels) < count:
        T = int(rng.integers(2, 6))
        L = int(rng.integers(2, 4))
        data = DeterministicDataset(
            rng.uniform(0.5, 2.0, size=(T, L)), rng.uniform(0.0, 3.0, size=(T, L)) + 0.01
        )
        if passing(data):
            panels.append(data)
    return panels


class TestAfriatNumbers:
    def test_example1(self, example1):
        sol = solve_afriat(example1)
        assert sol.phi[0] == 0.0
        assert np.all(sol.lam >= 1.0)
        assert sol.max_residual(example1) <= 1e-9

    def test_residuals_on_random_garp_data(self):
        for data in _random_panels(31, 200, lambda d: check_garp(d).passes):
            sol = solve_afriat(data)
            assert sol.phi[0] == 0.0
            assert np.all(sol.lam >= 1.0)
            assert sol.max_residual(data) <= 1e-9

    def test_utility_at_observed_bundles(self, example1):
        sol = solve_afriat(example1)
        np.testing.assert_allclose(evaluate_utility(sol, example1, example1.bundles), sol.phi)

    def test_affordable_bundles_are_not_better(self):
        rng = np.random.default_rng(8)
        data = DeterministicDataset(
            [[1.0, 2.0, 1.0], [2.0, 1.0, 1.0], [1.0, 1.0, 2.0]],
            [[3.0, 0.5, 1.0], [0.5, 3.0, 1.0], [1.0, 1.0, 0.5]],
        )
        sol = solve_afriat(data)
        for t in range(data.T):
            own = evaluate_utility(sol, data, data.bundles[t])
            draws = rng.dirichlet(np.ones(3), size=200) * data.expenditures[t] / data.prices[t]
            assert np.all(evaluate_utility(sol, data, draws) <= own + 1e-9)

    def test_garp_violation_carries_witness(self, example2):
        with pytest.raises(RationalityViolationError) as err:
            solve_afriat(example2)
        assert err.value.axiom == "GARP"
        assert sorted(err.value.witness.sequence) == [0, 1]

    def test_wrong_dimension(self, example1):
        sol = solve_afriat(example1)
        with pytest.raises(DataValidationError):
            evaluate_utility(sol, example1, [1.0, 2.0, 3.0])


class TestAugmentedUtility:
    def test_augmented_data(self, example2):
        u = build_augmented_utility(example2)
        assert u.budget_constant == pytest.approx(16.0)
        np.testing.assert_allclose(u.augmented.bundles, [[2, 1, 11], [0, 2, 8]])
        np.testing.assert_allclose(u.augmented.cross_expenditures, [[16, 10], [17, 16]])

    def test_afriat_numbers_of_augmented_data(self, example2):
        u = build_augmented_utility(example2)
        np.testing.assert_allclose(u.base.lam, [1.0, 6.0], atol=1e-9)
        np.testing.assert_allclose(u.base.phi, [0.0, -6.0], atol=1e-9)

    def test_gapp_violation(self, example1):
        with pytest.raises(RationalityViolationError) as err:
            build_augmented_utility(example1)
        assert err.value.axiom == "GAPP"

    def test_decreasing_in_expenditure(self, example2):
        u = build_augmented_utility(example2)
        x = np.array([1.0, 1.0])
        assert u.evaluate(x, 5.0) > u.evaluate(x, 6.0)

    def test_penalty_beyond_budget_constant(self, example2):
        u = build_augmented_utility(example2)
        x = np.array([1.0, 1.0])
        envelope = evaluate_utility(u.base, u.augmented, np.array([1.0, 1.0, -2.0]))
        assert u.evaluate(x, 18.0) == pytest.approx(envelope - 8.0)

    def test_batch_evaluation(self, example2):
        u = build_augmented_utility(example2)
        values = u.evaluate(example2.bundles, example2.expenditures)
        assert values.shape == (2,)
        assert values[0] == pytest.approx(u.evaluate(example2.bundles[0], 5.0))

    def test_indirect_utility_at_observed_prices(self, example2):
        u = build_augmented_utility(example2)
        value, argmax = u.indirect_utility(example2.prices[0], grid_radius=2.0, grid_points=3)
        assert value == pytest.approx(u.base.phi[0])
        assert u.at_prices(argmax, example2.prices[0]) == pytest.approx(value)


class TestRationalizationAudit:
    def test_example2_passes(self, example2):
        u = build_augmented_utility(example2)
        audit = verify_rationalization(u, example2, grid_radius=6.0, grid_points=15)
        assert audit.at_observed_bundles
        assert audit.on_grid
        assert audit.offending is None

    def test_corrupted_numbers_fail(self, example2):
        u = build_augmented_utility(example2)
        phi = u.base.phi.copy()
        phi[0] = phi[1] + 10.0 * u.base.lam[1] + 100.0
        broken = dataclasses.replace(u, base=AfriatSolution(phi, u.base.lam))
        audit = verify_rationalization(broken, example2, grid_radius=6.0, grid_points=5)
        assert not audit.at_observed_bundles
        assert not audit.on_grid
        assert audit.offending["t"] == 0

    def test_quasilinear_panels(self):
        sample = gen_quasilinear(QuasilinearSpec(L=2, T=4, households=5, seed=3))
        for panel in sample.panel:
            u = build_augmented_utility(panel)
            radius = 2.0 * float(panel.bundles.sum(axis=1).max())
            audit = verify_rationalization(u, panel, radius, 15)
            assert audit.on_grid, audit.offending

    def test_random_gapp_panels(self):
        for data in _random_panels(57, 100, lambda d: check_gapp(d).passes):
            u = build_augmented_utility(data)
            radius = 2.0 * float(np.abs(data.bundles).sum(axis=1).max())
            audit = verify_rationalization(u, data, radius, 15)
            assert audit.at_observed_bundles, audit.offending
            assert audit.on_grid, audit.offending


class TestPricePreference:
    def test_example2(self, example2):
        assert price_preference_query(example2, 0, 1) is PricePreference.STRICTLY_PREFERRED
        assert price_preference_query(example2, 1, 0) is PricePreference.UNRANKED
        assert price_preference_query(example2, 0, 0) is PricePreference.WEAKLY_PREFERRED

    def test_values(self):
        assert PricePreference.STRICTLY_PREFERRED.value == "StrictlyPreferred"
        assert PricePreference.UNRANKED.value == "Unranked"

    def test_requires_gapp(self, example1):
        with pytest.raises(RationalityViolationError):
            price_preference_query(example1, 0, 1)

    def test_index_range(self, example2):
        with pytest.raises(DataValidationError):
            price_preference_query(example2, 0, 2)

    def test_some_rationalization_ranks(self, example2):
        assert rationalization_ranks_above(example2, 0, 1)
        assert not rationalization_ranks_above(example2, 1, 0)
