import itertools
import logging
import math

import numpy as np
import pytest

from revpref.deterministic.relations import (
    RelationPair,
    check_gapp,
    check_gapp_nonlinear,
    check_garp,
    check_outside_good_garp,
    cost_matrix_from_prices,
    direct_bundle_relations,
    direct_price_relations,
    find_cycle,
    normalize_expenditure,
    panel_pass_rates,
    robustness_margin,
    transitive_closure,
)
from revpref.errors import DataValidationError, GenericityError
from revpref.ingestion.dataset import CostMatrix, DeterministicDataset


def _has_violating_cycle(E: np.ndarray) -> bool:
    """Exhaustive search over simple cycles of the bundle relation of ``E``."""
    T = E.shape[0]
    own = np.diag(E)
    for k in range(2, T + 1):
        for cycle in itertools.permutations(range(T), k):
            edges = [(cycle[i], cycle[(i + 1) % k]) for i in range(k)]
            if all(own[a] >= E[a, b] for a, b in edges) and any(own[a] > E[a, b] for a, b in edges):
                return True
    return False


def _random_integer_dataset(rng: np.random.Generator, T: int, L: int) -> DeterministicDataset:
    prices = rng.integers(1, 4, size=(T, L)).astype(float)
    bundles = rng.integers(0, 4, size=(T, L)).astype(float)
    bundles[:, 0] += 1.0
    return DeterministicDataset(prices, bundles)


def _violating_cycle_in(weak: np.ndarray, strict: np.ndarray) -> bool:
    """Exhaustive search for a simple cycle of weak edges containing a strict edge."""
    T = weak.shape[0]
    for k in range(2, T + 1):
        for cycle in itertools.permutations(range(T), k):
            if cycle[0] != min(cycle):
                continue
            edges = [(cycle[i], cycle[(i + 1) % k]) for i in range(k)]
            if all(weak[a, b] for a, b in edges) and any(strict[a, b] for a, b in edges):
                return True
    return False


def _simple_path_closure(weak: np.ndarray, strict: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closure by enumerating every simple path ``i -> j``."""
    T = weak.shape[0]
    W = np.eye(T, dtype=bool)
    S = np.zeros((T, T), dtype=bool)
    for i, j in itertools.permutations(range(T), 2):
        middle = [v for v in range(T) if v not in (i, j)]
        for k in range(len(middle) + 1):
            for inner in itertools.permutations(middle, k):
                nodes = (i, *inner, j)
                edges = list(zip(nodes[:-1], nodes[1:]))
                if all(weak[a, b] for a, b in edges):
                    W[i, j] = True
                    if any(strict[a, b] for a, b in edges):
                        S[i, j] = True
                        break
            if S[i, j]:
                break
    return W, S


def _random_relation(rng: np.random.Generator, T: int) -> RelationPair:
    weak = rng.random((T, T)) < 0.35
    np.fill_diagonal(weak, True)
    strict = weak & (rng.random((T, T)) < 0.5)
    np.fill_diagonal(strict, False)
    return RelationPair(weak, strict)


class TestDirectRelations:
    def test_example1_bundle_relation(self, example1):
        np.testing.assert_array_equal(example1.cross_expenditures, [[8, 1], [4, 2]])
        rel = direct_bundle_relations(example1)
        np.testing.assert_array_equal(rel.weak, [[True, True], [False, True]])
        np.testing.assert_array_equal(rel.strict, [[False, True], [False, False]])

    def test_example1_price_relation(self, example1):
        rel = direct_price_relations(example1)
        np.testing.assert_array_equal(rel.strict, [[False, True], [True, False]])

    def test_equal_expenditure_is_weak_only(self):
        data = DeterministicDataset([[1.0, 1.0], [1.0, 2.0]], [[1.0, 1.0], [2.0, 0.0]])
        rel = direct_bundle_relations(data)
        assert rel.weak[0, 1]
        assert not rel.strict[0, 1]

    def test_strict_outside_weak_rejected(self):
        with pytest.raises(DataValidationError):
            RelationPair(np.eye(2, dtype=bool), np.ones((2, 2), dtype=bool))


class TestClosure:
    def test_chain(self):
        weak = np.array([[1, 1, 0], [0, 1, 1], [0, 0, 1]], dtype=bool)
        strict = np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]], dtype=bool)
        closed = transitive_closure(RelationPair(weak, strict))
        assert closed.weak[0, 2]
        assert closed.strict[0, 2]
        assert not closed.strict[1, 2]
        assert not closed.weak[2, 0]

    def test_strict_needs_a_simple_path(self):
        # every pair is tied except 0 -> 1; 1 cannot reach anything through 0 -> 1
        weak = np.ones((3, 3), dtype=bool)
        strict = np.zeros((3, 3), dtype=bool)
        strict[0, 1] = True
        closed = transitive_closure(RelationPair(weak, strict))
        assert closed.weak.all()
        np.testing.assert_array_equal(
            closed.strict, [[False, True, True], [False, False, False], [False, True, False]]
        )

    def test_budget_falls_back_to_walks(self, caplog):
        weak = np.ones((3, 3), dtype=bool)
        strict = np.zeros((3, 3), dtype=bool)
        strict[0, 1] = True
        with caplog.at_level(logging.WARNING, logger="revpref.deterministic.relations"):
            closed = transitive_closure(RelationPair(weak, strict), path_budget=0)
        assert closed.strict.all()
        assert "expansions" in caplog.text

    def test_acyclic_strict_diagonal_is_empty(self):
        weak = np.array([[1, 1, 0], [1, 1, 1], [0, 0, 1]], dtype=bool)
        closed = transitive_closure(RelationPair(weak, np.zeros((3, 3), dtype=bool)))
        assert not closed.strict.any()
        assert closed.weak[0, 2] and closed.weak[1, 0]

    @pytest.mark.parametrize("seed", range(40))
    def test_matches_simple_path_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        direct = _random_relation(rng, 6)
        closed = transitive_closure(direct)
        W, S = _simple_path_closure(direct.weak, direct.strict)
        np.testing.assert_array_equal(closed.weak, W)
        np.testing.assert_array_equal(closed.strict, S)
        assert not np.diag(closed.strict).any()

    @pytest.mark.parametrize("seed", range(40))
    def test_cycle_search_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        direct = _random_relation(rng, 6)
        closed, witness = find_cycle(direct)
        assert (witness is None) == (not _violating_cycle_in(direct.weak, direct.strict))
        if witness is not None:
            assert witness.verify(direct)


class TestAxioms:
    def test_example1(self, example1):
        assert check_garp(example1).passes
        gapp = check_gapp(example1)
        assert not gapp.passes
        assert gapp.witness.verify(gapp.direct)
        assert not check_garp(normalize_expenditure(example1)).passes

    def test_example2(self, example2):
        garp = check_garp(example2)
        assert not garp.passes
        assert sorted(garp.witness.sequence) == [0, 1]
        assert garp.witness.verify(garp.direct)
        assert check_gapp(example2).passes

    def test_single_observation_passes(self):
        data = DeterministicDataset([[1.0, 2.0]], [[3.0, 1.0]])
        assert check_garp(data).passes
        assert check_gapp(data).passes

    def test_witness_to_dict(self, example2):
        d = check_garp(example2).to_dict()
        assert d["axiom"] == "GARP"
        assert d["passes"] is False
        assert len(d["witness"]["sequence"]) == 2

    @pytest.mark.parametrize("seed", range(200))
    def test_garp_matches_cycle_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        data = _random_integer_dataset(rng, T=4, L=2)
        result = check_garp(data)
        assert result.passes == (not _has_violating_cycle(data.cross_expenditures))
        if not result.passes:
            assert result.witness.verify(result.direct)
            assert len(set(result.witness.sequence)) == len(result.witness.sequence)

    def test_gapp_is_garp_on_normalized_data(self):
        rng = np.random.default_rng(2024)
        outcomes = set()
        for _ in range(1000):
            T = int(rng.integers(2, 9))
            L = int(rng.integers(2, 6))
            data = DeterministicDataset(
                rng.uniform(0.5, 2.0, size=(T, L)), rng.uniform(0.0, 3.0, size=(T, L)) + 0.01
            )
            price = check_gapp(data)
            bundle = check_garp(normalize_expenditure(data))
            gapp = price.passes
            assert gapp == bundle.passes
            np.testing.assert_array_equal(price.closure.weak, bundle.closure.weak)
            np.testing.assert_array_equal(price.closure.strict, bundle.closure.strict)
            outcomes.add(gapp)
        assert outcomes == {True, False}

    def test_normalized_expenditures_are_one(self, example1):
        np.testing.assert_allclose(normalize_expenditure(example1).expenditures, [1.0, 1.0])


class TestNonlinearPricing:
    def test_linear_costs_reproduce_gapp(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            data = DeterministicDataset(rng.uniform(0.5, 2, (4, 3)), rng.uniform(0.1, 3, (4, 3)))
            linear = check_gapp(data)
            general = check_gapp_nonlinear(cost_matrix_from_prices(data))
            assert linear.passes == general.passes
            np.testing.assert_array_equal(linear.closure.weak, general.closure.weak)
            np.testing.assert_array_equal(linear.closure.strict, general.closure.strict)

    @pytest.mark.parametrize("seed", range(50))
    def test_matches_cycle_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        C = rng.integers(1, 6, size=(5, 5)).astype(float)
        own = np.diag(C)[None, :]
        weak = C <= own
        strict = C < own
        np.fill_diagonal(strict, False)
        result = check_gapp_nonlinear(CostMatrix(C))
        assert result.passes == (not _violating_cycle_in(weak, strict))
        if not result.passes:
            assert result.witness.verify(result.direct)

    def test_hand_cost_matrix(self):
        assert not check_gapp_nonlinear(CostMatrix([[3.0, 1.0], [2.0, 2.0]])).passes
        assert check_gapp_nonlinear(CostMatrix([[3.0, 1.0], [4.0, 2.0]])).passes

    def test_cost_matrix_validation(self):
        with pytest.raises(DataValidationError):
            CostMatrix([[1.0, -1.0], [1.0, 1.0]])
        with pytest.raises(DataValidationError, match="row 2"):
            CostMatrix([[1.0, 1.0], [1.0, 0.0]])
        with pytest.raises(DataValidationError):
            CostMatrix([[1.0, 1.0]])


class TestOutsideGood:
    def test_outside_good_restores_garp(self, example2):
        result = check_outside_good_garp(example2, [1.0, 1.0], [20.0, 20.0])
        assert result.passes

    def test_budget_below_expenditure(self, example2):
        with pytest.raises(DataValidationError, match="row 1"):
            check_outside_good_garp(example2, [1.0, 1.0], [4.0, 20.0])

    def test_nonpositive_outside_price(self, example2):
        with pytest.raises(DataValidationError):
            check_outside_good_garp(example2, [1.0, 0.0], [20.0, 20.0])


class TestPassRates:
    def test_rates(self, example1, example2):
        rates = panel_pass_rates([example1, example2])
        assert rates == {"panels": 2, "garp": 0.5, "gapp": 0.5, "both": 0.0}

    def test_empty(self):
        rates = panel_pass_rates([])
        assert rates["panels"] == 0
        assert math.isnan(rates["garp"])


class TestRobustnessMargin:
    def test_example2(self, example2):
        margin = robustness_margin(example2)
        assert margin.min_gap == pytest.approx(1.0)
        assert margin.bundle_norm == pytest.approx(3.0)
        assert margin.argmin_pair == (0, 1)

    def test_admits(self, example2):
        margin = robustness_margin(example2)
        assert margin.admits([0.1, -0.1], [0.1, 0.0])
        assert not margin.admits([0.2, 0.0], [0.0, -0.1])

    def test_genericity_error(self):
        data = DeterministicDataset([[1.0, 1.0], [1.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(GenericityError) as err:
            robustness_margin(data)
        assert len(err.value.pair) == 2

    def test_single_observation(self):
        margin = robustness_margin(DeterministicDataset([[1.0]], [[2.0]]))
        assert margin.min_gap == math.inf
        assert margin.bundle_norm == 2.0
