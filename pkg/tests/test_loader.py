import numpy as np
import pytest

from revpref.errors import DataValidationError
from revpref.ingestion.dataset import DeterministicDataset, StochasticDataset
from revpref.ingestion.loader import (
    DatasetLoader,
    load_deterministic,
    load_prices,
    load_stochastic,
    write_deterministic,
    write_stochastic,
)
from tests.conftest import write_text


class TestDatasetLoader:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            DatasetLoader(tmp_path / "absent.csv")

    def test_unsupported_extension(self, tmp_path):
        path = write_text(tmp_path / "data.json", "{}")
        with pytest.raises(ValueError, match="Unsupported file extension"):
            DatasetLoader(path).load()

    def test_normalizes_column_names(self, tmp_path):
        path = write_text(tmp_path / "d.csv", " P1 ,Unit Price\n1,2\n")
        df = DatasetLoader(path).load()
        assert list(df.columns) == ["p1", "unit_price"]

    def test_latin1_fallback(self, tmp_path):
        path = tmp_path / "latin.csv"
        path.write_bytes("label,p1,x1\ncaf\xe9,1,2\n".encode("latin-1"))
        data = load_deterministic(path)
        assert data.labels == ("caf\xe9",)


class TestDeterministic:
    def test_example_file(self, example1_csv):
        data = load_deterministic(example1_csv)
        assert (data.T, data.L) == (2, 2)
        np.testing.assert_array_equal(data.prices, [[2, 1], [1, 2]])
        np.testing.assert_array_equal(data.bundles, [[4, 0], [0, 1]])
        assert data.labels is None

    def test_labels_and_column_order(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "x2,label,p2,x1,p1\n0,jan,1,4,2\n1,feb,2,0,1\n")
        data = load_deterministic(path)
        assert data.labels == ("jan", "feb")
        np.testing.assert_array_equal(data.prices, [[2, 1], [1, 2]])
        np.testing.assert_array_equal(data.bundles, [[4, 0], [0, 1]])

    def test_zero_expenditure_names_row(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "p1,p2,x1,x2\n2,1,4,0\n1,2,0,0\n")
        with pytest.raises(DataValidationError, match="row 2") as err:
            load_deterministic(path)
        assert err.value.row == 2

    def test_missing_value_names_row(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "p1,p2,x1,x2\n2,1,4,0\n1,,0,1\n")
        with pytest.raises(DataValidationError, match="missing value") as err:
            load_deterministic(path)
        assert err.value.row == 2

    def test_unparseable_value(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "p1,p2,x1,x2\n2,abc,4,0\n")
        with pytest.raises(DataValidationError, match="cannot parse 'abc'"):
            load_deterministic(path)

    def test_nonpositive_price(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "p1,p2,x1,x2\n2,1,4,0\n0,2,0,1\n")
        with pytest.raises(DataValidationError, match="nonpositive price"):
            load_deterministic(path)

    def test_gap_in_good_numbering(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "p1,p3,x1,x3\n2,1,4,0\n")
        with pytest.raises(DataValidationError, match="numbered 1..L"):
            load_deterministic(path)

    def test_unequal_price_and_quantity_columns(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "p1,p2,x1\n2,1,4\n")
        with pytest.raises(DataValidationError, match="2 price columns but 1 quantity"):
            load_deterministic(path)

    def test_tsv(self, tmp_path):
        path = write_text(tmp_path / "d.tsv", "p1\tp2\tx1\tx2\n2\t1\t4\t0\n")
        assert load_deterministic(path).T == 1

    def test_write_then_read_csv(self, tmp_path, example2):
        path = write_deterministic(example2, tmp_path / "out" / "e2.csv")
        back = load_deterministic(path)
        np.testing.assert_array_equal(back.prices, example2.prices)
        np.testing.assert_array_equal(back.bundles, example2.bundles)

    def test_write_then_read_xlsx(self, tmp_path):
        data = DeterministicDataset([[2.0, 1.0], [1.0, 4.0]], [[2.0, 1.0], [0.0, 2.0]], ("a", "b"))
        path = write_deterministic(data, tmp_path / "e2.xlsx")
        back = load_deterministic(path)
        assert back.labels == ("a", "b")
        np.testing.assert_allclose(back.bundles, data.bundles)


class TestStochastic:
    def test_load(self, crossing_files):
        choices, prices = crossing_files
        data = load_stochastic(choices, prices)
        assert data.period_ids == ("1", "2")
        np.testing.assert_array_equal(data.counts, [10, 10])
        np.testing.assert_array_equal(data.prices, [[2, 1], [1, 2]])
        np.testing.assert_allclose(data.choices[0][0], [1.35, 0.3])

    def test_periods_follow_prices_file(self, tmp_path):
        choices = write_text(
            tmp_path / "c.csv", "period,household,x1,x2\nb,1,1,1\na,2,2,1\nb,3,1,2\n"
        )
        prices = write_text(tmp_path / "p.csv", "period,p1,p2\nb,1,1\na,2,1\n")
        data = load_stochastic(choices, prices)
        assert data.period_ids == ("b", "a")
        np.testing.assert_array_equal(data.choices[0], [[1, 1], [1, 2]])
        np.testing.assert_array_equal(data.choices[1], [[2, 1]])

    def test_unknown_period(self, tmp_path):
        choices = write_text(tmp_path / "c.csv", "period,household,x1\n1,1,1\n7,2,1\n")
        prices = write_text(tmp_path / "p.csv", "period,p1\n1,1\n")
        with pytest.raises(DataValidationError, match="'7' not in prices file") as err:
            load_stochastic(choices, prices)
        assert err.value.row == 2

    def test_period_without_choices(self, tmp_path):
        choices = write_text(tmp_path / "c.csv", "period,household,x1\n1,1,1\n")
        prices = write_text(tmp_path / "p.csv", "period,p1\n1,1\n2,3\n")
        with pytest.raises(DataValidationError, match="has no choices"):
            load_stochastic(choices, prices)

    def test_goods_mismatch(self, tmp_path):
        choices = write_text(tmp_path / "c.csv", "period,household,x1\n1,1,1\n")
        prices = write_text(tmp_path / "p.csv", "period,p1,p2\n1,1,1\n")
        with pytest.raises(DataValidationError, match="1 goods but prices have 2"):
            load_stochastic(choices, prices)

    def test_repeated_period_in_prices(self, tmp_path):
        path = write_text(tmp_path / "p.csv", "period,p1\n1,1\n1,2\n")
        with pytest.raises(DataValidationError, match="repeated") as err:
            load_prices(path)
        assert err.value.row == 2

    def test_nonpositive_price_in_prices_file(self, tmp_path):
        path = write_text(tmp_path / "p.csv", "period,p1,p2\n1,1,1\n2,1,-1\n")
        with pytest.raises(DataValidationError, match="finite and positive") as err:
            load_prices(path)
        assert err.value.row == 2

    def test_write_then_read(self, tmp_path, rationalizable_choices):
        c, p = write_stochastic(
            rationalizable_choices, tmp_path / "c.csv", tmp_path / "p.csv"
        )
        back = load_stochastic(c, p)
        assert back.period_ids == rationalizable_choices.period_ids
        for a, b in zip(back.choices, rationalizable_choices.choices):
            np.testing.assert_allclose(a, b)

    def test_write_keeps_period_ids(self, tmp_path):
        data = StochasticDataset([[1.0, 2.0]], ([[1.0, 1.0]],), ("2024Q1",))
        c, p = write_stochastic(data, tmp_path / "c.csv", tmp_path / "p.csv")
        assert load_stochastic(c, p).period_ids == ("2024Q1",)
