import json

import numpy as np

from revpref.ingestion.registry import ArtifactRegistry, prices_digest
from tests.conftest import CROSSING_PRICES


class TestDigest:
    def test_stable_and_sensitive(self):
        a = prices_digest(CROSSING_PRICES)
        assert a == prices_digest(CROSSING_PRICES.copy())
        assert a != prices_digest(CROSSING_PRICES * 1.0000001)
        assert a != prices_digest(CROSSING_PRICES.reshape(1, 4))


class TestRegistry:
    def test_miss_then_hit(self, tmp_path, crossing_layout, crossing_types):
        registry = ArtifactRegistry(tmp_path)
        assert registry.get_layout(CROSSING_PRICES) is None
        registry.put_layout(crossing_layout)
        registry.put_types(crossing_types, cap=100)

        reopened = ArtifactRegistry(tmp_path)
        layout = reopened.get_layout(CROSSING_PRICES)
        assert layout.fingerprint() == crossing_layout.fingerprint()
        types = reopened.get_types(layout, cap=100)
        np.testing.assert_array_equal(types.assignments, crossing_types.assignments)
        assert reopened.get_types(layout, cap=50) is None

    def test_index(self, tmp_path, crossing_layout, crossing_types):
        registry = ArtifactRegistry(tmp_path)
        registry.put_layout(crossing_layout)
        registry.put_types(crossing_types, cap=100)
        kinds = sorted(entry["kind"] for entry in registry.list_artifacts())
        assert kinds == ["layout", "types"]
        with open(tmp_path / "registry.json", encoding="utf-8") as fh:
            assert len(json.load(fh)) == 2

    def test_corrupt_artifact_is_a_miss(self, tmp_path, crossing_layout):
        registry = ArtifactRegistry(tmp_path)
        path = registry.put_layout(crossing_layout)
        path.write_text("{not json", encoding="utf-8")
        assert registry.get_layout(CROSSING_PRICES) is None

    def test_corrupt_index_starts_fresh(self, tmp_path):
        (tmp_path / "registry.json").write_text("[", encoding="utf-8")
        assert ArtifactRegistry(tmp_path).list_artifacts() == []
