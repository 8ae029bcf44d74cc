import json

import pytest

from pgsim.config import IndexParams
from pgsim.exceptions import CorruptIndexError, IndexVersionError, IntegrityError
from pgsim.fixtures import graph_002
from pgsim.graph import canonical_code, subgraph_iso_exists
from pgsim.index import build_index, build_pmi, dumps_pmi, load_pmi, loads_pmi, save_pmi
from pgsim.mining import Feature
from pgsim.model import GraphDatabase

from .conftest import edge


@pytest.fixture(scope="module")
def fixture_pmi():
    from pgsim.fixtures import fixture_database

    return build_index(fixture_database())


def _feature_like(pmi, pattern) -> Feature:
    code = canonical_code(pattern)
    return next(f for f in pmi.features if f.code == code)


class TestBuild:
    def test_columns_and_params(self, fixture_pmi):
        assert fixture_pmi.columns == ("fix-a", "fix-b")
        assert fixture_pmi.params == IndexParams()
        assert fixture_pmi.complete

    def test_entries(self, fixture_pmi):
        f = _feature_like(fixture_pmi, edge("A", "x", "B"))
        pair = fixture_pmi.lookup(f.feature_id, "fix-a")
        assert pair.lower == pytest.approx(0.6)
        assert pair.upper == pytest.approx(0.6)

    def test_absent_convention(self, fixture_pmi, fixtures_db):
        for feature in fixture_pmi.features:
            for g in fixtures_db:
                contained = subgraph_iso_exists(feature.pattern, g.skeleton)
                assert (fixture_pmi.lookup(feature.feature_id, g.graph_id) is not None) == contained

    def test_column(self, fixture_pmi):
        edge_aa = _feature_like(fixture_pmi, edge("A", "x", "A"))
        assert edge_aa in fixture_pmi.column("fix-b")
        assert edge_aa not in fixture_pmi.column("fix-a")

    def test_bounds_are_ordered(self, fixture_pmi):
        for pair in fixture_pmi.entries.values():
            assert 0.0 <= pair.lower <= pair.upper <= 1.0

    def test_rebuild_is_identical(self, fixtures_db, fixture_pmi):
        assert dumps_pmi(build_index(fixtures_db)) == dumps_pmi(fixture_pmi)

    def test_explicit_features(self, fixtures_db):
        feature = Feature.from_pattern("f1", edge("A", "x", "A"))
        pmi = build_pmi(fixtures_db, [feature])
        assert set(pmi.entries) == {("f1", "fix-b")}
        assert pmi.lookup("f1", "fix-b").lower == pytest.approx(0.875)


class TestIntegrity:
    def test_same_database(self, fixture_pmi, fixtures_db):
        fixture_pmi.verify(fixtures_db)

    def test_other_database(self, fixture_pmi):
        with pytest.raises(IntegrityError):
            fixture_pmi.verify(GraphDatabase([graph_002()]))


class TestPersistence:
    def test_round_trip(self, fixture_pmi, tmp_path):
        target = tmp_path / "index" / "pmi.json"
        save_pmi(fixture_pmi, target)
        assert load_pmi(target) == fixture_pmi

    def test_not_json(self):
        with pytest.raises(CorruptIndexError):
            loads_pmi("not json")

    def test_wrong_format(self):
        with pytest.raises(CorruptIndexError):
            loads_pmi(json.dumps({"format": "pgsim-database", "version": 1}))

    def test_truncated_document(self, fixture_pmi):
        data = json.loads(dumps_pmi(fixture_pmi))
        del data["entries"]
        with pytest.raises(CorruptIndexError):
            loads_pmi(json.dumps(data))

    def test_newer_version(self, fixture_pmi):
        data = json.loads(dumps_pmi(fixture_pmi))
        data["version"] = 99
        with pytest.raises(IndexVersionError):
            loads_pmi(json.dumps(data))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorruptIndexError):
            load_pmi(tmp_path / "absent.json")
