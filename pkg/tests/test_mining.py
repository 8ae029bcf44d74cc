import logging

import pytest

from pgsim.config import Caps
from pgsim.exceptions import InvalidParameterError
from pgsim.graph import canonical_code
from pgsim.mining import (
    Feature,
    FeatureStats,
    dis,
    feature_stats,
    frq,
    max_disjoint_embeddings,
    mine_features,
    select_features,
)
from pgsim.model import GraphDatabase

from .conftest import edge, path, triangle


class TestDisjointEmbeddings:
    def test_edge_in_triangle(self):
        assert max_disjoint_embeddings(edge("A", "x", "A"), triangle()) == 3

    def test_path_in_triangle(self):
        assert max_disjoint_embeddings(path("AAA", "xx"), triangle()) == 1

    def test_stats(self, fixtures_db, path_aaa):
        stats = feature_stats(path_aaa, fixtures_db)
        assert stats.support == ("fix-b",)
        assert stats.embedding_counts == {"fix-b": 3}
        assert stats.disjoint_counts == {"fix-b": 1}
        assert stats.qualifying(0.3) == ["fix-b"]
        assert stats.qualifying(0.5) == []

    def test_stats_dict_form(self):
        stats = FeatureStats(("g1",), {"g1": 2}, {"g1": 1})
        assert FeatureStats.from_dict(stats.to_dict()) == stats


class TestFrequency:
    def test_single_embedding(self, fixtures_db, edge_ab):
        assert frq(edge_ab, fixtures_db, alpha=0.15) == pytest.approx(0.5)

    def test_alpha_filters_overlapping_embeddings(self, fixtures_db, path_aaa):
        assert frq(path_aaa, fixtures_db, alpha=0.15) == pytest.approx(0.5)
        assert frq(path_aaa, fixtures_db, alpha=0.5) == 0.0

    def test_empty_database(self, edge_ab):
        with pytest.raises(InvalidParameterError):
            frq(edge_ab, GraphDatabase([]), alpha=0.15)


class TestDiscriminativeRatio:
    def test_without_subfeatures(self, fixtures_db, edge_aa):
        assert dis(edge_aa, [], fixtures_db) == pytest.approx(2.0)

    def test_with_subfeature(self, fixtures_db, edge_aa, path_aaa):
        selected = [Feature.from_pattern("f1", edge_aa)]
        assert dis(path_aaa, selected, fixtures_db) == pytest.approx(1.0)

    def test_never_below_one(self, fixtures_db, edge_ab):
        vertex = Feature.from_pattern("f1", path("A", ""))
        assert dis(edge_ab, [vertex], fixtures_db) >= 1.0

    def test_unsupported_pattern(self, fixtures_db):
        with pytest.raises(InvalidParameterError):
            dis(edge("Z", "x", "Z"), [], fixtures_db)


class TestSelection:
    def test_fixture_features(self, fixtures_db):
        features = select_features(fixtures_db, alpha=0.15, beta=0.15, gamma=0.15, max_vertices=5)
        assert [f.feature_id for f in features] == [f"f{i}" for i in range(1, 10)]
        codes = {f.code for f in features}
        assert canonical_code(triangle()) in codes
        assert canonical_code(path("ABC", "xy")) in codes
        assert canonical_code(path("AAA", "xx")) in codes
        sizes = [(f.pattern.num_vertices, f.pattern.size) for f in features]
        assert sizes == sorted(sizes)

    def test_seeds_always_admitted(self, fixtures_db):
        features = select_features(fixtures_db, alpha=0.15, beta=1.0, gamma=0.15, max_vertices=5)
        assert len(features) == 6
        assert all(f.pattern.size <= 1 for f in features)

    def test_high_gamma_keeps_only_seeds(self, fixtures_db):
        features = select_features(fixtures_db, alpha=0.15, beta=0.15, gamma=10.0, max_vertices=5)
        assert len(features) == 6

    def test_vertex_limit(self, fixtures_db):
        features = select_features(fixtures_db, alpha=0.15, beta=0.15, gamma=0.15, max_vertices=2)
        assert max(f.pattern.num_vertices for f in features) == 2

    def test_deterministic(self, independent_db):
        first = select_features(independent_db, 0.15, 0.15, 0.15, 3)
        again = select_features(independent_db, 0.15, 0.15, 0.15, 3)
        assert first == again

    def test_stats_cover_every_feature(self, fixtures_db):
        selection = mine_features(fixtures_db, 0.15, 0.15, 0.15, 5)
        assert set(selection.stats) == {f.feature_id for f in selection.features}
        assert selection.complete

    def test_candidate_cap(self, fixtures_db, caplog):
        with caplog.at_level(logging.WARNING, logger="pgsim.mining"):
            selection = mine_features(fixtures_db, 0.15, 0.15, 0.15, 5, Caps(mining_candidates=1))
        assert not selection.complete
        assert "feature mining stopped" in caplog.text

    def test_empty_database(self):
        with pytest.raises(InvalidParameterError):
            select_features(GraphDatabase([]), 0.15, 0.15, 0.15, 3)

    def test_feature_dict_form(self, path_aaa):
        feature = Feature.from_pattern("f7", path_aaa)
        assert Feature.from_dict(feature.to_dict()) == feature
