import itertools
import logging
import math

import numpy as np
import pytest

from pgsim.bounds import (
    BoundPair,
    FamilyKind,
    bound_pair,
    build_event_family,
    estimate_cond,
    exact_sip,
    lower_bound_sip,
    minimal_transversals,
    upper_bound_sip,
)
from pgsim.config import Caps, SamplingParams
from pgsim.exceptions import CutFamilyIncomplete, FeatureNotEmbeddedError, InvalidParameterError
from pgsim.generator import GeneratorConfig, extract_queries, generate_database
from pgsim.graph import subgraph_iso_exists
from pgsim.mining import select_features
from pgsim.model import cond_prob, union_probability, world_matrix

from .conftest import edge, path


class TestMinimalTransversals:
    def test_overlapping_pair(self):
        cuts = minimal_transversals([frozenset({"e1", "e2"}), frozenset({"e2", "e3"})])
        assert cuts == [frozenset({"e2"}), frozenset({"e1", "e3"})]

    def test_disjoint_singletons(self):
        cuts = minimal_transversals([frozenset({"e1"}), frozenset({"e2"}), frozenset({"e3"})])
        assert cuts == [frozenset({"e1", "e2", "e3"})]

    def test_cap(self):
        family = [frozenset({f"a{i}", f"b{i}"}) for i in range(5)]
        with pytest.raises(CutFamilyIncomplete):
            minimal_transversals(family, cap=4)


class TestEventFamilies:
    def test_embeddings_of_edge_in_triangle(self, fixb, edge_aa):
        family = build_event_family(edge_aa, fixb, FamilyKind.EMBEDDING)
        assert family.members == (frozenset({"e1"}), frozenset({"e2"}), frozenset({"e3"}))
        assert family.overlaps == ((), (), ())

    def test_cuts_of_edge_in_triangle(self, fixb, edge_aa):
        family = build_event_family(edge_aa, fixb, FamilyKind.CUT)
        assert family.members == (frozenset({"e1", "e2", "e3"}),)

    def test_path_embeddings_overlap(self, fixb, path_aaa):
        family = build_event_family(path_aaa, fixb, FamilyKind.EMBEDDING)
        assert len(family) == 3
        assert all(len(others) == 2 for others in family.overlaps)

    def test_not_embedded(self, fixa, edge_aa):
        with pytest.raises(FeatureNotEmbeddedError):
            build_event_family(edge_aa, fixa, FamilyKind.EMBEDDING)

    def test_truncated_embeddings_cannot_give_cuts(self, fixb, edge_aa):
        caps = Caps(embeddings=1)
        assert build_event_family(edge_aa, fixb, FamilyKind.EMBEDDING, caps).truncated
        with pytest.raises(CutFamilyIncomplete):
            build_event_family(edge_aa, fixb, FamilyKind.CUT, caps)


class TestExactSip:
    def test_edge_in_fix_a(self, fixa, edge_ab):
        assert exact_sip(edge_ab, fixa) == pytest.approx(0.6)

    def test_path_in_fix_b(self, fixb, path_aaa):
        assert exact_sip(path_aaa, fixb) == pytest.approx(0.5)

    def test_absent(self, fixa, edge_aa):
        assert exact_sip(edge_aa, fixa) == 0.0


class TestBounds:
    def test_single_embedding(self, fixa, edge_ab):
        pair = bound_pair(edge_ab, fixa)
        assert pair.lower == pytest.approx(0.6)
        assert pair.upper == pytest.approx(0.6)
        assert pair.metadata["mode"] == "exact"

    def test_disjoint_embeddings(self, fixb, edge_aa):
        assert lower_bound_sip(edge_aa, fixb) == pytest.approx(0.875)
        assert upper_bound_sip(edge_aa, fixb) == pytest.approx(0.875)

    def test_overlapping_embeddings(self, fixb, path_aaa):
        # Each 2-edge image holds alone with probability 1/8 among the 5/8
        # of worlds where neither other image holds.
        lower = lower_bound_sip(path_aaa, fixb)
        assert lower == pytest.approx(0.2)
        assert lower <= exact_sip(path_aaa, fixb)

    def test_absent_entry(self, fixa, edge_aa):
        assert bound_pair(edge_aa, fixa) is None
        with pytest.raises(FeatureNotEmbeddedError):
            lower_bound_sip(edge_aa, fixa)

    def test_vertex_feature_is_certain(self, fixa):
        vertex = path("A", "")
        pair = bound_pair(vertex, fixa)
        assert (pair.lower, pair.upper) == (1.0, 1.0)

    def test_first_fit_members(self, fixb, edge_aa):
        assert lower_bound_sip(edge_aa, fixb, tighten=False) == pytest.approx(0.875)

    def test_cut_cap_falls_back_to_one(self, fixb, edge_aa):
        assert upper_bound_sip(edge_aa, fixb, caps=Caps(embeddings=1)) == 1.0

    def test_sampled_mode(self, fixa, edge_ab):
        params = SamplingParams(tau=0.1, xi=0.05, seed=5)
        first = bound_pair(edge_ab, fixa, mode="sample", params=params)
        again = bound_pair(edge_ab, fixa, mode="sample", params=params)
        assert first.lower == pytest.approx(0.6, abs=0.05)
        assert (first.lower, first.upper) == (again.lower, again.upper)
        assert first.lower <= first.upper

    def test_bad_mode(self, fixa, edge_ab):
        with pytest.raises(InvalidParameterError):
            bound_pair(edge_ab, fixa, mode="guess")

    def test_crossed_bounds_are_clamped_and_logged(self, fixa, edge_ab, monkeypatch, caplog):
        monkeypatch.setattr("pgsim.bounds._lower", lambda *args: (0.7, {}))
        monkeypatch.setattr("pgsim.bounds._upper", lambda *args: (0.4, {}))
        with caplog.at_level(logging.WARNING, logger="pgsim.bounds"):
            pair = bound_pair(edge_ab, fixa)
        assert (pair.lower, pair.upper) == (0.4, 0.4)
        assert pair.metadata["crossed"] == [0.7, 0.4]
        assert "crossed" in caplog.text

    def test_dict_form(self):
        pair = BoundPair(0.25, 0.5, {"mode": "exact"})
        assert BoundPair.from_dict(pair.to_dict()) == pair


class TestEstimateCond:
    def test_marginal_without_overlaps(self, fixa, edge_ab):
        family = build_event_family(edge_ab, fixa, FamilyKind.EMBEDDING)
        assert estimate_cond(fixa, family, 0, 10_000, seed=1) == pytest.approx(0.6, abs=0.05)

    def test_arguments(self, fixa, edge_ab):
        family = build_event_family(edge_ab, fixa, FamilyKind.EMBEDDING)
        with pytest.raises(InvalidParameterError):
            estimate_cond(fixa, family, 0, 0, seed=1)
        with pytest.raises(InvalidParameterError):
            estimate_cond(fixa, family, 3, 10, seed=1)


@pytest.mark.parametrize("tighten", [True, False])
def test_bounds_sandwich_exact_sip_on_product_tables(independent_db, tighten):
    features = select_features(independent_db, alpha=0.15, beta=0.15, gamma=0.15, max_vertices=3)
    checked = 0
    for feature in features:
        for g in independent_db:
            if not subgraph_iso_exists(feature.pattern, g.skeleton):
                continue
            pair = bound_pair(feature.pattern, g, tighten=tighten)
            exact = exact_sip(feature.pattern, g)
            assert pair.lower <= exact + 1e-9
            assert exact <= pair.upper + 1e-9
            checked += 1
    assert checked > 0


def _brute_force_transversals(family):
    ground = sorted(set().union(*family))
    hitting = [
        frozenset(combo)
        for size in range(1, len(ground) + 1)
        for combo in itertools.combinations(ground, size)
        if all(member & set(combo) for member in family)
    ]
    return {h for h in hitting if not any(other < h for other in hitting)}


def test_transversals_match_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(100):
        ground = [f"e{i}" for i in range(int(rng.integers(2, 7)))]
        family = [
            frozenset(rng.choice(ground, size=int(rng.integers(1, len(ground) + 1)), replace=False).tolist())
            for _ in range(int(rng.integers(1, 5)))
        ]
        assert set(minimal_transversals(family)) == _brute_force_transversals(family)


def test_embeddings_and_cuts_are_dual(independent_db):
    features = select_features(independent_db, alpha=0.15, beta=0.15, gamma=0.15, max_vertices=3)
    for feature in features:
        if feature.pattern.size == 0:
            continue
        for g in independent_db:
            if not subgraph_iso_exists(feature.pattern, g.skeleton):
                continue
            worlds, weights = world_matrix(g)
            cuts = build_event_family(feature.pattern, g, FamilyKind.CUT)
            cut_hit = np.zeros(len(weights), dtype=bool)
            for i in range(len(cuts)):
                cut_hit |= cuts.event(i).holds(worlds, g.columns)
            images = build_event_family(feature.pattern, g, FamilyKind.EMBEDDING).members
            exact = exact_sip(feature.pattern, g)
            assert union_probability(g, images) == pytest.approx(exact, abs=1e-9)
            assert 1.0 - float(weights[cut_hit].sum()) == pytest.approx(exact, abs=1e-9)


def test_estimate_cond_within_standard_errors():
    config = GeneratorConfig(graphs=6, min_vertices=4, max_vertices=5, density=0.3, seed=7)
    database = generate_database(config)
    m = 20_000
    deviations = []
    for name, f in extract_queries(database, [1, 2], 3, seed=7):
        for g in database:
            if not subgraph_iso_exists(f, g.skeleton):
                continue
            worlds, weights = world_matrix(g)
            for kind in (FamilyKind.EMBEDDING, FamilyKind.CUT):
                family = build_event_family(f, g, kind)
                for i in range(len(family)):
                    condition = np.ones(len(weights), dtype=bool)
                    for ev in family.conditioning(i):
                        condition &= ~ev.holds(worlds, g.columns)
                    p_condition = float(weights[condition].sum())
                    if m * p_condition < 1000:
                        continue
                    exact = cond_prob(g, family.event(i), family.conditioning(i))
                    estimate = estimate_cond(g, family, i, m, seed=len(deviations))
                    se = math.sqrt(exact * (1 - exact) / (m * p_condition))
                    if se < 1e-9:
                        assert estimate == pytest.approx(exact, abs=1e-6), (name, g.graph_id, i)
                        continue
                    deviations.append(abs(estimate - exact) / se)
    assert len(deviations) >= 10
    assert sum(d <= 3 for d in deviations) >= 0.95 * len(deviations)
    assert max(deviations) <= 5


@pytest.mark.slow
def test_sandwich_on_product_corpus():
    checked = 0
    for seed in range(10):
        config = GeneratorConfig(
            graphs=30, min_vertices=4, max_vertices=6, density=0.3, table_mode="independent", seed=100 + seed
        )
        database = generate_database(config)
        for name, f in extract_queries(database, [1, 2, 3], 8, seed=seed):
            for g in database:
                if not subgraph_iso_exists(f, g.skeleton):
                    continue
                assert g.size <= 12
                pair = bound_pair(f, g)
                exact = exact_sip(f, g)
                assert pair.lower <= exact + 1e-9, (name, g.graph_id)
                assert exact <= pair.upper + 1e-9, (name, g.graph_id)
                checked += 1
        if checked >= 500:
            break
    assert checked >= 500
