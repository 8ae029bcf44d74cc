import itertools

import numpy as np
import pytest

from pgsim.exceptions import EmbeddingBudgetExceeded, GraphError, InvalidParameterError
from pgsim.graph import (
    DetGraph,
    canonical_code,
    capped_edge_images,
    edge_images,
    enumerate_embeddings,
    is_subgraph_similar,
    relax_query,
    subgraph_distance,
    subgraph_iso_exists,
)

from .conftest import edge, path, random_graph, triangle


class TestDetGraph:
    def test_accessors(self):
        g = path("ABC", "xy")
        assert g.size == 2
        assert g.num_vertices == 3
        assert g.edge_between("p1", "p0") == "d0"
        assert g.edge_between("p0", "p2") is None
        assert g.edge("d1") == ("p1", "p2", "y")
        assert g.is_connected()

    @pytest.mark.parametrize(
        "vertices,edges",
        [
            ([("v", "A"), ("v", "B")], []),
            ([("v", "A")], [("e", "v", "v", "x")]),
            ([("v", "A"), ("w", "A")], [("e", "v", "w", "x"), ("f", "w", "v", "y")]),
            ([("v", "A")], [("e", "v", "missing", "x")]),
            ([("v", "A"), ("w", "A")], [("e", "v", "w", "x"), ("e", "v", "w", "y")]),
        ],
    )
    def test_malformed(self, vertices, edges):
        with pytest.raises(GraphError):
            DetGraph(vertices, edges)

    def test_without_edges_drops_isolated_vertices(self):
        g = path("AAA", "xx").without_edges(["d0"])
        assert g.vertex_ids == ("p1", "p2")
        assert g.size == 1

    def test_realize_keeps_every_vertex(self):
        g = triangle().realize(["c1"])
        assert g.num_vertices == 3
        assert g.edge_ids == ("c1",)
        assert not g.is_connected()

    def test_dict_form(self):
        g = path("AB", "x")
        assert DetGraph.from_dict(g.to_dict()) == g


class TestSubgraphIsomorphism:
    def test_non_induced(self):
        assert subgraph_iso_exists(path("AAA", "xx"), triangle())

    def test_larger_pattern(self):
        assert not subgraph_iso_exists(triangle(), path("AAA", "xx"))

    def test_labels_must_match(self):
        assert not subgraph_iso_exists(edge("A", "y", "A"), triangle())
        assert not subgraph_iso_exists(edge("A", "x", "B"), triangle())

    def test_empty_pattern(self):
        assert subgraph_iso_exists(DetGraph([]), triangle())

    def test_disconnected_pattern_is_injective(self):
        two_edges = DetGraph(
            [("a", "A"), ("b", "A"), ("c", "A"), ("d", "A")],
            [("e", "a", "b", "x"), ("f", "c", "d", "x")],
        )
        # Two disjoint edges need four distinct vertices.
        assert not subgraph_iso_exists(two_edges, triangle())


class TestEmbeddings:
    def test_path_in_triangle(self):
        found = enumerate_embeddings(path("AAA", "xx"), triangle(), pattern_id="f1")
        assert len(found) == 6
        assert found.edge_images == (
            frozenset({"c1", "c2"}),
            frozenset({"c1", "c3"}),
            frozenset({"c2", "c3"}),
        )
        assert all(emb.pattern_id == "f1" for emb in found)

    def test_cap(self):
        with pytest.raises(EmbeddingBudgetExceeded) as info:
            enumerate_embeddings(path("AAA", "xx"), triangle(), cap=2)
        assert info.value.partial_count == 2

    def test_edge_images_deduplicate_automorphisms(self):
        assert len(edge_images(edge("A", "x", "A"), triangle())) == 3

    def test_capped_images(self):
        images, truncated = capped_edge_images(edge("A", "x", "A"), triangle(), max_images=1, max_maps=100)
        assert len(images) == 1
        assert truncated
        images, truncated = capped_edge_images(edge("A", "x", "A"), triangle(), max_images=10, max_maps=100)
        assert len(images) == 3
        assert not truncated

    def test_cap_reached_exactly_is_not_truncated(self):
        images, truncated = capped_edge_images(edge("A", "x", "A"), triangle(), max_images=3, max_maps=100)
        assert len(images) == 3
        assert not truncated
        _, truncated = capped_edge_images(edge("A", "x", "A"), triangle(), max_images=3, max_maps=1)
        assert truncated


class TestCanonicalCode:
    def test_invariant_under_renaming(self):
        a = path("ABC", "xy")
        b = DetGraph(
            [("z", "C"), ("y", "B"), ("w", "A")],
            [("k", "y", "z", "y"), ("m", "w", "y", "x")],
        )
        assert canonical_code(a) == canonical_code(b)

    def test_distinguishes_labels(self):
        assert canonical_code(path("ABC", "xy")) != canonical_code(path("ABC", "yx"))
        assert canonical_code(triangle()) != canonical_code(path("AAA", "xx"))

    def test_vertex_cap(self):
        from pgsim.exceptions import CanonicalCodeError

        with pytest.raises(CanonicalCodeError):
            canonical_code(path("AAAA", "xxx"), max_vertices=3)


class TestRelaxation:
    def test_distinct_labels_triangle(self):
        q = triangle(("a", "b", "c"))
        relaxed = relax_query(q, 1)
        assert len(relaxed) == 3
        assert all(rq.size == 2 for rq in relaxed)

    def test_symmetric_triangle_deduplicates(self):
        assert len(relax_query(triangle(), 1)) == 1

    def test_zero_delta(self):
        q = path("AAA", "xx")
        assert relax_query(q, 0).members == (q,)

    def test_delta_range(self):
        with pytest.raises(InvalidParameterError):
            relax_query(path("AAA", "xx"), 3)
        with pytest.raises(InvalidParameterError):
            relax_query(path("AAA", "xx"), -1)

    def test_relabel(self):
        q = edge("A", "x", "B")
        relaxed = relax_query(q, 1, relabel=True, alphabet={"x", "y"})
        sizes = sorted(rq.size for rq in relaxed)
        assert sizes == [0, 1]
        relabeled = [rq for rq in relaxed if rq.size == 1][0]
        assert relabeled.edge_labels() == frozenset({"y"})


class TestDistance:
    def test_contained(self):
        assert subgraph_distance(path("AAA", "xx"), triangle()) == 0

    def test_one_missing_edge(self):
        assert subgraph_distance(triangle(), path("AAA", "xx")) == 1
        assert is_subgraph_similar(triangle(), path("AAA", "xx"), 1)
        assert not is_subgraph_similar(triangle(), path("AAA", "xx"), 0)

    def test_no_common_edge(self):
        assert subgraph_distance(edge("A", "x", "B"), triangle()) == 1


def _maps(pattern, target):
    """Every injective label-preserving vertex map carrying each pattern edge onto a same-label edge."""
    for image in itertools.permutations(target.vertex_ids, pattern.num_vertices):
        mapping = dict(zip(pattern.vertex_ids, image))
        if any(pattern.label(v) != target.label(mapping[v]) for v in pattern.vertex_ids):
            continue
        hits = [target.edge_between(mapping[a], mapping[b]) for _, a, b, _ in pattern.edges]
        if all(eid is not None and target.edge(eid)[2] == label for eid, (_, _, _, label) in zip(hits, pattern.edges)):
            yield mapping


def _isomorphic(a, b):
    if a.num_vertices != b.num_vertices or a.size != b.size:
        return False
    return next(_maps(a, b), None) is not None


def _brute_force_distance(q, g):
    for kept in range(q.size, -1, -1):
        for combo in itertools.combinations(q.edge_ids, kept):
            if next(_maps(q.edge_subgraph(combo), g), None) is not None:
                return q.size - kept
    return q.size


def _renamed(g, rng):
    order = rng.permutation(g.num_vertices)
    rename = {vid: f"w{int(order[i])}" for i, vid in enumerate(g.vertex_ids)}
    vertices = [(rename[vid], label) for vid, label in g.vertices]
    edges = [
        (f"f{i}", rename[b], rename[a], label) if rng.random() < 0.5 else (f"f{i}", rename[a], rename[b], label)
        for i, (_, a, b, label) in enumerate(g.edges)
    ]
    return DetGraph(
        [vertices[int(i)] for i in rng.permutation(len(vertices))],
        [edges[int(i)] for i in rng.permutation(len(edges))],
    )


def test_canonical_code_survives_renaming():
    rng = np.random.default_rng(17)
    for _ in range(60):
        g = random_graph(rng, int(rng.integers(3, 9)), int(rng.integers(0, 4)))
        assert canonical_code(_renamed(g, rng)) == canonical_code(g)


def test_canonical_code_matches_brute_force_isomorphism():
    rng = np.random.default_rng(3)
    graphs = [random_graph(rng, 4, int(rng.integers(0, 2)), vertex_labels="A") for _ in range(40)]
    seen = set()
    for a, b in itertools.combinations(graphs, 2):
        same = _isomorphic(a, b)
        assert (canonical_code(a) == canonical_code(b)) == same
        seen.add(same)
    assert seen == {True, False}


def test_embedding_count_matches_exhaustive_maps():
    rng = np.random.default_rng(8)
    for _ in range(60):
        target = random_graph(rng, int(rng.integers(3, 7)), int(rng.integers(0, 4)))
        subset = [eid for eid in target.edge_ids if rng.random() < 0.5] or [target.edge_ids[0]]
        for pattern in (target.edge_subgraph(subset), random_graph(rng, int(rng.integers(2, 4)), 1)):
            assert len(enumerate_embeddings(pattern, target)) == sum(1 for _ in _maps(pattern, target))


def test_distance_matches_brute_force():
    rng = np.random.default_rng(21)
    for _ in range(60):
        q = random_graph(rng, int(rng.integers(2, 5)), int(rng.integers(0, 2)))
        g = random_graph(rng, int(rng.integers(3, 7)), int(rng.integers(0, 4)))
        expected = _brute_force_distance(q, g)
        assert subgraph_distance(q, g) == expected
        assert subgraph_iso_exists(q, g) == (expected == 0)
        for delta in range(q.size + 1):
            assert is_subgraph_similar(q, g, delta) == (expected <= delta)
