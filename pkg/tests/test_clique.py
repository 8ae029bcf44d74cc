import itertools

import numpy as np
import pytest

from pgsim.clique import CompatibilityGraph, max_weight_clique


def test_tie_prefers_smallest_nodes():
    cg = CompatibilityGraph((1.0, 0.5, 1.0), frozenset({(0, 1), (1, 2)}))
    result = max_weight_clique(cg)
    assert result.nodes == (0, 1)
    assert result.weight == pytest.approx(1.5)
    assert result.optimal


def test_heavy_single_node_beats_light_pair():
    cg = CompatibilityGraph((0.2, 0.2, 0.5), frozenset({(0, 1)}))
    assert max_weight_clique(cg).nodes == (2,)


def test_complete_graph():
    links = frozenset((i, j) for i in range(4) for j in range(i + 1, 4))
    result = max_weight_clique(CompatibilityGraph((0.1, 0.2, 0.3, 0.4), links))
    assert result.nodes == (0, 1, 2, 3)
    assert result.weight == pytest.approx(1.0)


def test_empty_graph():
    result = max_weight_clique(CompatibilityGraph((), frozenset()))
    assert result.nodes == ()
    assert result.weight == 0.0


def test_from_members_links_disjoint_sets():
    members = [frozenset({"e1"}), frozenset({"e1", "e2"}), frozenset({"e3"})]
    cg = CompatibilityGraph.from_members(members, [1.0, 1.0, 1.0])
    assert cg.links == frozenset({(0, 2), (1, 2)})


def test_greedy_above_cap():
    links = frozenset({(0, 1), (1, 2), (0, 2)})
    result = max_weight_clique(CompatibilityGraph((0.3, 0.2, 0.1), links), cap=2)
    assert not result.optimal
    assert result.nodes == (0, 1, 2)


def test_invalid_link():
    with pytest.raises(ValueError):
        CompatibilityGraph((1.0,), frozenset({(0, 3)}))


def _brute_force_clique_weight(cg):
    """Heaviest clique over all node subsets, built up one lowest node at a time."""
    adjacent = [sum(1 << u for u in nbrs) for nbrs in cg.adjacency()]
    is_clique = [True] * (1 << cg.size)
    weight = [0.0] * (1 << cg.size)
    best = 0.0
    for mask in range(1, 1 << cg.size):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        is_clique[mask] = is_clique[rest] and (rest & ~adjacent[low]) == 0
        weight[mask] = weight[rest] + cg.weights[low]
        if is_clique[mask]:
            best = max(best, weight[mask])
    return best


def test_matches_exhaustive_enumeration():
    rng = np.random.default_rng(13)
    for _ in range(40):
        n = int(rng.integers(1, 16))
        weights = [0.0 if rng.random() < 0.15 else float(rng.uniform(0.01, 2.0)) for _ in range(n)]
        density = rng.uniform(0.2, 0.9)
        links = frozenset((i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density)
        cg = CompatibilityGraph(tuple(weights), links)
        result = max_weight_clique(cg)
        assert result.optimal
        assert result.weight == pytest.approx(_brute_force_clique_weight(cg), abs=1e-9)
        assert result.weight == pytest.approx(sum(weights[v] for v in result.nodes), abs=1e-9)
        adjacent = cg.adjacency()
        assert all(b in adjacent[a] for a, b in itertools.combinations(result.nodes, 2))
