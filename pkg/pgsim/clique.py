"""
Maximum-weight clique over compatibility graphs.

Nodes are members of an event family, links join edge-disjoint members and
node weights are -ln(1 - p). Graphs up to the clique cap are solved exactly
by branch and bound; larger ones get a greedy clique flagged non-optimal.
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, List, Sequence, Set, Tuple

from .config import Caps

logger = logging.getLogger(__name__)

_DEFAULT_CAPS = Caps()

# Weights at or below this contribute nothing and are left out of the search
WEIGHT_FLOOR = 1e-12
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CompatibilityGraph:
    """
    Attributes:
        weights: Non-negative weight of node i
        links: ``(i, j)`` pairs with i < j
    """

    weights: Tuple[float, ...]
    links: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "links", frozenset((min(i, j), max(i, j)) for i, j in self.links))
        n = len(self.weights)
        for i, j in self.links:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"invalid link ({i}, {j}) for {n} nodes")

    @classmethod
    def from_members(cls, members: Sequence[FrozenSet[str]], weights: Sequence[float]) -> "CompatibilityGraph":
        """Link every pair of members that share no edge."""
        links = {
            (i, j)
            for i in range(len(members))
            for j in range(i + 1, len(members))
            if not members[i] & members[j]
        }
        return cls(tuple(weights), frozenset(links))

    @property
    def size(self) -> int:
        return len(self.weights)

    def adjacency(self) -> List[Set[int]]:
        adjacent: List[Set[int]] = [set() for _ in self.weights]
        for i, j in self.links:
            adjacent[i].add(j)
            adjacent[j].add(i)
        return adjacent


@dataclass(frozen=True)
class CliqueResult:
    nodes: Tuple[int, ...]
    weight: float
    optimal: bool = True


def _color_bound(candidates: Sequence[int], weights: Sequence[float], adjacent: List[Set[int]]) -> float:
    # A clique holds at most one node of each greedy color class.
    classes: List[List[int]] = []
    for v in sorted(candidates, key=lambda u: -weights[u]):
        for members in classes:
            if not any(u in adjacent[v] for u in members):
                members.append(v)
                break
        else:
            classes.append([v])
    return sum(weights[members[0]] for members in classes)


def _greedy(cg: CompatibilityGraph, nodes: Sequence[int], adjacent: List[Set[int]]) -> Tuple[int, ...]:
    chosen: List[int] = []
    for v in sorted(nodes, key=lambda u: (-cg.weights[u], u)):
        if all(u in adjacent[v] for u in chosen):
            chosen.append(v)
    return tuple(sorted(chosen))


def max_weight_clique(cg: CompatibilityGraph, cap: int = _DEFAULT_CAPS.clique_nodes) -> CliqueResult:
    """
    Find a maximum-weight clique.

    Args:
        cg: Compatibility graph
        cap: Largest node count solved exactly

    Returns:
        CliqueResult; among equal-weight cliques the lexicographically
        smallest sorted node tuple wins. ``optimal`` is False for the
        greedy result used above the cap. Nodes of weight at most
        WEIGHT_FLOOR are left out of the search, so the clique is maximum
        in weight but need not be maximal.

    Examples:
        >>> cg = CompatibilityGraph((1.0, 0.5, 1.0), frozenset({(0, 1), (1, 2)}))
        >>> max_weight_clique(cg).nodes
        (0, 1)
    """
    if cg.size == 0:
        return CliqueResult((), 0.0)
    weights = cg.weights
    nodes = [v for v in range(cg.size) if weights[v] > WEIGHT_FLOOR]
    if not nodes:
        return CliqueResult((0,), weights[0])
    adjacent = cg.adjacency()

    if len(nodes) > cap:
        chosen = _greedy(cg, nodes, adjacent)
        logger.warning(
            "compatibility graph has %d weighted nodes (cap %d); using a greedy clique", len(nodes), cap
        )
        return CliqueResult(chosen, sum(weights[v] for v in chosen), optimal=False)

    best_nodes: Tuple[int, ...] = ()
    best_weight = -1.0

    def expand(clique: Tuple[int, ...], weight: float, candidates: List[int]):
        nonlocal best_nodes, best_weight
        if weight > best_weight + TIE_TOLERANCE:
            best_nodes, best_weight = clique, weight
        if not candidates:
            return
        if weight + _color_bound(candidates, weights, adjacent) <= best_weight + TIE_TOLERANCE:
            return
        remaining = sum(weights[v] for v in candidates)
        for position, v in enumerate(candidates):
            if weight + remaining <= best_weight + TIE_TOLERANCE:
                return
            remaining -= weights[v]
            expand(
                clique + (v,),
                weight + weights[v],
                [u for u in candidates[position + 1:] if u in adjacent[v]],
            )

    expand((), 0.0, nodes)
    return CliqueResult(best_nodes, best_weight)
