"""
Deterministic labeled graphs and the combinatorial primitives built on them.

A DetGraph is the skeleton of a probabilistic graph, a query, a relaxed
query or an indexed feature. Subgraph tests are label-preserving subgraph
monomorphisms (non-induced): every pattern edge must map onto a target edge
with the same label, extra target edges are allowed.

Matching uses the VF2 implementation of networkx.
"""

import itertools
import json
import logging
from collections import Counter, deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

import networkx as nx
from networkx.algorithms import isomorphism

from .config import Caps
from .exceptions import (
    CanonicalCodeError,
    EmbeddingBudgetExceeded,
    GraphError,
    InvalidParameterError,
)

logger = logging.getLogger(__name__)

EdgeSet = FrozenSet[str]

_DEFAULT_CAPS = Caps()

_node_match = isomorphism.categorical_node_match("label", None)
_edge_match = isomorphism.categorical_edge_match("label", None)


def edge_set_key(edges: Iterable[str]) -> Tuple[int, List[str]]:
    """Deterministic ordering for edge-id sets: by size, then by sorted ids."""
    items = sorted(edges)
    return (len(items), items)


@dataclass(frozen=True)
class DetGraph:
    """
    Labeled undirected simple graph.

    Attributes:
        vertices: ``(vertex_id, label)`` pairs
        edges: ``(edge_id, endpoint_a, endpoint_b, label)`` tuples

    Raises:
        GraphError: On duplicate ids, dangling endpoints, self-loops or
                    parallel edges

    Examples:
        >>> g = DetGraph([("v1", "A"), ("v2", "B")], [("e1", "v1", "v2", "x")])
        >>> g.size
        1
        >>> g.edge_between("v2", "v1")
        'e1'
    """

    vertices: Tuple[Tuple[str, str], ...]
    edges: Tuple[Tuple[str, str, str, str], ...] = ()

    def __post_init__(self):
        vertices = tuple((str(vid), str(label)) for vid, label in self.vertices)
        edges = tuple((str(eid), str(a), str(b), str(label)) for eid, a, b, label in self.edges)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", edges)

        labels: Dict[str, str] = {}
        for vid, label in vertices:
            if vid in labels:
                raise GraphError(f"duplicate vertex id {vid!r}")
            labels[vid] = label

        edge_index: Dict[str, Tuple[str, str, str]] = {}
        adjacency: Dict[str, Dict[str, str]] = {vid: {} for vid in labels}
        for eid, a, b, label in edges:
            if eid in edge_index:
                raise GraphError(f"duplicate edge id {eid!r}")
            if a not in labels or b not in labels:
                raise GraphError(f"edge {eid!r} references unknown vertex ({a!r}, {b!r})")
            if a == b:
                raise GraphError(f"edge {eid!r} is a self-loop on {a!r}")
            if b in adjacency[a]:
                raise GraphError(
                    f"edges {adjacency[a][b]!r} and {eid!r} join the same vertex pair ({a!r}, {b!r})"
                )
            edge_index[eid] = (a, b, label)
            adjacency[a][b] = eid
            adjacency[b][a] = eid

        object.__setattr__(self, "_labels", labels)
        object.__setattr__(self, "_edge_index", edge_index)
        object.__setattr__(self, "_adjacency", adjacency)
        object.__setattr__(self, "_nx", None)

    # -- accessors -----------------------------------------------------

    @property
    def vertex_ids(self) -> Tuple[str, ...]:
        return tuple(vid for vid, _ in self.vertices)

    @property
    def edge_ids(self) -> Tuple[str, ...]:
        return tuple(edge[0] for edge in self.edges)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def size(self) -> int:
        """Number of edges, the |g| of subgraph distance."""
        return len(self.edges)

    def label(self, vertex_id: str) -> str:
        return self._labels[vertex_id]

    def edge(self, edge_id: str) -> Tuple[str, str, str]:
        """Return ``(endpoint_a, endpoint_b, label)`` of an edge."""
        return self._edge_index[edge_id]

    def has_edge(self, edge_id: str) -> bool:
        return edge_id in self._edge_index

    def edge_between(self, a: str, b: str) -> Optional[str]:
        return self._adjacency.get(a, {}).get(b)

    def neighbors(self, vertex_id: str) -> Dict[str, str]:
        """Map neighbor vertex id -> id of the joining edge."""
        return dict(self._adjacency[vertex_id])

    def incident_edges(self, vertex_id: str) -> Tuple[str, ...]:
        return tuple(self._adjacency[vertex_id].values())

    def vertex_labels(self) -> FrozenSet[str]:
        return frozenset(self._labels.values())

    def edge_labels(self) -> FrozenSet[str]:
        return frozenset(label for _, _, _, label in self.edges)

    def vertex_label_counts(self) -> Counter:
        return Counter(self._labels.values())

    def edge_signature_counts(self) -> Counter:
        """Count edges by (sorted endpoint labels, edge label)."""
        counts: Counter = Counter()
        for _, a, b, label in self.edges:
            la, lb = sorted((self._labels[a], self._labels[b]))
            counts[(la, lb, label)] += 1
        return counts

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        start = self.vertices[0][0]
        seen = {start}
        queue = deque([start])
        while queue:
            current = queue.popleft()
            for nbr in self._adjacency[current]:
                if nbr not in seen:
                    seen.add(nbr)
                    queue.append(nbr)
        return len(seen) == len(self.vertices)

    # -- derived graphs ------------------------------------------------

    def edge_subgraph(self, edge_ids: Iterable[str]) -> "DetGraph":
        """Graph made of the given edges and their endpoints only."""
        keep = set(edge_ids)
        edges = [edge for edge in self.edges if edge[0] in keep]
        touched = {v for _, a, b, _ in edges for v in (a, b)}
        vertices = [vertex for vertex in self.vertices if vertex[0] in touched]
        return DetGraph(vertices, edges)

    def without_edges(self, edge_ids: Iterable[str]) -> "DetGraph":
        """Delete edges and drop the vertices left isolated."""
        drop = set(edge_ids)
        return self.edge_subgraph(eid for eid in self.edge_ids if eid not in drop)

    def with_edge_labels(self, relabels: Dict[str, str]) -> "DetGraph":
        edges = [(eid, a, b, relabels.get(eid, label)) for eid, a, b, label in self.edges]
        return DetGraph(self.vertices, edges)

    def realize(self, present: Iterable[str]) -> "DetGraph":
        """Possible world skeleton: every vertex, only the present edges."""
        keep = set(present)
        return DetGraph(self.vertices, [edge for edge in self.edges if edge[0] in keep])

    def to_networkx(self) -> nx.Graph:
        cached = self._nx
        if cached is None:
            cached = nx.Graph()
            for vid, label in self.vertices:
                cached.add_node(vid, label=label)
            for eid, a, b, label in self.edges:
                cached.add_edge(a, b, label=label, eid=eid)
            object.__setattr__(self, "_nx", cached)
        return cached

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": vid, "label": label} for vid, label in self.vertices],
            "edges": [{"id": eid, "u": a, "v": b, "label": label} for eid, a, b, label in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DetGraph":
        return cls(
            [(v["id"], v["label"]) for v in data.get("vertices", [])],
            [(e["id"], e["u"], e["v"], e["label"]) for e in data.get("edges", [])],
        )


@dataclass(frozen=True)
class Embedding:
    """
    One label-preserving injective map of a pattern into a target.

    Attributes:
        pattern_id: Identifier of the mapped pattern (feature id, "" if none)
        vertex_map: Sorted ``(pattern_vertex, target_vertex)`` pairs
        edge_image: Target edge ids hit by the pattern's edges
    """

    pattern_id: str
    vertex_map: Tuple[Tuple[str, str], ...]
    edge_image: EdgeSet

    @property
    def mapping(self) -> Dict[str, str]:
        return dict(self.vertex_map)


@dataclass(frozen=True)
class EmbeddingSet:
    """All embeddings of a pattern plus their distinct edge images."""

    embeddings: Tuple[Embedding, ...]

    @property
    def edge_images(self) -> Tuple[EdgeSet, ...]:
        return tuple(sorted({emb.edge_image for emb in self.embeddings}, key=edge_set_key))

    def __len__(self) -> int:
        return len(self.embeddings)

    def __iter__(self) -> Iterator[Embedding]:
        return iter(self.embeddings)


@dataclass(frozen=True)
class CanonicalCode:
    code: bytes

    def __lt__(self, other: "CanonicalCode") -> bool:
        return self.code < other.code


@dataclass(frozen=True)
class RelaxedQuerySet:
    """
    Graphs obtained from ``origin`` by exactly ``delta`` edge relaxations.

    Members are pairwise non-isomorphic and ordered by canonical code.
    """

    origin: DetGraph
    delta: int
    members: Tuple[DetGraph, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[DetGraph]:
        return iter(self.members)


def _label_feasible(pattern: DetGraph, target: DetGraph) -> bool:
    if pattern.num_vertices > target.num_vertices or pattern.size > target.size:
        return False
    have = target.vertex_label_counts()
    for label, count in pattern.vertex_label_counts().items():
        if have[label] < count:
            return False
    have_edges = target.edge_signature_counts()
    for signature, count in pattern.edge_signature_counts().items():
        if have_edges[signature] < count:
            return False
    return True


def _matcher(pattern: DetGraph, target: DetGraph) -> isomorphism.GraphMatcher:
    return isomorphism.GraphMatcher(
        target.to_networkx(),
        pattern.to_networkx(),
        node_match=_node_match,
        edge_match=_edge_match,
    )


def subgraph_iso_exists(pattern: DetGraph, target: DetGraph) -> bool:
    """
    Test whether ``pattern`` is subgraph isomorphic to ``target``.

    Args:
        pattern: Possibly disconnected pattern; components never share target vertices
        target: Graph searched

    Returns:
        True iff an injective label-preserving vertex map exists under which
        every pattern edge lands on a target edge with the same label

    Examples:
        >>> edge = DetGraph([("a", "A"), ("b", "B")], [("e", "a", "b", "x")])
        >>> subgraph_iso_exists(edge, edge)
        True
    """
    if pattern.num_vertices == 0:
        return True
    if not _label_feasible(pattern, target):
        return False
    return _matcher(pattern, target).subgraph_is_monomorphic()


def iter_embeddings(pattern: DetGraph, target: DetGraph) -> Iterator[Dict[str, str]]:
    """Lazily yield every vertex map ``pattern vertex -> target vertex``."""
    if pattern.num_vertices == 0:
        yield {}
        return
    if not _label_feasible(pattern, target):
        return
    for target_to_pattern in _matcher(pattern, target).subgraph_monomorphisms_iter():
        yield {p: t for t, p in target_to_pattern.items()}


def _edge_image(pattern: DetGraph, target: DetGraph, mapping: Dict[str, str]) -> EdgeSet:
    return frozenset(target.edge_between(mapping[a], mapping[b]) for _, a, b, _ in pattern.edges)


def enumerate_embeddings(
    pattern: DetGraph,
    target: DetGraph,
    cap: Optional[int] = None,
    pattern_id: str = "",
) -> EmbeddingSet:
    """
    Enumerate every embedding of ``pattern`` in ``target``.

    Args:
        pattern: Pattern graph (features are connected)
        target: Graph searched
        cap: Maximum number of vertex maps (default ``Caps.vertex_maps``)
        pattern_id: Identifier stored on each embedding

    Returns:
        EmbeddingSet; ``edge_images`` deduplicates automorphic maps

    Raises:
        EmbeddingBudgetExceeded: With ``partial_count`` when the cap is hit
    """
    limit = _DEFAULT_CAPS.vertex_maps if cap is None else cap
    found: List[Embedding] = []
    for mapping in iter_embeddings(pattern, target):
        if len(found) >= limit:
            raise EmbeddingBudgetExceeded(
                f"embedding budget exceeded: more than {limit} vertex maps", partial_count=len(found)
            )
        found.append(
            Embedding(
                pattern_id=pattern_id,
                vertex_map=tuple(sorted(mapping.items())),
                edge_image=_edge_image(pattern, target, mapping),
            )
        )
    return EmbeddingSet(tuple(found))


def edge_images(pattern: DetGraph, target: DetGraph, max_maps: Optional[int] = None) -> Tuple[EdgeSet, ...]:
    """Distinct edge images of ``pattern`` in ``target`` in deterministic order."""
    limit = _DEFAULT_CAPS.vertex_maps if max_maps is None else max_maps
    images = set()
    for count, mapping in enumerate(iter_embeddings(pattern, target)):
        if count >= limit:
            raise EmbeddingBudgetExceeded(
                f"embedding budget exceeded: more than {limit} vertex maps", partial_count=count
            )
        images.add(_edge_image(pattern, target, mapping))
    return tuple(sorted(images, key=edge_set_key))


def capped_edge_images(
    pattern: DetGraph, target: DetGraph, max_images: int, max_maps: int
) -> Tuple[Tuple[EdgeSet, ...], bool]:
    """
    Distinct edge images, stopping early instead of raising.

    Returns:
        ``(images, truncated)``; truncated is True when either cap stopped
        the enumeration. An edgeless pattern yields at most the empty image.
    """
    images = set()
    truncated = False
    for count, mapping in enumerate(iter_embeddings(pattern, target)):
        if count >= max_maps:
            truncated = True
            break
        image = _edge_image(pattern, target, mapping)
        if image not in images and len(images) >= max_images:
            truncated = True
            break
        images.add(image)
        if pattern.size == 0:
            break
    return tuple(sorted(images, key=edge_set_key)), truncated


# -- canonical codes ---------------------------------------------------


def _refined_colors(g: DetGraph) -> Dict[str, int]:
    ordered_labels = sorted(g.vertex_labels())
    color = {vid: ordered_labels.index(label) for vid, label in g.vertices}
    classes = len(set(color.values()))
    while True:
        signatures = {
            vid: (
                color[vid],
                tuple(sorted((g.edge(eid)[2], color[nbr]) for nbr, eid in g.neighbors(vid).items())),
            )
            for vid in g.vertex_ids
        }
        ranks = {sig: rank for rank, sig in enumerate(sorted(set(signatures.values())))}
        refined = {vid: ranks[signatures[vid]] for vid in g.vertex_ids}
        if len(ranks) == classes:
            return refined
        color, classes = refined, len(ranks)


def canonical_code(g: DetGraph, max_vertices: Optional[int] = None, max_states: Optional[int] = None) -> CanonicalCode:
    """
    Exact isomorphism-invariant code of a small labeled graph.

    The code is the lexicographically smallest adjacency encoding over all
    vertex orders consistent with color refinement (an isomorphism
    invariant), so equal codes mean isomorphic graphs and vice versa.

    Args:
        g: Graph to encode
        max_vertices: Vertex cap (default 12)
        max_states: Cap on tied partial orders kept during the search

    Raises:
        CanonicalCodeError: When a cap is exceeded

    Examples:
        >>> a = DetGraph([("1", "A"), ("2", "B")], [("e", "1", "2", "x")])
        >>> b = DetGraph([("p", "B"), ("q", "A")], [("f", "p", "q", "x")])
        >>> canonical_code(a) == canonical_code(b)
        True
    """
    vertex_cap = _DEFAULT_CAPS.code_vertices if max_vertices is None else max_vertices
    state_cap = _DEFAULT_CAPS.code_states if max_states is None else max_states
    if g.num_vertices > vertex_cap:
        raise CanonicalCodeError(f"canonical code limited to {vertex_cap} vertices, got {g.num_vertices}")

    colors = _refined_colors(g)
    by_color: Dict[int, List[str]] = {}
    for vid in g.vertex_ids:
        by_color.setdefault(colors[vid], []).append(vid)
    required = sorted(colors.values())

    def entry(v: str, u: str):
        eid = g.edge_between(v, u)
        return (0, "") if eid is None else (1, g.edge(eid)[2])

    states: List[Tuple[str, ...]] = [()]
    rows = []
    for position, color in enumerate(required):
        best_row = None
        extended: List[Tuple[str, ...]] = []
        for state in states:
            used = set(state)
            for vid in by_color[color]:
                if vid in used:
                    continue
                row = tuple(entry(vid, state[j]) for j in range(position))
                if best_row is None or row < best_row:
                    best_row = row
                    extended = [state + (vid,)]
                elif row == best_row:
                    extended.append(state + (vid,))
        if len(extended) > state_cap:
            raise CanonicalCodeError(f"canonical search kept more than {state_cap} tied orders")
        states = extended
        rows.append(best_row)

    some_vertex = {color: members[0] for color, members in by_color.items()}
    labels = [g.label(some_vertex[color]) for color in required]
    payload = json.dumps({"v": labels, "e": rows}, separators=(",", ":"), ensure_ascii=False)
    return CanonicalCode(payload.encode("utf-8"))


# -- relaxation and distance -------------------------------------------


@lru_cache(maxsize=512)
def _relax_cached(q: DetGraph, delta: int, relabel: bool, alphabet: Tuple[str, ...]) -> Tuple[DetGraph, ...]:
    if delta == 0:
        return (q,)
    members: Dict[bytes, DetGraph] = {}

    def admit(graph: DetGraph):
        code = canonical_code(graph).code
        if code not in members:
            members[code] = graph

    edge_ids = q.edge_ids
    relabel_counts = range(delta + 1) if relabel else (0,)
    for relabeled in relabel_counts:
        for deleted in itertools.combinations(edge_ids, delta - relabeled):
            kept = [eid for eid in edge_ids if eid not in deleted]
            base = q.without_edges(deleted)
            if relabeled == 0:
                admit(base)
                continue
            for targets in itertools.combinations(kept, relabeled):
                options = [[label for label in alphabet if label != q.edge(eid)[2]] for eid in targets]
                for labels in itertools.product(*options):
                    admit(base.with_edge_labels(dict(zip(targets, labels))))
    return tuple(members[code] for code in sorted(members))


def relax_query(
    q: DetGraph,
    delta: int,
    relabel: bool = False,
    alphabet: Optional[Iterable[str]] = None,
) -> RelaxedQuerySet:
    """
    Relax ``q`` by exactly ``delta`` edge deletions (or relabelings).

    Args:
        q: Connected query graph
        delta: Number of relaxed edges, 0 <= delta <= q.size
        relabel: Also substitute edge labels, each substitution counting one
        alphabet: Edge labels available for substitution (default: q's own)

    Returns:
        RelaxedQuerySet deduplicated by canonical code; isolated vertices dropped

    Raises:
        InvalidParameterError: If delta is out of range

    Examples:
        >>> path = DetGraph([("1", "A"), ("2", "A"), ("3", "A")],
        ...                 [("a", "1", "2", "x"), ("b", "2", "3", "x")])
        >>> len(relax_query(path, 1))
        1
    """
    if delta < 0 or delta > q.size:
        raise InvalidParameterError(f"delta must lie in [0, {q.size}], got {delta}")
    labels = tuple(sorted(set(alphabet) if alphabet is not None else q.edge_labels())) if relabel else ()
    return RelaxedQuerySet(q, delta, _relax_cached(q, delta, bool(relabel), labels))


def is_subgraph_similar(q: DetGraph, g: DetGraph, delta: int) -> bool:
    """True iff some exact-``delta`` deletion relaxation of ``q`` embeds in ``g``."""
    if g.size < q.size - delta:
        return False
    return any(subgraph_iso_exists(rq, g) for rq in relax_query(q, delta).members)


def subgraph_distance(q: DetGraph, g: DetGraph, limit: Optional[int] = None) -> int:
    """
    Subgraph distance ``|q| - |mcs(q, g)|`` counted in edges.

    Args:
        q: Connected query graph
        g: Graph compared against
        limit: Stop searching past this distance and return ``limit + 1``

    Returns:
        The least d such that a d-edge relaxation of q embeds in g (at most |q|)
    """
    ceiling = q.size if limit is None else min(limit, q.size)
    for distance in range(max(0, q.size - g.size), ceiling + 1):
        if is_subgraph_similar(q, g, distance):
            return distance
    return ceiling + 1 if limit is not None and ceiling < q.size else q.size
