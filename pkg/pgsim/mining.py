"""
Frequent and discriminative feature selection.

Seeds are every single vertex label and every single edge signature of the
database. Larger connected patterns grow one edge at a time from the
embeddings of frequent parents (a new edge to a new vertex, or a closing
edge between mapped vertices), deduplicated by canonical code. A grown
pattern f joins the feature set when

    frq(f) >= beta   and   dis(f) > gamma

where frq counts the graphs whose skeleton contains f with at least an
alpha share of edge-disjoint embeddings, and dis is the ratio between the
common support of f's selected subfeatures and f's own support.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

from .clique import CompatibilityGraph, max_weight_clique
from .config import Caps
from .exceptions import InvalidParameterError
from .graph import CanonicalCode, DetGraph, canonical_code, capped_edge_images, iter_embeddings, subgraph_iso_exists
from .model import GraphDatabase

logger = logging.getLogger(__name__)

_DEFAULT_CAPS = Caps()


@dataclass(frozen=True)
class Feature:
    """Indexed connected pattern."""

    feature_id: str
    pattern: DetGraph
    code: CanonicalCode

    @classmethod
    def from_pattern(cls, feature_id: str, pattern: DetGraph) -> "Feature":
        return cls(feature_id, pattern, canonical_code(pattern))

    def to_dict(self) -> dict:
        data = {"id": self.feature_id, "code": self.code.code.decode("utf-8")}
        data.update(self.pattern.to_dict())
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Feature":
        return cls(data["id"], DetGraph.from_dict(data), CanonicalCode(data["code"].encode("utf-8")))


@dataclass
class FeatureStats:
    """
    Attributes:
        support: Graph ids whose skeleton contains the feature (D_f)
        embedding_counts: Distinct embedding events per supporting graph (|Ef|)
        disjoint_counts: Largest edge-disjoint embedding set per graph (|IN|)
    """

    support: Tuple[str, ...]
    embedding_counts: Dict[str, int] = field(default_factory=dict)
    disjoint_counts: Dict[str, int] = field(default_factory=dict)

    def qualifying(self, alpha: float) -> List[str]:
        """Supporting graphs with |IN| / |Ef| >= alpha."""
        return [
            gid
            for gid in self.support
            if self.embedding_counts.get(gid, 0) > 0
            and self.disjoint_counts.get(gid, 0) / self.embedding_counts[gid] >= alpha
        ]

    def to_dict(self) -> dict:
        return {
            "support": list(self.support),
            "embedding_counts": dict(self.embedding_counts),
            "disjoint_counts": dict(self.disjoint_counts),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureStats":
        return cls(
            tuple(data["support"]),
            {k: int(v) for k, v in data.get("embedding_counts", {}).items()},
            {k: int(v) for k, v in data.get("disjoint_counts", {}).items()},
        )


@dataclass
class FeatureSelection:
    features: List[Feature]
    stats: Dict[str, FeatureStats]
    complete: bool = True


def _embedding_profile(pattern: DetGraph, skeleton: DetGraph, caps: Caps) -> Tuple[int, int]:
    """``(|Ef|, |IN|)`` of a pattern in one skeleton."""
    if pattern.size == 0:
        maps = sum(1 for _ in zip(range(caps.embeddings), iter_embeddings(pattern, skeleton)))
        return maps, maps
    images, _ = capped_edge_images(pattern, skeleton, caps.embeddings, caps.vertex_maps)
    if not images:
        return 0, 0
    clique = max_weight_clique(CompatibilityGraph.from_members(images, [1.0] * len(images)), caps.clique_nodes)
    return len(images), len(clique.nodes)


def max_disjoint_embeddings(f: DetGraph, skeleton: DetGraph, caps: Optional[Caps] = None) -> int:
    """
    Size of the largest set of pairwise edge-disjoint embeddings of ``f``.

    Exact up to the clique cap; a greedy set (logged) beyond it.

    Examples:
        >>> tri = DetGraph([("1", "A"), ("2", "A"), ("3", "A")],
        ...                [("e1", "1", "2", "x"), ("e2", "2", "3", "x"), ("e3", "1", "3", "x")])
        >>> edge = DetGraph([("a", "A"), ("b", "A")], [("e", "a", "b", "x")])
        >>> max_disjoint_embeddings(edge, tri)
        3
    """
    return _embedding_profile(f, skeleton, caps or _DEFAULT_CAPS)[1]


def feature_stats(
    pattern: DetGraph,
    database: GraphDatabase,
    caps: Optional[Caps] = None,
    support: Optional[Sequence[str]] = None,
) -> FeatureStats:
    """Support and embedding profile; ``support`` skips the containment tests when known."""
    caps = caps or _DEFAULT_CAPS
    if support is None:
        support = [g.graph_id for g in database if subgraph_iso_exists(pattern, g.skeleton)]
    stats = FeatureStats(tuple(sorted(support)))
    for gid in stats.support:
        total, disjoint = _embedding_profile(pattern, database[gid].skeleton, caps)
        stats.embedding_counts[gid] = total
        stats.disjoint_counts[gid] = disjoint
    return stats


def frq(
    f: DetGraph,
    database: GraphDatabase,
    alpha: float,
    caps: Optional[Caps] = None,
    stats: Optional[FeatureStats] = None,
) -> float:
    """
    Fraction of database graphs containing ``f`` with a disjoint share >= alpha.

    Raises:
        InvalidParameterError: If the database is empty
    """
    if len(database) == 0:
        raise InvalidParameterError("frequency is undefined on an empty database")
    stats = stats or feature_stats(f, database, caps)
    return len(stats.qualifying(alpha)) / len(database)


def dis(
    f: DetGraph,
    selected: Sequence[Feature],
    database: GraphDatabase,
    supports: Optional[Mapping[bytes, FrozenSet[str]]] = None,
) -> float:
    """
    Discriminative ratio |common support of f's selected subfeatures| / |D_f|.

    With no selected proper subfeature the common support is the whole
    database. The ratio is never below 1.

    Args:
        f: Candidate pattern
        selected: Features selected so far
        database: Graph database
        supports: Optional support cache keyed by canonical code

    Raises:
        InvalidParameterError: If f is contained in no graph
    """
    cache = dict(supports or {})

    def support_of(pattern: DetGraph, code: bytes) -> FrozenSet[str]:
        if code not in cache:
            cache[code] = frozenset(g.graph_id for g in database if subgraph_iso_exists(pattern, g.skeleton))
        return cache[code]

    own_code = canonical_code(f).code
    own = support_of(f, own_code)
    if not own:
        raise InvalidParameterError("discriminative ratio needs a feature with non-empty support")
    common = frozenset(database.ids)
    for feature in selected:
        sub = feature.pattern
        if feature.code.code == own_code or sub.size > f.size or sub.num_vertices > f.num_vertices:
            continue
        if subgraph_iso_exists(sub, f):
            common &= support_of(sub, feature.code.code)
    return len(common) / len(own)


# -- pattern growth --------------------------------------------------------


def _pattern_key(pattern: DetGraph, code: bytes) -> Tuple[int, int, bytes]:
    return (pattern.num_vertices, pattern.size, code)


def _vertex_pattern(label: str) -> DetGraph:
    return DetGraph([("p0", label)])


def _edge_pattern(label_a: str, edge_label: str, label_b: str) -> DetGraph:
    return DetGraph([("p0", label_a), ("p1", label_b)], [("q0", "p0", "p1", edge_label)])


def _grow(parent: DetGraph, descriptor: tuple) -> DetGraph:
    edge_id = f"q{parent.size}"
    if descriptor[0] == "close":
        _, a, b, label = descriptor
        return DetGraph(parent.vertices, parent.edges + ((edge_id, a, b, label),))
    _, a, vertex_label, label = descriptor
    new_vertex = f"p{parent.num_vertices}"
    return DetGraph(
        parent.vertices + ((new_vertex, vertex_label),),
        parent.edges + ((edge_id, a, new_vertex, label),),
    )


def _extensions(
    parent: DetGraph, support: Sequence[str], database: GraphDatabase, max_vertices: int, caps: Caps
) -> Iterator[DetGraph]:
    """One-edge extensions of ``parent`` that occur in some supporting graph."""
    grown: Dict[tuple, DetGraph] = {}
    for gid in support:
        skeleton = database[gid].skeleton
        for count, mapping in enumerate(iter_embeddings(parent, skeleton)):
            if count >= caps.embeddings:
                break
            inverse = {t: p for p, t in mapping.items()}
            used = {skeleton.edge_between(mapping[a], mapping[b]) for _, a, b, _ in parent.edges}
            for pv, tv in mapping.items():
                for tn, eid in skeleton.neighbors(tv).items():
                    if eid in used:
                        continue
                    label = skeleton.edge(eid)[2]
                    if tn in inverse:
                        a, b = sorted((pv, inverse[tn]))
                        descriptor = ("close", a, b, label)
                    elif parent.num_vertices < max_vertices:
                        descriptor = ("open", pv, skeleton.label(tn), label)
                    else:
                        continue
                    if descriptor not in grown:
                        grown[descriptor] = _grow(parent, descriptor)
    for descriptor in sorted(grown):
        yield grown[descriptor]


def mine_features(
    database: GraphDatabase,
    alpha: float,
    beta: float,
    gamma: float,
    max_vertices: int,
    caps: Optional[Caps] = None,
) -> FeatureSelection:
    """
    Select features and keep their statistics.

    Returns:
        FeatureSelection with features ``f1, f2, ...`` ordered by
        (vertex count, edge count, canonical code); ``complete`` is False when
        the candidate cap stopped the growth

    Raises:
        InvalidParameterError: On an empty database or out-of-range parameters
    """
    caps = caps or _DEFAULT_CAPS
    if len(database) == 0:
        raise InvalidParameterError("cannot select features from an empty database")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameterError(f"alpha must lie in [0, 1], got {alpha}")
    if beta < 0 or gamma < 0:
        raise InvalidParameterError("beta and gamma must be non-negative")
    if max_vertices < 1:
        raise InvalidParameterError(f"max_vertices must be >= 1, got {max_vertices}")
    n = len(database)

    supports: Dict[bytes, FrozenSet[str]] = {}
    patterns: Dict[bytes, DetGraph] = {}
    stats: Dict[bytes, FeatureStats] = {}

    def admit_seed(pattern: DetGraph):
        code = canonical_code(pattern).code
        if code in patterns:
            return
        patterns[code] = pattern
        supports[code] = frozenset(g.graph_id for g in database if subgraph_iso_exists(pattern, g.skeleton))

    signatures = set()
    for g in database:
        for label in g.skeleton.vertex_labels():
            admit_seed(_vertex_pattern(label))
        for la, lb, edge_label in g.skeleton.edge_signature_counts():
            signatures.add((la, edge_label, lb))
    for la, edge_label, lb in sorted(signatures):
        admit_seed(_edge_pattern(la, edge_label, lb))

    selected: Dict[bytes, DetGraph] = dict(patterns)
    selected_features = [Feature(code.decode("utf-8"), p, CanonicalCode(code)) for code, p in patterns.items()]
    seen = set(patterns)
    frontier = sorted(
        (code for code, p in patterns.items() if p.size == 1 and len(supports[code]) / n >= beta),
        key=lambda code: _pattern_key(patterns[code], code),
    )
    complete = True
    level = 1
    while frontier and complete:
        level += 1
        children: Dict[bytes, DetGraph] = {}
        for parent_code in frontier:
            parent = patterns[parent_code]
            for child in _extensions(parent, sorted(supports[parent_code]), database, max_vertices, caps):
                code = canonical_code(child).code
                if code in seen:
                    continue
                seen.add(code)
                children[code] = child
                supports[code] = frozenset(
                    gid for gid in supports[parent_code] if subgraph_iso_exists(child, database[gid].skeleton)
                )
                if len(seen) > caps.mining_candidates:
                    complete = False
                    break
            if not complete:
                break
        if not complete:
            logger.warning(
                "feature mining stopped at %d candidates while growing %d-edge patterns; %d features selected",
                caps.mining_candidates, level, len(selected),
            )

        frontier = []
        for code in sorted(children, key=lambda c: _pattern_key(children[c], c)):
            child = children[code]
            if len(supports[code]) / n < beta:
                continue
            patterns[code] = child
            frontier.append(code)
            child_stats = feature_stats(child, database, caps, sorted(supports[code]))
            if frq(child, database, alpha, caps, child_stats) < beta:
                continue
            if dis(child, selected_features, database, supports) > gamma:
                selected[code] = child
                stats[code] = child_stats
                selected_features.append(Feature(code.decode("utf-8"), child, CanonicalCode(code)))
        logger.debug("level %d: %d candidates, %d frequent", level, len(children), len(frontier))

    ordered = sorted(selected, key=lambda c: _pattern_key(selected[c], c))
    features: List[Feature] = []
    feature_stats_by_id: Dict[str, FeatureStats] = {}
    for position, code in enumerate(ordered, start=1):
        fid = f"f{position}"
        features.append(Feature(fid, selected[code], CanonicalCode(code)))
        feature_stats_by_id[fid] = stats.get(code) or feature_stats(
            selected[code], database, caps, sorted(supports[code])
        )
    logger.info("selected %d features from %d graphs", len(features), n)
    return FeatureSelection(features, feature_stats_by_id, complete)


def select_features(
    database: GraphDatabase,
    alpha: float,
    beta: float,
    gamma: float,
    max_vertices: int,
    caps: Optional[Caps] = None,
) -> List[Feature]:
    """
    Select the indexed features of a database.

    Args:
        database: Graph database
        alpha: Minimum disjoint-embedding share for a graph to count in frq
        beta: Frequency threshold
        gamma: Discriminative threshold
        max_vertices: Largest feature vertex count
        caps: Embedding, clique and candidate caps

    Returns:
        Seeds (every vertex label, every edge signature) plus every grown
        pattern passing both thresholds, ids ``f1, f2, ...``
    """
    return mine_features(database, alpha, beta, gamma, max_vertices, caps).features
