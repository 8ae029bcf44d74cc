"""
Synthetic probabilistic graph databases and extracted queries.

Skeletons are random spanning trees plus extra edges. Edges are grouped
into neighbor sets (singletons, vertex stars, triangles or a mix) and each
set receives a joint table:

* ``independent``: product of per-edge Bernoulli tables;
* ``correlated``: a Dirichlet draw over the 2^k rows;
* ``max-transform``: each row gets the largest per-edge mass of its
  assignment (p for a present edge, 1 - p for an absent one), then the
  rows are normalized.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .config import derive_seed
from .exceptions import InvalidParameterError
from .graph import DetGraph
from .model import GraphDatabase, JointTable, ProbGraph

logger = logging.getLogger(__name__)

POLICIES = ("singletons", "stars", "triangles", "mixed")
TABLE_MODES = ("independent", "correlated", "max-transform")

_VERTEX_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
_EDGE_ALPHABET = "xyzwuvstrqponmlkjihgfedcba"


@dataclass(frozen=True)
class GeneratorConfig:
    """
    Attributes:
        graphs: Number of graphs
        min_vertices, max_vertices: Vertex count range (uniform)
        density: Share of the non-tree vertex pairs that receive an edge
        vertex_labels, edge_labels: Alphabet sizes
        policy: Neighbor-set policy, one of POLICIES
        table_mode: Joint table mode, one of TABLE_MODES
        p_low, p_high: Range of per-edge presence probabilities
        seed: Root seed; graph i uses derive_seed(seed, i)
        id_prefix: Graph ids are ``{id_prefix}{i:03d}``
        max_set_size: Largest neighbor set built by the stars policy

    Raises:
        InvalidParameterError: On infeasible combinations
    """

    graphs: int = 10
    min_vertices: int = 4
    max_vertices: int = 7
    density: float = 0.2
    vertex_labels: int = 2
    edge_labels: int = 2
    policy: str = "mixed"
    table_mode: str = "correlated"
    p_low: float = 0.3
    p_high: float = 0.9
    seed: int = 0
    id_prefix: str = "g"
    max_set_size: int = 3

    def __post_init__(self):
        if self.graphs < 1:
            raise InvalidParameterError(f"graphs must be >= 1, got {self.graphs}")
        if not 2 <= self.min_vertices <= self.max_vertices:
            raise InvalidParameterError(
                f"vertex range must satisfy 2 <= min <= max, got [{self.min_vertices}, {self.max_vertices}]"
            )
        if not 0.0 <= self.density <= 1.0:
            raise InvalidParameterError(f"density must lie in [0, 1], got {self.density}")
        if not 1 <= self.vertex_labels <= len(_VERTEX_ALPHABET):
            raise InvalidParameterError(f"vertex_labels must lie in [1, {len(_VERTEX_ALPHABET)}]")
        if not 1 <= self.edge_labels <= len(_EDGE_ALPHABET):
            raise InvalidParameterError(f"edge_labels must lie in [1, {len(_EDGE_ALPHABET)}]")
        if self.policy not in POLICIES:
            raise InvalidParameterError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.table_mode not in TABLE_MODES:
            raise InvalidParameterError(f"table_mode must be one of {TABLE_MODES}, got {self.table_mode!r}")
        if not 0.0 <= self.p_low <= self.p_high <= 1.0:
            raise InvalidParameterError("need 0 <= p_low <= p_high <= 1")
        if self.max_set_size < 1:
            raise InvalidParameterError("max_set_size must be >= 1")


def max_transform_table(edge_ids: Sequence[str], probs: Sequence[float]) -> JointTable:
    """
    Joint table whose rows are the normalized max of per-edge masses.

    Examples:
        >>> t = max_transform_table(["e1", "e2"], [0.6, 0.5])
        >>> [round(p, 4) for _, p in t.rows()]
        [0.2273, 0.2273, 0.2727, 0.2727]
    """
    k = len(edge_ids)
    table = np.empty((2,) * k)
    for assign in itertools.product((0, 1), repeat=k):
        table[assign] = max(p if a else 1.0 - p for a, p in zip(assign, probs))
    return JointTable(edge_ids, table / table.sum())


def independent_table(edge_ids: Sequence[str], probs: Sequence[float]) -> JointTable:
    table = np.ones(())
    for p in probs:
        table = np.multiply.outer(table, np.array([1.0 - p, p]))
    return JointTable(edge_ids, table / table.sum())


def _skeleton(rng: np.random.Generator, config: GeneratorConfig) -> DetGraph:
    n = int(rng.integers(config.min_vertices, config.max_vertices + 1))
    vertices = [(f"v{i + 1}", _VERTEX_ALPHABET[int(rng.integers(config.vertex_labels))]) for i in range(n)]
    pairs = set()
    for child in range(1, n):
        pairs.add((int(rng.integers(child)), child))
    others = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in pairs]
    extra = int(round(config.density * len(others)))
    if extra:
        for position in rng.choice(len(others), size=extra, replace=False):
            pairs.add(others[int(position)])
    edges = [
        (f"e{i + 1}", f"v{a + 1}", f"v{b + 1}", _EDGE_ALPHABET[int(rng.integers(config.edge_labels))])
        for i, (a, b) in enumerate(sorted(pairs))
    ]
    return DetGraph(vertices, edges)


def _triangles(skeleton: DetGraph, free: set) -> List[Tuple[str, str, str]]:
    found = []
    for eid in skeleton.edge_ids:
        if eid not in free:
            continue
        a, b, _ = skeleton.edge(eid)
        for c, e_ac in sorted(skeleton.neighbors(a).items()):
            e_bc = skeleton.edge_between(b, c)
            if e_bc is None or c == b:
                continue
            if {eid, e_ac, e_bc} <= free:
                found.append((eid, e_ac, e_bc))
                free -= {eid, e_ac, e_bc}
                break
    return found


def _stars(skeleton: DetGraph, free: set, size: int) -> List[Tuple[str, ...]]:
    found = []
    for vid in skeleton.vertex_ids:
        incident = [eid for eid in skeleton.incident_edges(vid) if eid in free]
        incident.sort(key=skeleton.edge_ids.index)
        for start in range(0, len(incident), size):
            chunk = tuple(incident[start:start + size])
            if len(chunk) > 1:
                found.append(chunk)
                free -= set(chunk)
    return found


def neighbor_sets(skeleton: DetGraph, policy: str, max_set_size: int = 3) -> List[Tuple[str, ...]]:
    """Partition the skeleton's edges into neighbor sets under ``policy``."""
    if policy not in POLICIES:
        raise InvalidParameterError(f"policy must be one of {POLICIES}, got {policy!r}")
    free = set(skeleton.edge_ids)
    groups: List[Tuple[str, ...]] = []
    if policy in ("triangles", "mixed"):
        groups.extend(_triangles(skeleton, free))
    if policy in ("stars", "mixed"):
        groups.extend(_stars(skeleton, free, max_set_size))
    groups.extend((eid,) for eid in skeleton.edge_ids if eid in free)
    return sorted(groups, key=lambda group: skeleton.edge_ids.index(group[0]))


def _table(rng: np.random.Generator, edge_ids: Tuple[str, ...], config: GeneratorConfig) -> JointTable:
    probs = rng.uniform(config.p_low, config.p_high, size=len(edge_ids))
    if config.table_mode == "independent" or (len(edge_ids) == 1 and config.table_mode == "correlated"):
        return independent_table(edge_ids, probs)
    if config.table_mode == "max-transform":
        return max_transform_table(edge_ids, probs)
    rows = rng.dirichlet(np.ones(2 ** len(edge_ids)))
    return JointTable(edge_ids, rows.reshape((2,) * len(edge_ids)))


def generate_graph(graph_id: str, seed: int, config: GeneratorConfig) -> ProbGraph:
    rng = np.random.default_rng(seed)
    skeleton = _skeleton(rng, config)
    tables = [_table(rng, group, config) for group in neighbor_sets(skeleton, config.policy, config.max_set_size)]
    return ProbGraph(graph_id, skeleton, tables)


def generate_database(config: GeneratorConfig) -> GraphDatabase:
    """
    Generate a reproducible database.

    Examples:
        >>> db = generate_database(GeneratorConfig(graphs=3, seed=1))
        >>> db.ids
        ('g000', 'g001', 'g002')
    """
    graphs = [
        generate_graph(f"{config.id_prefix}{i:03d}", derive_seed(config.seed, i), config)
        for i in range(config.graphs)
    ]
    logger.info("generated %d graphs (%s tables, %s sets)", len(graphs), config.table_mode, config.policy)
    return GraphDatabase(graphs)


def extract_query(skeleton: DetGraph, edges: int, rng: np.random.Generator) -> DetGraph:
    """
    Random connected subgraph with ``edges`` edges, renamed to q-ids.

    Raises:
        InvalidParameterError: If the skeleton's largest component is too small
    """
    if edges < 1 or edges > skeleton.size:
        raise InvalidParameterError(f"cannot extract {edges} edges from a graph with {skeleton.size}")
    start = skeleton.edge_ids[int(rng.integers(skeleton.size))]
    chosen = [start]
    touched = set(skeleton.edge(start)[:2])
    while len(chosen) < edges:
        frontier = sorted(
            {eid for v in touched for eid in skeleton.incident_edges(v)} - set(chosen),
            key=skeleton.edge_ids.index,
        )
        if not frontier:
            raise InvalidParameterError(f"component holds fewer than {edges} edges")
        pick = frontier[int(rng.integers(len(frontier)))]
        chosen.append(pick)
        touched.update(skeleton.edge(pick)[:2])
    sub = skeleton.edge_subgraph(chosen)
    rename = {vid: f"q{i + 1}" for i, vid in enumerate(sub.vertex_ids)}
    return DetGraph(
        [(rename[vid], label) for vid, label in sub.vertices],
        [(f"d{i + 1}", rename[a], rename[b], label) for i, (_, a, b, label) in enumerate(sub.edges)],
    )


def extract_queries(database: GraphDatabase, sizes: Sequence[int], per_size: int, seed: int) -> List[Tuple[str, DetGraph]]:
    """
    Extract ``per_size`` queries of every size from random database skeletons.

    Returns:
        ``(name, graph)`` pairs named ``q{size}-{k}``; sizes no skeleton can
        supply are skipped with a warning
    """
    rng = np.random.default_rng(seed)
    ids = list(database.ids)
    queries = []
    for size in sizes:
        hosts = [gid for gid in ids if database[gid].size >= size]
        if not hosts:
            logger.warning("no graph has %d edges; skipping query size %d", size, size)
            continue
        for k in range(per_size):
            host = database[hosts[int(rng.integers(len(hosts)))]]
            queries.append((f"q{size}-{k + 1}", extract_query(host.skeleton, size, rng)))
    return queries
