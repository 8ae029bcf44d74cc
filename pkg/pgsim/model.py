"""
Correlated edge-uncertainty model: probabilistic graphs and possible worlds.

A ProbGraph is a deterministic skeleton plus joint probability tables over
neighbor-edge sets (edges sharing a common vertex, or the three edges of a
triangle). The probability of a possible world is the product of the
matching table rows divided by the normalization constant Z; Z is 1 when
the tables agree on shared edges, and is computed by exact inference and
cached per graph otherwise.

Exact probabilities come from variable elimination (pgsim.inference) with a
brute-force enumeration fallback when the factor structure exceeds the
inference budget but the graph is within the oracle cap.
"""

import hashlib
import itertools
import json
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import NORMALIZATION_WARNING, ROW_SUM_TOLERANCE, Caps, oracle_cap
from .exceptions import (
    InferenceBudgetExceeded,
    InvalidParameterError,
    OracleScaleError,
    UndefinedConditionalError,
    ValidationError,
)
from .graph import DetGraph
from .inference import Elimination, Factor, forbid_corner, partition

logger = logging.getLogger(__name__)

_DEFAULT_CAPS = Caps()

# Graphs up to this many edges keep their enumerated worlds in memory
_WORLD_CACHE_EDGES = 16
_SAMPLER_CACHE_SIZE = 256


class EventMode(str, Enum):
    PRESENT = "all-present"
    ABSENT = "all-absent"


@dataclass(frozen=True)
class EdgeEvent:
    """
    Boolean event over skeleton edges: all listed edges present, or all absent.

    Embedding events use PRESENT; realized embedding cuts use ABSENT.
    """

    mode: EventMode
    edge_ids: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "mode", EventMode(self.mode))
        object.__setattr__(self, "edge_ids", frozenset(self.edge_ids))
        if not self.edge_ids:
            raise InvalidParameterError("edge event needs at least one edge")

    @classmethod
    def present(cls, edge_ids: Iterable[str]) -> "EdgeEvent":
        return cls(EventMode.PRESENT, frozenset(edge_ids))

    @classmethod
    def absent(cls, edge_ids: Iterable[str]) -> "EdgeEvent":
        return cls(EventMode.ABSENT, frozenset(edge_ids))

    @property
    def value(self) -> int:
        return 1 if self.mode is EventMode.PRESENT else 0

    def evidence(self) -> Dict[str, int]:
        return {eid: self.value for eid in self.edge_ids}

    def holds(self, worlds: np.ndarray, columns: Mapping[str, int]) -> np.ndarray:
        """Row mask of ``worlds`` (n x |E| booleans) on which the event holds."""
        block = worlds[:, [columns[eid] for eid in sorted(self.edge_ids)]]
        if self.mode is EventMode.PRESENT:
            return block.all(axis=1)
        return ~block.any(axis=1)


class JointTable:
    """
    Joint probability table over one neighbor-edge set.

    Args:
        edge_ids: Ordered edges of the set; axis i of ``probs`` is edge i
        probs: Array of shape (2,)*k, ``probs[a1, ..., ak]`` the row probability
        tolerance: Allowed deviation of the row sum from 1

    Raises:
        ValidationError: On negative rows, a bad shape or a row sum off 1
    """

    def __init__(self, edge_ids: Sequence[str], probs, tolerance: float = ROW_SUM_TOLERANCE):
        self.edge_ids = tuple(str(eid) for eid in edge_ids)
        self.probs = np.array(probs, dtype=float)
        violations = []
        if not self.edge_ids:
            violations.append("table has no edges")
        if len(set(self.edge_ids)) != len(self.edge_ids):
            violations.append(f"table lists an edge twice: {list(self.edge_ids)}")
        if self.probs.shape != (2,) * len(self.edge_ids):
            violations.append(f"table over {len(self.edge_ids)} edges has shape {self.probs.shape}")
        elif np.any(self.probs < 0) or not np.all(np.isfinite(self.probs)):
            violations.append(f"table over {list(self.edge_ids)} has a negative or non-finite row")
        elif abs(float(self.probs.sum()) - 1.0) > tolerance:
            violations.append(f"rows of table over {list(self.edge_ids)} sum to {float(self.probs.sum()):.12g}")
        if violations:
            raise ValidationError("; ".join(violations), violations)
        self.probs.setflags(write=False)

    @classmethod
    def from_rows(
        cls,
        edge_ids: Sequence[str],
        rows: Iterable[Tuple[Sequence[int], float]],
        tolerance: float = ROW_SUM_TOLERANCE,
    ) -> "JointTable":
        """
        Build a table from ``(assignment, probability)`` rows; missing rows are 0.

        Examples:
            >>> t = JointTable.from_rows(["e1"], [((1,), 0.7), ((0,), 0.3)])
            >>> t.probability((1,))
            0.7
        """
        k = len(edge_ids)
        probs = np.zeros((2,) * k)
        seen = set()
        for assign, p in rows:
            assign = tuple(int(a) for a in assign)
            if len(assign) != k or any(a not in (0, 1) for a in assign):
                raise ValidationError(f"row {list(assign)} is not a 0/1 assignment over {k} edges")
            if assign in seen:
                raise ValidationError(f"row {list(assign)} listed twice for edges {list(edge_ids)}")
            seen.add(assign)
            probs[assign] = float(p)
        return cls(edge_ids, probs, tolerance)

    @classmethod
    def bernoulli(cls, edge_id: str, p: float) -> "JointTable":
        return cls((edge_id,), [1.0 - p, p])

    def probability(self, assignment: Sequence[int]) -> float:
        return float(self.probs[tuple(int(a) for a in assignment)])

    def rows(self) -> List[Tuple[Tuple[int, ...], float]]:
        """Every assignment with its probability, in lexicographic assignment order."""
        return [
            (assign, float(self.probs[assign]))
            for assign in itertools.product((0, 1), repeat=len(self.edge_ids))
        ]

    def factor(self) -> Factor:
        return Factor(self.edge_ids, self.probs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, JointTable):
            return NotImplemented
        return self.edge_ids == other.edge_ids and np.array_equal(self.probs, other.probs)

    def __repr__(self) -> str:
        return f"JointTable({list(self.edge_ids)})"


def is_neighbor_set(skeleton: DetGraph, edge_ids: Sequence[str]) -> bool:
    """Singletons, edges sharing a common vertex, or the three edges of a triangle."""
    if len(edge_ids) == 1:
        return True
    endpoints = [set(skeleton.edge(eid)[:2]) for eid in edge_ids]
    if set.intersection(*endpoints):
        return True
    return len(edge_ids) == 3 and len(set.union(*endpoints)) == 3


def _structural_violations(skeleton: DetGraph, tables: Sequence[JointTable]) -> List[str]:
    violations = []
    covered = set()
    for table in tables:
        unknown = [eid for eid in table.edge_ids if not skeleton.has_edge(eid)]
        if unknown:
            violations.append(f"table over {list(table.edge_ids)} references unknown edges {unknown}")
            continue
        if not is_neighbor_set(skeleton, table.edge_ids):
            violations.append(
                f"edges {list(table.edge_ids)} neither share a vertex nor form a triangle"
            )
        covered.update(table.edge_ids)
    uncovered = [eid for eid in skeleton.edge_ids if eid not in covered]
    if uncovered:
        violations.append(f"edges {uncovered} are not covered by any table")
    return violations


class ProbGraph:
    """
    Probabilistic graph: skeleton plus joint tables over neighbor-edge sets.

    Immutable after construction. The normalization constant, enumerated
    worlds and exact samplers are cached per instance behind a lock.

    Args:
        graph_id: Identifier unique within a database
        skeleton: Deterministic graph g^c
        tables: Joint tables covering every skeleton edge
        max_scope: Largest factor scope exact inference may build

    Raises:
        ValidationError: If a table references an unknown edge, violates the
                         neighbor condition, or some edge is uncovered
    """

    def __init__(
        self,
        graph_id: str,
        skeleton: DetGraph,
        tables: Sequence[JointTable],
        max_scope: int = _DEFAULT_CAPS.factor_scope,
    ):
        self.graph_id = str(graph_id)
        self.skeleton = skeleton
        self.tables = tuple(tables)
        violations = _structural_violations(skeleton, self.tables)
        if violations:
            raise ValidationError(f"graph {self.graph_id!r}: " + "; ".join(violations), violations)
        self.edge_ids = skeleton.edge_ids
        self.columns = {eid: i for i, eid in enumerate(self.edge_ids)}
        self.max_scope = max_scope
        self._lock = threading.RLock()
        self._normalization: Optional[float] = None
        self._worlds: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._samplers: Dict[FrozenSet, Elimination] = {}

    @property
    def size(self) -> int:
        return len(self.edge_ids)

    def factors(self) -> List[Factor]:
        return [table.factor() for table in self.tables]

    @property
    def normalization(self) -> float:
        """The constant Z that makes world weights sum to 1."""
        with self._lock:
            if self._normalization is None:
                z = _partition(self, {}, ())
                if z <= 0.0:
                    raise ValidationError(f"graph {self.graph_id!r}: tables admit no world with positive weight")
                self._normalization = z
            return self._normalization

    def to_dict(self) -> dict:
        data = {"id": self.graph_id}
        data.update(self.skeleton.to_dict())
        data["neighbor_sets"] = [
            {
                "edges": list(table.edge_ids),
                "table": [{"assign": list(assign), "p": p} for assign, p in table.rows()],
            }
            for table in self.tables
        ]
        return data

    @classmethod
    def from_dict(cls, data: dict, max_scope: int = _DEFAULT_CAPS.factor_scope) -> "ProbGraph":
        tables = [
            JointTable.from_rows(ns["edges"], [(row["assign"], row["p"]) for row in ns["table"]])
            for ns in data.get("neighbor_sets", [])
        ]
        return cls(data["id"], DetGraph.from_dict(data), tables, max_scope)

    def __repr__(self) -> str:
        return f"ProbGraph({self.graph_id!r}, |V|={self.skeleton.num_vertices}, |E|={self.size})"


@dataclass(frozen=True)
class WorldAssignment:
    """One possible world: a 0/1 value for every skeleton edge."""

    edge_ids: Tuple[str, ...]
    values: Tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "edge_ids", tuple(self.edge_ids))
        object.__setattr__(self, "values", tuple(bool(v) for v in self.values))
        if len(self.edge_ids) != len(self.values):
            raise InvalidParameterError("world assignment needs one value per edge")
        if len(set(self.edge_ids)) != len(self.edge_ids):
            raise InvalidParameterError("world assignment lists an edge twice")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Union[bool, int]]) -> "WorldAssignment":
        return cls(tuple(values), tuple(values.values()))

    @property
    def present(self) -> FrozenSet[str]:
        return frozenset(eid for eid, value in zip(self.edge_ids, self.values) if value)

    def value(self, edge_id: str) -> int:
        return int(self.values[self.edge_ids.index(edge_id)])

    def as_dict(self) -> Dict[str, bool]:
        return dict(zip(self.edge_ids, self.values))


@dataclass
class ValidationReport:
    graph_id: str
    normalization: float
    deviation: float
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings


class GraphDatabase:
    """
    Id-unique collection of probabilistic graphs, iterated in id order.

    Raises:
        ValidationError: On duplicate graph ids
    """

    def __init__(self, graphs: Iterable[ProbGraph]):
        by_id: Dict[str, ProbGraph] = {}
        for g in graphs:
            if g.graph_id in by_id:
                raise ValidationError(f"duplicate graph id {g.graph_id!r}")
            by_id[g.graph_id] = g
        self._graphs = {gid: by_id[gid] for gid in sorted(by_id)}

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(self._graphs)

    def __getitem__(self, graph_id: str) -> ProbGraph:
        return self._graphs[graph_id]

    def __contains__(self, graph_id) -> bool:
        return graph_id in self._graphs

    def __iter__(self) -> Iterator[ProbGraph]:
        return iter(self._graphs.values())

    def __len__(self) -> int:
        return len(self._graphs)

    def edge_labels(self) -> FrozenSet[str]:
        return frozenset(label for g in self for label in g.skeleton.edge_labels())

    def checksum(self) -> str:
        """SHA-256 over the canonical JSON form of every graph."""
        payload = json.dumps([g.to_dict() for g in self], sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# -- exact computation ---------------------------------------------------


def _negation_factors(g: ProbGraph, evidence: Mapping[str, int], forbidden: Sequence[EdgeEvent]) -> Optional[List[Factor]]:
    """Indicator factors for the negated events; None when evidence already violates one."""
    factors = []
    for ev in forbidden:
        if any(evidence.get(eid, ev.value) != ev.value for eid in ev.edge_ids):
            continue
        free = sorted(eid for eid in ev.edge_ids if eid not in evidence)
        if not free:
            return None
        factors.append(forbid_corner(free, ev.value, g.max_scope))
    return factors


def _partition(g: ProbGraph, evidence: Mapping[str, int], forbidden: Sequence[EdgeEvent]) -> float:
    """Unnormalized weight of the worlds matching ``evidence`` and none of ``forbidden``."""
    try:
        negations = _negation_factors(g, evidence, forbidden)
        if negations is None:
            return 0.0
        return partition(g.factors() + negations, evidence, g.max_scope)
    except InferenceBudgetExceeded:
        if g.size > oracle_cap():
            raise
        logger.debug("inference budget exceeded on %s, enumerating worlds", g.graph_id)
    worlds, raw = _world_table(g)
    mask = np.ones(len(raw), dtype=bool)
    for eid, value in evidence.items():
        mask &= worlds[:, g.columns[eid]] == bool(value)
    for ev in forbidden:
        mask &= ~ev.holds(worlds, g.columns)
    return float(raw[mask].sum())


def _world_table(g: ProbGraph, cap: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """All 2^|E| worlds (bit j of row i is edge j) with unnormalized weights."""
    limit = oracle_cap() if cap is None else cap
    if g.size > limit:
        raise OracleScaleError(
            f"graph {g.graph_id!r} has {g.size} edges, beyond the oracle cap of {limit}"
        )
    cached = g._worlds
    if cached is not None:
        return cached
    m = g.size
    index = np.arange(2 ** m, dtype=np.int64)[:, None]
    worlds = ((index >> np.arange(m, dtype=np.int64)) & 1).astype(bool)
    raw = np.ones(2 ** m)
    for table in g.tables:
        cols = tuple(worlds[:, g.columns[eid]].astype(np.intp) for eid in table.edge_ids)
        raw *= table.probs[cols]
    if m <= _WORLD_CACHE_EDGES:
        with g._lock:
            g._worlds = (worlds, raw)
    return worlds, raw


def world_matrix(g: ProbGraph, cap: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Enumerate every possible world as a boolean matrix with normalized weights.

    Args:
        g: Probabilistic graph
        cap: Edge cap (default ``PGSIM_ORACLE_CAP`` or 20)

    Returns:
        ``(worlds, weights)``; ``worlds[i, g.columns[e]]`` is edge e's presence

    Raises:
        OracleScaleError: If the graph has more edges than the cap
    """
    worlds, raw = _world_table(g, cap)
    return worlds, raw / raw.sum()


def validate(g: ProbGraph, tolerance: float = NORMALIZATION_WARNING) -> ValidationReport:
    """
    Check a probabilistic graph and report its normalization constant.

    Structural problems are raised when the graph is constructed; this call
    computes Z and reports (rather than fixes) tables that disagree on
    shared edges.

    Args:
        g: Graph to check
        tolerance: Allowed |Z - 1| before a warning is recorded

    Returns:
        ValidationReport with Z, |Z - 1| and any warnings

    Raises:
        ValidationError: If no world has positive weight
        InferenceBudgetExceeded: If Z cannot be computed exactly
    """
    violations = _structural_violations(g.skeleton, g.tables)
    if violations:
        raise ValidationError(f"graph {g.graph_id!r}: " + "; ".join(violations), violations)
    z = g.normalization
    report = ValidationReport(graph_id=g.graph_id, normalization=z, deviation=abs(z - 1.0))
    if report.deviation > tolerance:
        message = f"graph {g.graph_id!r}: table product sums to Z = {z:.9g}; world weights are divided by Z"
        logger.warning(message)
        report.warnings.append(message)
    return report


def _row_values(g: ProbGraph, w: Union[WorldAssignment, Mapping[str, Union[bool, int]]]) -> Dict[str, int]:
    values = w.as_dict() if isinstance(w, WorldAssignment) else dict(w)
    if set(values) != set(g.edge_ids):
        raise InvalidParameterError(f"world assignment must cover exactly the edges of {g.graph_id!r}")
    return {eid: int(bool(v)) for eid, v in values.items()}


def raw_weight(g: ProbGraph, w: Union[WorldAssignment, Mapping[str, Union[bool, int]]]) -> float:
    """Product of the matching table rows, before normalization."""
    values = _row_values(g, w)
    weight = 1.0
    for table in g.tables:
        weight *= table.probability([values[eid] for eid in table.edge_ids])
    return weight


def world_weight(g: ProbGraph, w: Union[WorldAssignment, Mapping[str, Union[bool, int]]]) -> float:
    """
    Probability of one possible world.

    Examples:
        >>> from pgsim.fixtures import fix_a
        >>> round(world_weight(fix_a(), {"e1": 1, "e2": 1}), 9)
        0.4
    """
    return raw_weight(g, w) / g.normalization


def enumerate_worlds(g: ProbGraph, cap: Optional[int] = None) -> Iterator[Tuple[WorldAssignment, float]]:
    """
    Stream every possible world with its probability.

    Raises:
        OracleScaleError: If the graph has more edges than the oracle cap
    """
    worlds, weights = world_matrix(g, cap)
    for row, weight in zip(worlds, weights):
        yield WorldAssignment(g.edge_ids, tuple(bool(v) for v in row)), float(weight)


def event_prob(g: ProbGraph, ev: EdgeEvent) -> float:
    """
    Exact probability that all edges of ``ev`` are present (or all absent).

    Raises:
        InferenceBudgetExceeded: If exact inference is out of budget and the
                                 graph is beyond the oracle cap
    """
    return min(1.0, _partition(g, ev.evidence(), ()) / g.normalization)


def cond_prob(g: ProbGraph, target: EdgeEvent, given: Sequence[EdgeEvent] = ()) -> float:
    """
    Exact Pr(target | none of the ``given`` events hold).

    Args:
        g: Probabilistic graph
        target: Event whose probability is wanted
        given: Events asserted NOT to hold (embeddings absent, cuts not realized)

    Raises:
        UndefinedConditionalError: If the conditioning event has probability 0
        InferenceBudgetExceeded: As for event_prob

    Examples:
        >>> from pgsim.fixtures import fix_a
        >>> g = fix_a()
        >>> round(cond_prob(g, EdgeEvent.present(["e1"]), [EdgeEvent.present(["e2"])]), 4)
        0.6667
    """
    denominator = _partition(g, {}, given)
    if denominator <= 0.0:
        raise UndefinedConditionalError(
            f"conditioning event has probability 0 on graph {g.graph_id!r}"
        )
    numerator = _partition(g, target.evidence(), given)
    return min(1.0, numerator / denominator)


def edge_marginals(g: ProbGraph) -> Dict[str, float]:
    """Exact presence probability of every edge."""
    return {eid: event_prob(g, EdgeEvent.present([eid])) for eid in g.edge_ids}


def union_probability(g: ProbGraph, edge_sets: Iterable[Iterable[str]], cap: Optional[int] = None) -> float:
    """
    Exact probability that at least one edge set is fully present.

    An empty edge set is always present, so it makes the union certain.

    Raises:
        OracleScaleError: If the graph is beyond the oracle cap
    """
    sets = [frozenset(s) for s in edge_sets]
    if not sets:
        return 0.0
    if any(not s for s in sets):
        return 1.0
    worlds, weights = world_matrix(g, cap)
    hit = np.zeros(len(weights), dtype=bool)
    for edge_set in sets:
        hit |= EdgeEvent.present(edge_set).holds(worlds, g.columns)
    return float(weights[hit].sum())


# -- sampling --------------------------------------------------------------


def _sampler(g: ProbGraph, evidence: Mapping[str, int]) -> Elimination:
    key = frozenset(evidence.items())
    with g._lock:
        cached = g._samplers.get(key)
    if cached is not None:
        return cached
    factors = [factor.restrict(evidence) for factor in g.factors()]
    sampler = Elimination(factors, g.max_scope, keep_trace=True)
    with g._lock:
        if len(g._samplers) >= _SAMPLER_CACHE_SIZE:
            g._samplers.clear()
        g._samplers[key] = sampler
    return sampler


def sample_worlds(
    g: ProbGraph,
    n: int,
    seed: Optional[int] = None,
    condition: Optional[EdgeEvent] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Draw ``n`` worlds exactly from the (conditional) world distribution.

    Each draw samples edges backwards along the elimination order from the
    conditionals kept during elimination, so edges shared between tables
    always receive one consistent value.

    Args:
        g: Probabilistic graph
        n: Number of worlds
        seed: Seed of a fresh generator (ignored when ``rng`` is given)
        condition: Event every drawn world must satisfy
        rng: Generator to draw from

    Returns:
        Boolean matrix of shape (n, |E|), columns in ``g.columns`` order

    Raises:
        UndefinedConditionalError: If the condition has probability 0
        InferenceBudgetExceeded: If out of budget and beyond the oracle cap
    """
    generator = rng if rng is not None else np.random.default_rng(seed)
    evidence = condition.evidence() if condition is not None else {}
    try:
        sampler = _sampler(g, evidence)
    except InferenceBudgetExceeded:
        if g.size > oracle_cap():
            raise
        return _sample_enumerated(g, n, generator, condition)
    if sampler.total <= 0.0:
        raise UndefinedConditionalError(f"sampling condition has probability 0 on graph {g.graph_id!r}")
    drawn = sampler.draw(generator, n)
    matrix = np.empty((n, g.size), dtype=bool)
    for eid, col in g.columns.items():
        matrix[:, col] = drawn[eid] if eid in drawn else bool(evidence[eid])
    return matrix


def _sample_enumerated(
    g: ProbGraph, n: int, rng: np.random.Generator, condition: Optional[EdgeEvent]
) -> np.ndarray:
    worlds, weights = world_matrix(g)
    if condition is not None:
        weights = np.where(condition.holds(worlds, g.columns), weights, 0.0)
    total = weights.sum()
    if total <= 0.0:
        raise UndefinedConditionalError(f"sampling condition has probability 0 on graph {g.graph_id!r}")
    picks = rng.choice(len(weights), size=n, p=weights / total)
    return worlds[picks]


def _as_world(g: ProbGraph, row: np.ndarray) -> WorldAssignment:
    return WorldAssignment(g.edge_ids, tuple(bool(v) for v in row))


def sample_world(g: ProbGraph, seed: int) -> WorldAssignment:
    """Draw one world; the same seed always returns the same world."""
    return _as_world(g, sample_worlds(g, 1, seed)[0])


def cond_sample(g: ProbGraph, condition: EdgeEvent, seed: int) -> WorldAssignment:
    """
    Draw one world conditioned on ``condition``.

    Raises:
        UndefinedConditionalError: If the condition has probability 0
    """
    return _as_world(g, sample_worlds(g, 1, seed, condition=condition)[0])
