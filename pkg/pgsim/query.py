"""
Threshold subgraph-similarity queries over a probabilistic graph database.

A query (q, delta, epsilon) returns every graph g with
Pr(q similar to g within delta edges) >= epsilon. The pipeline runs three
stages:

1. structural pruning keeps graphs whose skeleton contains some relaxed
   query;
2. probabilistic pruning rejects graphs whose SSP upper bound (greedy cover
   of the relaxed queries by feature upper bounds) is below epsilon, and
   optionally accepts graphs whose lower bound reaches it;
3. verification estimates the SSP of the remaining graphs with the
   Karp-Luby union estimator, or computes it exactly on request.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .config import FORMAT_VERSION, Caps, QueryConfig, derive_seed, sample_count
from .cover import CoverInstance, greedy_cover_upper, lower_objective, randomized_round, solve_relaxed_qp
from .documents import QueryDocument
from .exceptions import InferenceBudgetExceeded, InvalidParameterError, OracleScaleError, UndefinedConditionalError
from .graph import DetGraph, RelaxedQuerySet, capped_edge_images, edge_set_key, is_subgraph_similar, relax_query, subgraph_iso_exists
from .index import Pmi
from .model import EdgeEvent, GraphDatabase, ProbGraph, event_prob, sample_worlds, world_matrix

logger = logging.getLogger(__name__)

ACCEPTED = "accepted"
REJECTED = "rejected"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class TpsQuery:
    """
    Threshold query.

    Attributes:
        graph: Connected query graph q
        delta: Subgraph distance threshold, 0 <= delta <= |q|
        epsilon: Probability threshold in (0, 1]
        name: Label used in reports

    Raises:
        InvalidParameterError: On a disconnected or empty query or an
                               out-of-range threshold
    """

    graph: DetGraph
    delta: int
    epsilon: float
    name: str = "query"

    def __post_init__(self):
        if self.graph.num_vertices == 0 or not self.graph.is_connected():
            raise InvalidParameterError("query graph must be non-empty and connected")
        if not 0 <= self.delta <= self.graph.size:
            raise InvalidParameterError(f"delta must lie in [0, {self.graph.size}], got {self.delta}")
        if not 0.0 < self.epsilon <= 1.0:
            raise InvalidParameterError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    @classmethod
    def from_document(cls, document: QueryDocument) -> "TpsQuery":
        return cls(document.graph(), document.delta, document.epsilon, document.name)


@dataclass(frozen=True)
class Containment:
    """
    Feature / relaxed-query containment of one query, computed once.

    Attributes:
        within: feature id -> indices of relaxed queries containing the feature
        around: feature id -> indices of relaxed queries the feature contains
    """

    within: Dict[str, FrozenSet[int]]
    around: Dict[str, FrozenSet[int]]


@dataclass
class SspBounds:
    """
    Attributes:
        u_sim: Upper bound, None when the features cannot cover every relaxed query
        l_sim: Lower bound
        provenance: Feature ids behind each bound
    """

    u_sim: Optional[float]
    l_sim: float
    provenance: Dict[str, List[str]] = field(default_factory=dict)


@dataclass
class KarpLubyEstimate:
    value: float
    samples: int
    clauses: int
    doubly_approximate: bool = False
    truncated: bool = False


@dataclass
class GraphRecord:
    graph_id: str
    verdict: str = UNDECIDED
    u_sim: Optional[float] = None
    l_sim: Optional[float] = None
    provenance: Dict[str, List[str]] = field(default_factory=dict)
    estimate: Optional[float] = None
    method: Optional[str] = None
    samples: int = 0
    seed: Optional[int] = None
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "u_sim": self.u_sim,
            "l_sim": self.l_sim,
            "provenance": self.provenance,
            "estimate": self.estimate,
            "method": self.method,
            "samples": self.samples,
            "seed": self.seed,
            "flags": list(self.flags),
        }


@dataclass
class QueryReport:
    """Everything needed to replay and audit one query run."""

    query: str
    epsilon: float
    delta: int
    seed: int
    relaxed: int
    config: Dict
    database: List[str] = field(default_factory=list)
    structural: List[str] = field(default_factory=list)
    accepted: List[str] = field(default_factory=list)
    rejected: List[str] = field(default_factory=list)
    undecided: List[str] = field(default_factory=list)
    answers: List[str] = field(default_factory=list)
    records: Dict[str, GraphRecord] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    audit_violations: List[str] = field(default_factory=list)

    def stage_counts(self) -> Dict[str, int]:
        """Graphs surviving each stage; non-increasing by construction."""
        return {
            "database": len(self.database),
            "structural": len(self.structural),
            "probabilistic": len(self.accepted) + len(self.undecided),
            "answers": len(self.answers),
        }

    def flagged(self, flag: str) -> List[str]:
        return sorted(gid for gid, record in self.records.items() if flag in record.flags)

    def to_dict(self, include_timings: bool = False) -> dict:
        """JSON form; timings are left out unless asked for so reruns serialize identically."""
        data = {
            "format": "pgsim-report",
            "version": FORMAT_VERSION,
            "query": self.query,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "seed": self.seed,
            "relaxed_queries": self.relaxed,
            "config": self.config,
            "stages": {
                "database": self.database,
                "structural": self.structural,
                "accepted": self.accepted,
                "rejected": self.rejected,
                "undecided": self.undecided,
                "answers": self.answers,
            },
            "stage_counts": self.stage_counts(),
            "records": {gid: record.to_dict() for gid, record in sorted(self.records.items())},
            "audit_violations": self.audit_violations,
        }
        if include_timings:
            data["timings"] = dict(self.timings)
        return data


# -- relaxation and containment --------------------------------------------


def relaxed_queries(query: TpsQuery, database: GraphDatabase, config: Optional[QueryConfig] = None) -> RelaxedQuerySet:
    """Relaxed query set U under the configured relabel policy."""
    config = config or QueryConfig()
    alphabet = None
    if config.relabel:
        alphabet = database.edge_labels() if config.relabel_alphabet == "database" else query.graph.edge_labels()
    return relax_query(query.graph, query.delta, relabel=config.relabel, alphabet=alphabet)


def feature_containment(relaxed: RelaxedQuerySet, pmi: Pmi) -> Containment:
    within: Dict[str, FrozenSet[int]] = {}
    around: Dict[str, FrozenSet[int]] = {}
    for feature in pmi.features:
        f = feature.pattern
        within[feature.feature_id] = frozenset(
            i for i, rq in enumerate(relaxed.members) if subgraph_iso_exists(f, rq)
        )
        around[feature.feature_id] = frozenset(
            i for i, rq in enumerate(relaxed.members) if subgraph_iso_exists(rq, f)
        )
    return Containment(within, around)


# -- structural pruning -----------------------------------------------------


def structural_prune(
    database: GraphDatabase,
    relaxed: RelaxedQuerySet,
    pmi: Optional[Pmi] = None,
    containment: Optional[Containment] = None,
) -> List[str]:
    """
    Graphs whose skeleton contains at least one relaxed query (SC_q).

    With a PMI and its containment map, a relaxed query is skipped without
    an isomorphism test when a feature it contains is Absent for the graph;
    the result set is the same either way.

    Examples:
        >>> from pgsim.fixtures import fixture_database
        >>> tri = DetGraph([("1", "A"), ("2", "A"), ("3", "A")],
        ...                [("a", "1", "2", "x"), ("b", "2", "3", "x"), ("c", "1", "3", "x")])
        >>> structural_prune(fixture_database(), relax_query(tri, 0))
        ['fix-b']
    """
    needed: List[List[str]] = [[] for _ in relaxed.members]
    if pmi is not None and containment is not None:
        for fid, members in containment.within.items():
            for i in members:
                needed[i].append(fid)
    survivors = []
    skipped = 0
    for g in database:
        prefilter = pmi is not None and g.graph_id in pmi.columns
        for i, rq in enumerate(relaxed.members):
            if prefilter and any(pmi.lookup(fid, g.graph_id) is None for fid in needed[i]):
                skipped += 1
                continue
            if subgraph_iso_exists(rq, g.skeleton):
                survivors.append(g.graph_id)
                break
    logger.debug("structural pruning kept %d of %d graphs (%d tests skipped)", len(survivors), len(database), skipped)
    return survivors


# -- probabilistic pruning --------------------------------------------------


def build_upper_instance(
    relaxed: RelaxedQuerySet, graph_id: str, pmi: Pmi, containment: Optional[Containment] = None
) -> CoverInstance:
    """One set per feature present for the graph: the relaxed queries containing it, weighted UpperB."""
    containment = containment or feature_containment(relaxed, pmi)
    sets, labels, upper = [], [], []
    for feature in pmi.features:
        pair = pmi.lookup(feature.feature_id, graph_id)
        members = containment.within[feature.feature_id]
        if pair is None or not members:
            continue
        sets.append(members)
        labels.append(feature.feature_id)
        upper.append(min(1.0, max(0.0, pair.upper)))
    return CoverInstance(tuple(range(len(relaxed))), tuple(sets), tuple(labels), tuple(upper))


def build_lower_instance(
    relaxed: RelaxedQuerySet, graph_id: str, pmi: Pmi, containment: Optional[Containment] = None
) -> CoverInstance:
    """One set per feature present for the graph: the relaxed queries it contains, weighted (LowerB, UpperB)."""
    containment = containment or feature_containment(relaxed, pmi)
    sets, labels, upper, lower = [], [], [], []
    for feature in pmi.features:
        pair = pmi.lookup(feature.feature_id, graph_id)
        members = containment.around[feature.feature_id]
        if pair is None or not members:
            continue
        sets.append(members)
        labels.append(feature.feature_id)
        upper.append(min(1.0, max(0.0, pair.upper)))
        lower.append(min(1.0, max(0.0, pair.lower)))
    return CoverInstance(tuple(range(len(relaxed))), tuple(sets), tuple(labels), tuple(upper), tuple(lower))


def _optimal_bounds(upper: CoverInstance, lower: CoverInstance, seed: int) -> SspBounds:
    bounds = SspBounds(None, 0.0)
    if len(upper):
        solution = greedy_cover_upper(upper)
        if solution is not None:
            bounds.u_sim = solution.value
            bounds.provenance["upper"] = [upper.labels[j] for j in solution.chosen]
    if len(lower):
        relaxed = solve_relaxed_qp(lower)
        rounding = randomized_round(relaxed.x, lower, seed)
        bounds.l_sim = rounding.l_sim
        bounds.provenance["lower"] = [lower.labels[j] for j in rounding.chosen]
    return bounds


def _pick_per_element(instance: CoverInstance, rng: np.random.Generator) -> Tuple[List[int], bool]:
    chosen = set()
    complete = True
    for u in instance.universe:
        options = [j for j, members in enumerate(instance.sets) if u in members]
        if not options:
            complete = False
            continue
        chosen.add(options[int(rng.integers(len(options)))])
    return sorted(chosen), complete


def _basic_bounds(upper: CoverInstance, lower: CoverInstance, seed: int) -> SspBounds:
    rng = np.random.default_rng(seed)
    bounds = SspBounds(None, 0.0)
    chosen, complete = _pick_per_element(upper, rng)
    if complete:
        bounds.u_sim = sum(upper.upper[j] for j in chosen)
        bounds.provenance["upper"] = [upper.labels[j] for j in chosen]
    chosen, _ = _pick_per_element(lower, rng)
    if chosen:
        indicator = np.zeros(len(lower))
        indicator[chosen] = 1.0
        bounds.l_sim = min(1.0, max(0.0, lower_objective(indicator, lower.lower, lower.upper)))
        bounds.provenance["lower"] = [lower.labels[j] for j in chosen]
    return bounds


def ssp_bounds(
    relaxed: RelaxedQuerySet,
    graph_id: str,
    pmi: Pmi,
    strategy: str = "optimal",
    seed: int = 0,
    containment: Optional[Containment] = None,
) -> SspBounds:
    """
    SSP bounds of one graph from its PMI column.

    Args:
        relaxed: Relaxed query set U
        graph_id: Graph bounded
        pmi: Index built over the database
        strategy: "optimal" (greedy cover, relaxed program and rounding) or
                  "basic" (one random qualifying feature per relaxed query)
        seed: Seed of the rounding or of the random feature choice
        containment: Precomputed containment map

    Returns:
        SspBounds; u_sim is None when some relaxed query contains no
        feature present for the graph
    """
    if strategy not in ("optimal", "basic"):
        raise InvalidParameterError(f"strategy must be 'optimal' or 'basic', got {strategy!r}")
    containment = containment or feature_containment(relaxed, pmi)
    upper = build_upper_instance(relaxed, graph_id, pmi, containment)
    lower = build_lower_instance(relaxed, graph_id, pmi, containment)
    if strategy == "optimal":
        return _optimal_bounds(upper, lower, seed)
    return _basic_bounds(upper, lower, seed)


def verdict(bounds: SspBounds, epsilon: float, enable_accept_pruning: bool = False) -> str:
    """Reject below the upper bound, accept (when enabled) at the lower bound."""
    if bounds.u_sim is not None and bounds.u_sim < epsilon:
        return REJECTED
    if enable_accept_pruning and bounds.l_sim >= epsilon:
        return ACCEPTED
    return UNDECIDED


def probabilistic_prune(
    candidates: Sequence[str],
    pmi: Pmi,
    query: TpsQuery,
    relaxed: RelaxedQuerySet,
    config: Optional[QueryConfig] = None,
    containment: Optional[Containment] = None,
) -> Tuple[List[str], List[str], List[str], Dict[str, SspBounds]]:
    """
    Split structural survivors into accepted, rejected and undecided graphs.

    Returns:
        ``(accepted, rejected, undecided, bounds)``
    """
    config = config or QueryConfig()
    containment = containment or feature_containment(relaxed, pmi)
    accepted, rejected, undecided = [], [], []
    all_bounds: Dict[str, SspBounds] = {}
    stream = "round" if config.strategy == "optimal" else "basic"
    for gid in candidates:
        bounds = ssp_bounds(relaxed, gid, pmi, config.strategy, derive_seed(config.seed, gid, stream), containment)
        all_bounds[gid] = bounds
        outcome = verdict(bounds, query.epsilon, config.enable_accept_pruning)
        {ACCEPTED: accepted, REJECTED: rejected, UNDECIDED: undecided}[outcome].append(gid)
    return accepted, rejected, undecided, all_bounds


# -- verification -----------------------------------------------------------


def capped_clauses(
    g: ProbGraph, relaxed: RelaxedQuerySet, caps: Optional[Caps] = None
) -> Tuple[List[FrozenSet[str]], bool]:
    """
    Distinct edge images of every relaxed query in g's skeleton, in canonical order.

    Returns:
        ``(clauses, truncated)``; truncated is True when the vertex-map cap
        stopped some enumeration, so the clauses cover only part of the union
    """
    caps = caps or Caps.from_env()
    images = set()
    truncated = False
    for rq in relaxed.members:
        found, cut = capped_edge_images(rq, g.skeleton, caps.vertex_maps, caps.vertex_maps)
        if cut:
            logger.warning("embedding enumeration of a relaxed query in %s was truncated", g.graph_id)
        truncated = truncated or cut
        images.update(found)
    return sorted(images, key=edge_set_key), truncated


def embedding_clauses(g: ProbGraph, relaxed: RelaxedQuerySet, caps: Optional[Caps] = None) -> List[FrozenSet[str]]:
    """Clauses of :func:`capped_clauses` without the truncation bit."""
    return capped_clauses(g, relaxed, caps)[0]


def _clause_probability(g: ProbGraph, clause: FrozenSet[str], m: int, seed: int) -> Tuple[float, bool]:
    event = EdgeEvent.present(clause)
    try:
        return event_prob(g, event), False
    except InferenceBudgetExceeded:
        worlds = sample_worlds(g, m, seed)
        return float(event.holds(worlds, g.columns).mean()), True


def karp_luby(
    g: ProbGraph,
    relaxed: RelaxedQuerySet,
    tau: float,
    xi: float,
    seed: int,
    literal: bool = False,
    caps: Optional[Caps] = None,
) -> KarpLubyEstimate:
    """
    Karp-Luby estimate of Pr(some relaxed query embeds in a random world).

    Clauses are the distinct embedding edge images. With V the sum of clause
    probabilities, each of the N = ceil(4 ln(2/xi) / tau^2) trials picks
    clause i with probability P_i / V, draws a world in which clause i holds,
    and counts it when no earlier clause holds there. The estimate is
    V * Cnt / N (``literal=True`` returns Cnt / N). A truncated clause set
    only bounds the union from below, which the estimate's ``truncated``
    bit reports.
    """
    n = sample_count(tau, xi)
    clauses, truncated = capped_clauses(g, relaxed, caps)
    if not clauses:
        return KarpLubyEstimate(0.0, 0, 0, truncated=truncated)
    if any(not clause for clause in clauses):
        return KarpLubyEstimate(1.0, 0, len(clauses))
    doubly = False
    probabilities = np.empty(len(clauses))
    for i, clause in enumerate(clauses):
        probabilities[i], sampled = _clause_probability(g, clause, n, derive_seed(seed, "clause", i))
        doubly = doubly or sampled
    total = float(probabilities.sum())
    if total <= 0.0:
        return KarpLubyEstimate(0.0, 0, len(clauses), doubly, truncated)

    rng = np.random.default_rng(seed)
    picks = rng.choice(len(clauses), size=n, p=probabilities / total)
    events = [EdgeEvent.present(clause) for clause in clauses]
    count = 0
    for i in np.flatnonzero(np.bincount(picks, minlength=len(clauses))):
        drawn = int((picks == i).sum())
        try:
            worlds = sample_worlds(g, drawn, rng=rng, condition=events[i])
        except UndefinedConditionalError:
            continue
        first = np.ones(drawn, dtype=bool)
        for j in range(i):
            first &= ~events[j].holds(worlds, g.columns)
        count += int(first.sum())
    fraction = count / n
    value = fraction if literal else min(1.0, total * fraction)
    return KarpLubyEstimate(value, n, len(clauses), doubly, truncated)


def verify_ssp_sampled(
    g: ProbGraph,
    relaxed: RelaxedQuerySet,
    tau: float,
    xi: float,
    seed: int,
    literal: bool = False,
    caps: Optional[Caps] = None,
) -> float:
    """
    Sampled SSP of one graph.

    Examples:
        >>> from pgsim.fixtures import fix_a
        >>> edge = DetGraph([("a", "A"), ("b", "B")], [("q", "a", "b", "x")])
        >>> round(verify_ssp_sampled(fix_a(), relax_query(edge, 0), 0.1, 0.05, seed=7), 9)
        0.6
    """
    return karp_luby(g, relaxed, tau, xi, seed, literal, caps).value


def exact_ssp(g: ProbGraph, query: TpsQuery, cap: Optional[int] = None) -> float:
    """
    SSP by possible-world enumeration.

    Raises:
        OracleScaleError: If g has more edges than the oracle cap

    Examples:
        >>> from pgsim.fixtures import fix_b
        >>> path = DetGraph([("1", "A"), ("2", "A"), ("3", "A")],
        ...                 [("a", "1", "2", "x"), ("b", "2", "3", "x")])
        >>> exact_ssp(fix_b(), TpsQuery(path, 1, 0.5))
        0.875
    """
    worlds, weights = world_matrix(g, cap)
    if not is_subgraph_similar(query.graph, g.skeleton, query.delta):
        return 0.0
    needed = query.graph.size - query.delta
    total = 0.0
    for row, weight in zip(worlds, weights):
        if weight <= 0.0 or row.sum() < needed:
            continue
        present = [eid for eid, bit in zip(g.edge_ids, row) if bit]
        if is_subgraph_similar(query.graph, g.skeleton.realize(present), query.delta):
            total += float(weight)
    return min(1.0, total)


# -- pipeline ---------------------------------------------------------------


def run_query(
    database: GraphDatabase,
    pmi: Pmi,
    query: TpsQuery,
    config: Optional[QueryConfig] = None,
) -> Tuple[List[str], QueryReport]:
    """
    Answer a threshold query.

    Args:
        database: Graph database
        pmi: Index built over the same database
        query: Query graph with delta and epsilon
        config: Pipeline options (sampling accuracy, seed, pruning switches)

    Returns:
        ``(answers, report)``: answers are the accepted graphs plus the
        verified ones reaching epsilon, sorted by id

    Raises:
        IntegrityError: If the index was built over a different database
    """
    config = config or QueryConfig()
    pmi.verify(database)
    caps = config.resolved_caps()
    started = time.perf_counter()

    relaxed = relaxed_queries(query, database, config)
    containment = feature_containment(relaxed, pmi)
    report = QueryReport(
        query=query.name,
        epsilon=query.epsilon,
        delta=query.delta,
        seed=config.seed,
        relaxed=len(relaxed),
        config={
            "tau": config.tau,
            "xi": config.xi,
            "strategy": config.strategy,
            "enable_accept_pruning": config.enable_accept_pruning,
            "exact_verify": config.exact_verify,
            "relabel": config.relabel,
            "relabel_alphabet": config.relabel_alphabet,
            "literal_karp_luby": config.literal_karp_luby,
            "prefilter": config.prefilter,
        },
        database=list(database.ids),
    )

    mark = time.perf_counter()
    report.structural = structural_prune(
        database, relaxed, pmi if config.prefilter else None, containment if config.prefilter else None
    )
    report.timings["structural"] = time.perf_counter() - mark

    mark = time.perf_counter()
    accepted, rejected, undecided, bounds = probabilistic_prune(
        report.structural, pmi, query, relaxed, config, containment
    )
    report.accepted, report.rejected, report.undecided = accepted, rejected, undecided
    for gid, b in bounds.items():
        report.records[gid] = GraphRecord(gid, u_sim=b.u_sim, l_sim=b.l_sim, provenance=b.provenance)
    for gid in accepted:
        report.records[gid].verdict = ACCEPTED
    for gid in rejected:
        report.records[gid].verdict = REJECTED
    report.timings["probabilistic"] = time.perf_counter() - mark

    mark = time.perf_counter()
    answers = list(accepted)
    for gid in undecided:
        g = database[gid]
        record = report.records[gid]
        if config.exact_verify and g.size <= caps.oracle_edges:
            record.estimate = exact_ssp(g, query, caps.oracle_edges)
            record.method = "exact"
        else:
            record.seed = derive_seed(config.seed, gid, "verify")
            estimate = karp_luby(g, relaxed, config.tau, config.xi, record.seed, config.literal_karp_luby, caps)
            record.estimate, record.samples, record.method = estimate.value, estimate.samples, "sampled"
            if estimate.doubly_approximate:
                record.flags.append("doubly_approximate")
            if estimate.truncated:
                record.flags.append("truncated_clauses")
                if g.size <= caps.oracle_edges:
                    record.estimate, record.samples, record.method = exact_ssp(g, query, caps.oracle_edges), 0, "exact"
                else:
                    logger.warning("SSP estimate of %s covers a truncated clause set", gid)
            if record.method == "sampled" and abs(estimate.value - query.epsilon) < 2 * config.tau:
                record.flags.append("margin")
        if record.estimate >= query.epsilon:
            answers.append(gid)
    report.timings["verification"] = time.perf_counter() - mark

    if config.enable_accept_pruning and config.audit_accepts:
        for gid in accepted:
            g = database[gid]
            if g.size > caps.oracle_edges:
                continue
            try:
                exact = exact_ssp(g, query, caps.oracle_edges)
            except OracleScaleError:
                continue
            if exact < query.epsilon:
                report.audit_violations.append(gid)
                report.records[gid].flags.append("accept_violation")
                logger.warning("graph %s was accepted with exact SSP %.6f < %.6f", gid, exact, query.epsilon)

    report.answers = sorted(answers)
    report.timings["total"] = time.perf_counter() - started
    logger.info("query %s: %s", query.name, report.stage_counts())
    return report.answers, report
