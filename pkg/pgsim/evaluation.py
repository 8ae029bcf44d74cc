"""
Answer quality against exact truth labels.

Precision is the share of returned graphs that truly reach epsilon, recall
the share of true graphs that are returned. The correlated-versus-
independent comparison runs the same queries on a database whose joint
tables are replaced by independent per-edge marginals, and scores both
answer sets against the truth of the correlated database.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .config import Caps, IndexParams, QueryConfig, oracle_cap
from .documents import TruthDocument
from .exceptions import OracleScaleError
from .index import Pmi, build_index
from .model import GraphDatabase, JointTable, ProbGraph, edge_marginals
from .query import TpsQuery, exact_ssp, relaxed_queries, run_query, structural_prune

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrecisionRecall:
    precision: float
    recall: float
    predicted: int
    relevant: int
    zero_predictions: bool = False

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "predicted": self.predicted,
            "relevant": self.relevant,
            "zero_predictions": self.zero_predictions,
        }


def precision_recall(predicted: Sequence[str], truth: Sequence[str]) -> PrecisionRecall:
    """
    Precision and recall of an answer set.

    With no predictions precision is reported as 1 and flagged; with no
    relevant graphs recall is 1.

    Examples:
        >>> precision_recall(["g1", "g2"], ["g2", "g3"]).precision
        0.5
        >>> precision_recall([], ["g1"]).zero_predictions
        True
    """
    got, want = set(predicted), set(truth)
    hits = len(got & want)
    precision = hits / len(got) if got else 1.0
    recall = hits / len(want) if want else 1.0
    return PrecisionRecall(precision, recall, len(got), len(want), not got)


def independent_analog(database: GraphDatabase) -> GraphDatabase:
    """Same skeletons, one Bernoulli table per edge holding its exact marginal."""
    graphs = []
    for g in database:
        marginals = edge_marginals(g)
        tables = [JointTable.bernoulli(eid, min(1.0, max(0.0, marginals[eid]))) for eid in g.edge_ids]
        graphs.append(ProbGraph(g.graph_id, g.skeleton, tables, g.max_scope))
    return GraphDatabase(graphs)


def oracle_table(
    database: GraphDatabase, query: TpsQuery, cap: Optional[int] = None
) -> Tuple[Dict[str, float], List[str]]:
    """
    Exact SSP of every graph.

    Graphs failing structural pruning get 0 without enumeration; graphs
    beyond the oracle cap are skipped.

    Returns:
        ``(ssp by graph id, skipped graph ids)``
    """
    cap = oracle_cap() if cap is None else cap
    survivors = set(structural_prune(database, relaxed_queries(query, database)))
    table: Dict[str, float] = {}
    skipped: List[str] = []
    for g in database:
        if g.graph_id not in survivors:
            table[g.graph_id] = 0.0
            continue
        try:
            table[g.graph_id] = exact_ssp(g, query, cap)
        except OracleScaleError as e:
            logger.warning("skipping %s: %s", g.graph_id, e)
            skipped.append(g.graph_id)
    return table, skipped


@dataclass
class Evaluation:
    per_query: Dict[str, PrecisionRecall] = field(default_factory=dict)
    independent: Dict[str, PrecisionRecall] = field(default_factory=dict)

    @staticmethod
    def _mean(scores: Dict[str, PrecisionRecall]) -> Dict[str, float]:
        if not scores:
            return {"precision": 1.0, "recall": 1.0}
        return {
            "precision": sum(s.precision for s in scores.values()) / len(scores),
            "recall": sum(s.recall for s in scores.values()) / len(scores),
        }

    def aggregate(self) -> Dict[str, float]:
        return self._mean(self.per_query)

    def aggregate_independent(self) -> Dict[str, float]:
        return self._mean(self.independent)

    def to_dict(self) -> dict:
        data = {
            "queries": {name: s.to_dict() for name, s in sorted(self.per_query.items())},
            "aggregate": self.aggregate(),
        }
        if self.independent:
            data["independent"] = {name: s.to_dict() for name, s in sorted(self.independent.items())}
            data["aggregate_independent"] = self.aggregate_independent()
        return data


def evaluate(
    database: GraphDatabase,
    pmi: Pmi,
    queries: Sequence[TpsQuery],
    truth: TruthDocument,
    config: Optional[QueryConfig] = None,
    compare_independent: bool = False,
    index_params: Optional[IndexParams] = None,
    caps: Optional[Caps] = None,
) -> Evaluation:
    """
    Score every query's answers against the truth labels.

    Args:
        database: Graph database
        pmi: Index over ``database``
        queries: Queries, matched to truth labels by name
        truth: Truth document (labeled SSP per query and graph)
        config: Query options
        compare_independent: Also answer on the independent analog
        index_params: Parameters of the analog's index (default: the PMI's)
        caps: Resource caps of the analog's index

    Raises:
        DocumentError: If a query has no truth labels
    """
    config = config or QueryConfig()
    result = Evaluation()
    analog, analog_pmi = None, None
    if compare_independent:
        analog = independent_analog(database)
        analog_pmi = build_index(analog, index_params or pmi.params, caps)
    for query in queries:
        relevant = truth.answers(query.name, query.epsilon)
        answers, _ = run_query(database, pmi, query, config)
        result.per_query[query.name] = precision_recall(answers, relevant)
        if analog is not None:
            answers, _ = run_query(analog, analog_pmi, query, config)
            result.independent[query.name] = precision_recall(answers, relevant)
    logger.info("evaluated %d queries: %s", len(queries), result.aggregate())
    return result
