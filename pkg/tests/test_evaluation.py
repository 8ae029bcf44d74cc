import pytest

from pgsim.config import IndexParams, QueryConfig
from pgsim.documents import TruthDocument
from pgsim.evaluation import evaluate, independent_analog, oracle_table, precision_recall
from pgsim.exceptions import DocumentError
from pgsim.generator import extract_queries
from pgsim.index import build_index
from pgsim.model import edge_marginals
from pgsim.query import TpsQuery


class TestPrecisionRecall:
    def test_partial_overlap(self):
        score = precision_recall(["g1", "g2"], ["g2", "g3"])
        assert (score.precision, score.recall) == (0.5, 0.5)
        assert (score.predicted, score.relevant) == (2, 2)

    def test_no_predictions(self):
        score = precision_recall([], ["g1"])
        assert score.precision == 1.0
        assert score.recall == 0.0
        assert score.zero_predictions

    def test_nothing_relevant(self):
        assert precision_recall(["g1"], []).recall == 1.0


class TestIndependentAnalog:
    def test_keeps_marginals(self, fixtures_db):
        analog = independent_analog(fixtures_db)
        assert edge_marginals(analog["fix-a"]) == pytest.approx({"e1": 0.6, "e2": 0.7})
        assert edge_marginals(analog["fix-b"]) == pytest.approx({"e1": 0.5, "e2": 0.5, "e3": 0.5})

    def test_one_table_per_edge(self, fixtures_db):
        analog = independent_analog(fixtures_db)
        assert all(len(table.edge_ids) == 1 for g in analog for table in g.tables)
        assert analog.ids == fixtures_db.ids


class TestOracle:
    def test_fixture_table(self, fixtures_db, path_aaa):
        table, skipped = oracle_table(fixtures_db, TpsQuery(path_aaa, 1, 0.5))
        assert table == pytest.approx({"fix-a": 0.0, "fix-b": 0.875})
        assert skipped == []

    def test_cap_skips_large_graphs(self, fixtures_db, path_aaa):
        table, skipped = oracle_table(fixtures_db, TpsQuery(path_aaa, 1, 0.5), cap=1)
        assert skipped == ["fix-b"]
        assert table == {"fix-a": 0.0}


def _truth(database, queries, epsilon):
    labels = {}
    for query in queries:
        table, _ = oracle_table(database, query)
        labels[query.name] = table
    return TruthDocument(epsilon=epsilon, queries=labels)


@pytest.fixture(scope="module")
def workload(independent_db):
    queries = [
        TpsQuery(q, 1, 0.4, name) for name, q in extract_queries(independent_db, [2, 3], 2, seed=12)
    ]
    return queries, _truth(independent_db, queries, 0.4)


class TestEvaluate:
    def test_exact_verification_is_perfect(self, independent_db, workload):
        queries, truth = workload
        pmi = build_index(independent_db, IndexParams(max_vertices=3))
        result = evaluate(independent_db, pmi, queries, truth, QueryConfig(exact_verify=True))
        assert result.aggregate() == {"precision": 1.0, "recall": 1.0}
        assert set(result.per_query) == {q.name for q in queries}

    def test_independent_comparison(self, independent_db, workload):
        queries, truth = workload
        pmi = build_index(independent_db, IndexParams(max_vertices=3))
        result = evaluate(independent_db, pmi, queries, truth, QueryConfig(exact_verify=True), compare_independent=True)
        # Product-form tables are their own independent analog.
        assert result.aggregate_independent() == pytest.approx(result.aggregate())
        data = result.to_dict()
        assert set(data) == {"queries", "aggregate", "independent", "aggregate_independent"}

    def test_missing_truth(self, fixtures_db, path_aaa):
        pmi = build_index(fixtures_db)
        truth = TruthDocument(epsilon=0.5, queries={})
        with pytest.raises(DocumentError):
            evaluate(fixtures_db, pmi, [TpsQuery(path_aaa, 1, 0.5, "q")], truth)
