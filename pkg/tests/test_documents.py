import json

import pytest

from pgsim.documents import (
    TruthDocument,
    dump_database,
    load_any,
    load_database,
    parse_database,
    parse_query,
    parse_truth,
    query_document,
    render,
    save_database,
)
from pgsim.exceptions import DocumentError
from pgsim.fixtures import DATA_DIR

from .conftest import path


def _database_text(**graph_overrides) -> str:
    graph = {
        "id": "g1",
        "vertices": [{"id": "v1", "label": "A"}, {"id": "v2", "label": "B"}],
        "edges": [{"id": "e1", "u": "v1", "v": "v2", "label": "x"}],
        "neighbor_sets": [{"edges": ["e1"], "table": [{"assign": [1], "p": 0.7}, {"assign": [0], "p": 0.3}]}],
    }
    graph.update(graph_overrides)
    return json.dumps({"format": "pgsim-database", "version": 1, "graphs": [graph]})


class TestDatabaseDocuments:
    def test_shipped_fixtures(self):
        for name in ("fix_a", "fix_b", "graph_002"):
            assert len(load_database(DATA_DIR / f"{name}.json")) == 1

    def test_minimal(self):
        db = parse_database(_database_text())
        assert db.ids == ("g1",)

    def test_save_and_load(self, fixtures_db, tmp_path):
        target = tmp_path / "db.json"
        save_database(fixtures_db, target)
        assert load_database(target).checksum() == fixtures_db.checksum()
        assert target.read_text(encoding="utf-8") == dump_database(fixtures_db)

    def test_invalid_json_reports_position(self):
        with pytest.raises(DocumentError, match="line 1 column"):
            parse_database('{"graphs": [')

    def test_missing_field_is_located(self):
        text = _database_text(edges=[{"id": "e1", "v": "v2", "label": "x"}])
        with pytest.raises(DocumentError, match=r"graphs\[0\]\.edges\[0\]\.u"):
            parse_database(text)

    def test_probability_range(self):
        table = [{"assign": [1], "p": 1.2}, {"assign": [0], "p": 0.3}]
        with pytest.raises(DocumentError, match=r"neighbor_sets\[0\]\.table\[0\]\.p"):
            parse_database(_database_text(neighbor_sets=[{"edges": ["e1"], "table": table}]))

    def test_unknown_field(self):
        with pytest.raises(DocumentError, match="colour"):
            parse_database(_database_text(colour="red"))

    def test_dangling_endpoint(self):
        text = _database_text(edges=[{"id": "e1", "u": "v1", "v": "v9", "label": "x"}])
        with pytest.raises(DocumentError, match=r"graphs\[0\]"):
            parse_database(text)

    def test_rows_must_sum_to_one(self):
        table = [{"assign": [1], "p": 0.7}, {"assign": [0], "p": 0.2}]
        with pytest.raises(DocumentError, match="sum to"):
            parse_database(_database_text(neighbor_sets=[{"edges": ["e1"], "table": table}]))

    def test_newer_version(self):
        text = json.dumps({"format": "pgsim-database", "version": 99, "graphs": []})
        with pytest.raises(DocumentError, match="newer"):
            parse_database(text)

    def test_wrong_format(self):
        with pytest.raises(DocumentError, match="format"):
            parse_database(json.dumps({"format": "pgsim-query", "version": 1, "graphs": []}))


class TestQueryDocuments:
    def test_round_trip(self):
        q = path("AAA", "xx")
        document = query_document("q1", q, 1, 0.5, seed=3)
        parsed = parse_query(render(document))
        assert parsed.graph() == q
        assert (parsed.name, parsed.delta, parsed.epsilon, parsed.seed) == ("q1", 1, 0.5, 3)
        assert parsed.tau is None

    def test_disconnected_query(self):
        text = json.dumps({
            "format": "pgsim-query",
            "version": 1,
            "query": {
                "vertices": [{"id": "a", "label": "A"}, {"id": "b", "label": "A"}, {"id": "c", "label": "A"}],
                "edges": [{"id": "d", "u": "a", "v": "b", "label": "x"}],
            },
            "delta": 0,
            "epsilon": 0.5,
        })
        with pytest.raises(DocumentError, match="not connected"):
            parse_query(text)

    def test_delta_above_query_size(self):
        text = render(query_document("q", path("AA", "x"), 0, 0.5)).replace('"delta": 0', '"delta": 2')
        with pytest.raises(DocumentError, match="delta"):
            parse_query(text)

    def test_epsilon_range(self):
        text = render(query_document("q", path("AA", "x"), 0, 0.5)).replace('"epsilon": 0.5', '"epsilon": 0')
        with pytest.raises(DocumentError, match="epsilon"):
            parse_query(text)


class TestTruth:
    def test_answers(self):
        truth = TruthDocument(epsilon=0.5, queries={"q1": {"g2": 0.5, "g1": 0.9, "g3": 0.1}})
        assert truth.answers("q1") == ["g1", "g2"]
        with pytest.raises(DocumentError):
            truth.answers("q2")

    def test_answers_at_query_threshold(self):
        truth = TruthDocument(epsilon=0.3, queries={"q1": {"g1": 0.5, "g2": 0.8}})
        assert truth.answers("q1", 0.7) == ["g2"]
        assert truth.answers("q1", 0.3) == truth.answers("q1") == ["g1", "g2"]

    def test_parse(self):
        text = render(TruthDocument(epsilon=0.25, queries={"q": {"g": 0.3}}))
        assert parse_truth(text).answers("q") == ["g"]


def test_load_any_dispatches_on_format(tmp_path, fixtures_db):
    db_file = tmp_path / "db.json"
    save_database(fixtures_db, db_file)
    assert len(load_any(db_file)) == 2
    other = tmp_path / "other.json"
    other.write_text('{"format": "something"}', encoding="utf-8")
    with pytest.raises(DocumentError):
        load_any(other)
