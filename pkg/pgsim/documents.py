"""
JSON documents read and written by pgsim.

Three document kinds share one graph schema:

* database: ``{"format": "pgsim-database", "version": 1, "graphs": [...]}``
  where each graph lists vertices, edges and neighbor sets with their
  joint tables (``{"assign": [0|1, ...], "p": decimal}`` rows);
* query: ``{"format": "pgsim-query", "version": 1, "name", "query",
  "delta", "epsilon"}`` plus optional ``tau``, ``xi`` and ``seed``;
* truth: ``{"format": "pgsim-truth", "version": 1, "epsilon",
  "queries": {name: {graph_id: ssp}}}``.

Schemas are pydantic models; any problem surfaces as a DocumentError whose
message names the offending field (``graphs[0].edges[1].u``) or the JSON
line and column.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as SchemaError

from .config import FORMAT_VERSION
from .exceptions import DocumentError, GraphError, ValidationError
from .graph import DetGraph
from .model import GraphDatabase, ProbGraph

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class VertexModel(_Strict):
    id: str
    label: str


class EdgeModel(_Strict):
    id: str
    u: str
    v: str
    label: str


class RowModel(_Strict):
    assign: List[Literal[0, 1]]
    p: float = Field(..., ge=0.0, le=1.0)


class NeighborSetModel(_Strict):
    edges: List[str] = Field(..., min_length=1)
    table: List[RowModel] = Field(..., min_length=1)


class GraphModel(_Strict):
    id: str
    vertices: List[VertexModel]
    edges: List[EdgeModel] = Field(default_factory=list)
    neighbor_sets: List[NeighborSetModel] = Field(default_factory=list)


class PatternModel(_Strict):
    vertices: List[VertexModel] = Field(..., min_length=1)
    edges: List[EdgeModel] = Field(default_factory=list)


class DatabaseDocument(_Strict):
    format: Literal["pgsim-database"] = "pgsim-database"
    version: int = FORMAT_VERSION
    graphs: List[GraphModel]


class QueryDocument(_Strict):
    format: Literal["pgsim-query"] = "pgsim-query"
    version: int = FORMAT_VERSION
    name: str = "query"
    query: PatternModel
    delta: int = Field(..., ge=0)
    epsilon: float = Field(..., gt=0.0, le=1.0)
    tau: Optional[float] = Field(None, gt=0.0)
    xi: Optional[float] = Field(None, gt=0.0, lt=1.0)
    seed: Optional[int] = None

    def graph(self) -> DetGraph:
        return DetGraph.from_dict(self.query.model_dump())


class TruthDocument(_Strict):
    format: Literal["pgsim-truth"] = "pgsim-truth"
    version: int = FORMAT_VERSION
    epsilon: float = Field(..., gt=0.0, le=1.0)
    queries: Dict[str, Dict[str, float]]

    def answers(self, name: str, epsilon: Optional[float] = None) -> List[str]:
        """
        Graph ids whose labeled SSP reaches epsilon.

        Labels are thresholded at ``epsilon`` when given (the query's own
        threshold), else at the document epsilon.
        """
        if name not in self.queries:
            raise DocumentError(f"truth labels have no entry for query {name!r}")
        threshold = self.epsilon if epsilon is None else epsilon
        return sorted(gid for gid, ssp in self.queries[name].items() if ssp >= threshold)


def _location(loc) -> str:
    text = ""
    for part in loc:
        if isinstance(part, int):
            text += f"[{part}]"
        else:
            text += f".{part}" if text else str(part)
    return text or "<document>"


def _schema_message(source: str, exc: SchemaError) -> str:
    problems = [f"{_location(err['loc'])}: {err['msg']}" for err in exc.errors()]
    shown = "; ".join(problems[:5])
    if len(problems) > 5:
        shown += f"; and {len(problems) - 5} more"
    return f"{source}: {shown}"


def _parse(text: str, model, source: str):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"{source}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    if isinstance(raw, dict):
        version = raw.get("version")
        if isinstance(version, int) and version > FORMAT_VERSION:
            raise DocumentError(f"{source}: version: format version {version} is newer than {FORMAT_VERSION}")
    try:
        return model.model_validate(raw)
    except SchemaError as e:
        raise DocumentError(_schema_message(source, e))


def _read(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DocumentError(f"cannot read {path}: {e}")


def render(document: BaseModel) -> str:
    """Serialized form: indented JSON, trailing newline."""
    return json.dumps(document.model_dump(mode="json", exclude_none=True), indent=2, ensure_ascii=False) + "\n"


def write_document(document: BaseModel, path: PathLike):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(document), encoding="utf-8")
    logger.debug("wrote %s document to %s", document.format, path)


# -- databases -------------------------------------------------------------


def database_to_document(database: GraphDatabase) -> DatabaseDocument:
    return DatabaseDocument.model_validate({"graphs": [g.to_dict() for g in database]})


def database_from_document(document: DatabaseDocument, source: str = "<database>") -> GraphDatabase:
    """
    Build and validate every graph of a parsed database document.

    Raises:
        DocumentError: If a graph is malformed (unknown endpoints, tables over
                       non-neighbor edges, rows not summing to 1, ...)
    """
    graphs: List[ProbGraph] = []
    for position, graph in enumerate(document.graphs):
        try:
            graphs.append(ProbGraph.from_dict(graph.model_dump()))
        except (GraphError, ValidationError) as e:
            raise DocumentError(f"{source}: graphs[{position}] ({graph.id!r}): {e}")
    try:
        return GraphDatabase(graphs)
    except ValidationError as e:
        raise DocumentError(f"{source}: graphs: {e}")


def parse_database(text: str, source: str = "<database>") -> GraphDatabase:
    """
    Parse a database document.

    Args:
        text: Document text
        source: Name used in diagnostics

    Returns:
        GraphDatabase of validated probabilistic graphs

    Raises:
        DocumentError: On malformed JSON, schema violations or invalid graphs

    Examples:
        >>> db = parse_database('{"format": "pgsim-database", "version": 1, "graphs": []}')
        >>> len(db)
        0
    """
    return database_from_document(_parse(text, DatabaseDocument, source), source)


def load_database(path: PathLike) -> GraphDatabase:
    return parse_database(_read(path), str(path))


def dump_database(database: GraphDatabase) -> str:
    return render(database_to_document(database))


def save_database(database: GraphDatabase, path: PathLike):
    write_document(database_to_document(database), path)


# -- queries and truth labels ----------------------------------------------


def parse_query(text: str, source: str = "<query>") -> QueryDocument:
    """
    Parse a query document.

    Raises:
        DocumentError: On malformed JSON, schema violations, a disconnected
                       query graph or delta above the query's edge count
    """
    document = _parse(text, QueryDocument, source)
    try:
        graph = document.graph()
    except GraphError as e:
        raise DocumentError(f"{source}: query: {e}")
    if not graph.is_connected():
        raise DocumentError(f"{source}: query: query graph is not connected")
    if document.delta > graph.size:
        raise DocumentError(f"{source}: delta: {document.delta} exceeds the query's {graph.size} edges")
    return document


def load_query(path: PathLike) -> QueryDocument:
    return parse_query(_read(path), str(path))


def query_document(name: str, graph: DetGraph, delta: int, epsilon: float, **options) -> QueryDocument:
    """Build a query document; ``options`` may set tau, xi and seed."""
    return QueryDocument.model_validate(
        {"name": name, "query": graph.to_dict(), "delta": delta, "epsilon": epsilon, **options}
    )


def parse_truth(text: str, source: str = "<truth>") -> TruthDocument:
    return _parse(text, TruthDocument, source)


def load_truth(path: PathLike) -> TruthDocument:
    return parse_truth(_read(path), str(path))


def load_any(path: PathLike) -> Union[GraphDatabase, QueryDocument, TruthDocument]:
    """Dispatch on the ``format`` field."""
    text = _read(path)
    try:
        kind = json.loads(text).get("format")
    except (json.JSONDecodeError, AttributeError):
        kind = None
    parsers = {"pgsim-database": parse_database, "pgsim-query": parse_query, "pgsim-truth": parse_truth}
    if kind not in parsers:
        raise DocumentError(f"{path}: format: expected one of {sorted(parsers)}, got {kind!r}")
    return parsers[kind](text, str(path))
