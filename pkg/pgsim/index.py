"""
Probabilistic matrix index (PMI).

Rows are selected features, columns are database graphs, and the entry for
(f, g) is the SIP bound pair of f in g, or Absent when f is not contained
in g's skeleton. The index records the parameters, seeds and database
checksum it was built with, and persists as a versioned JSON document.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as SchemaError
from tqdm import tqdm

from .bounds import BoundPair, bound_pair
from .config import FORMAT_VERSION, Caps, IndexParams, SamplingParams, derive_seed
from .documents import EdgeModel, VertexModel
from .exceptions import CorruptIndexError, IndexVersionError, IntegrityError, PgsimError
from .mining import Feature, FeatureStats, mine_features
from .model import GraphDatabase

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class Pmi:
    """
    Attributes:
        features: Indexed features, ids ``f1, f2, ...``
        columns: Graph ids in database order
        entries: ``(feature_id, graph_id) -> BoundPair``; missing keys are Absent
        params: Build parameters
        database_checksum: Checksum of the database the index was built over
        stats: Per-feature support and embedding profile
        complete: False when feature mining stopped at its candidate cap
    """

    features: List[Feature]
    columns: Tuple[str, ...]
    entries: Dict[Tuple[str, str], BoundPair]
    params: IndexParams
    database_checksum: str
    stats: Dict[str, FeatureStats] = field(default_factory=dict)
    complete: bool = True

    def __post_init__(self):
        self._by_id = {f.feature_id: f for f in self.features}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pmi):
            return NotImplemented
        return (
            self.features == other.features
            and self.columns == other.columns
            and self.entries == other.entries
            and self.params == other.params
            and self.database_checksum == other.database_checksum
            and self.stats == other.stats
            and self.complete == other.complete
        )

    def feature(self, feature_id: str) -> Feature:
        return self._by_id[feature_id]

    def lookup(self, feature_id: str, graph_id: str) -> Optional[BoundPair]:
        """Bound pair of a feature in a graph, None when Absent."""
        return self.entries.get((feature_id, graph_id))

    def column(self, graph_id: str) -> List[Feature]:
        """Features with a non-Absent entry for ``graph_id`` (D_g)."""
        return [f for f in self.features if (f.feature_id, graph_id) in self.entries]

    def verify(self, database: GraphDatabase):
        """
        Raises:
            IntegrityError: If the index was not built over ``database``
        """
        checksum = database.checksum()
        if checksum != self.database_checksum:
            raise IntegrityError(
                f"index was built over database {self.database_checksum[:12]}..., "
                f"queried with {checksum[:12]}..."
            )


def build_pmi(
    database: GraphDatabase,
    features: List[Feature],
    params: Optional[IndexParams] = None,
    caps: Optional[Caps] = None,
    stats: Optional[Dict[str, FeatureStats]] = None,
    progress: bool = False,
) -> Pmi:
    """
    Compute the bound pair of every feature in every graph.

    Each entry samples (when it samples at all) from its own seed
    ``derive_seed(params.seed, feature_id, graph_id)``, so rebuilding with
    the same parameters reproduces the matrix.

    Args:
        database: Graph database
        features: Selected features
        params: Build parameters (mode, seed, tau, xi, tighten)
        caps: Resource caps
        stats: Feature statistics kept alongside the matrix
        progress: Show a tqdm progress bar

    Returns:
        Pmi; an entry whose computation failed holds the trivial pair (0, 1)
        with the error message in its metadata
    """
    params = params or IndexParams()
    caps = caps or Caps.from_env()
    entries: Dict[Tuple[str, str], BoundPair] = {}
    failures = 0
    with tqdm(
        total=len(features) * len(database), desc="Building PMI", unit="entry", disable=not progress
    ) as bar:
        for feature in features:
            support = set(stats[feature.feature_id].support) if stats and feature.feature_id in stats else None
            for g in database:
                bar.update(1)
                if support is not None and g.graph_id not in support:
                    continue
                sampling = SamplingParams(params.tau, params.xi, derive_seed(params.seed, feature.feature_id, g.graph_id))
                try:
                    pair = bound_pair(feature.pattern, g, params.mode, sampling, caps, params.tighten)
                except PgsimError as e:
                    logger.warning("entry (%s, %s) failed: %s", feature.feature_id, g.graph_id, e)
                    pair = BoundPair(0.0, 1.0, {"error": str(e)})
                    failures += 1
                if pair is not None:
                    entries[(feature.feature_id, g.graph_id)] = pair
    logger.info(
        "built PMI: %d features x %d graphs, %d present entries, %d failures",
        len(features), len(database), len(entries), failures,
    )
    return Pmi(list(features), database.ids, entries, params, database.checksum(), dict(stats or {}))


def build_index(
    database: GraphDatabase,
    params: Optional[IndexParams] = None,
    caps: Optional[Caps] = None,
    progress: bool = False,
) -> Pmi:
    """
    Select features and build their PMI in one step.

    Examples:
        >>> from pgsim.fixtures import fixture_database
        >>> pmi = build_index(fixture_database())
        >>> pmi.columns
        ('fix-a', 'fix-b')
    """
    params = params or IndexParams()
    caps = caps or Caps.from_env()
    start = time.perf_counter()
    selection = mine_features(database, params.alpha, params.beta, params.gamma, params.max_vertices, caps)
    logger.debug("feature selection took %.2fs", time.perf_counter() - start)
    pmi = build_pmi(database, selection.features, params, caps, selection.stats, progress)
    pmi.complete = selection.complete
    return pmi


# -- persistence -----------------------------------------------------------


class _FeatureModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    code: str
    vertices: List[VertexModel] = Field(..., min_length=1)
    edges: List[EdgeModel] = Field(default_factory=list)


class _EntryModel(BaseModel):
    feature: str
    graph: str
    lower: float
    upper: float
    metadata: dict = Field(default_factory=dict)


class _StatsModel(BaseModel):
    support: List[str]
    embedding_counts: Dict[str, int] = Field(default_factory=dict)
    disjoint_counts: Dict[str, int] = Field(default_factory=dict)


class PmiDocument(BaseModel):
    format: Literal["pgsim-pmi"] = "pgsim-pmi"
    version: int = FORMAT_VERSION
    database_checksum: str
    params: dict
    complete: bool = True
    columns: List[str]
    features: List[_FeatureModel]
    stats: Dict[str, _StatsModel] = Field(default_factory=dict)
    entries: List[_EntryModel]


def _to_document(pmi: Pmi) -> PmiDocument:
    return PmiDocument.model_validate(
        {
            "database_checksum": pmi.database_checksum,
            "params": pmi.params.to_dict(),
            "complete": pmi.complete,
            "columns": list(pmi.columns),
            "features": [f.to_dict() for f in pmi.features],
            "stats": {fid: s.to_dict() for fid, s in pmi.stats.items()},
            "entries": [
                {"feature": fid, "graph": gid, **pair.to_dict()}
                for (fid, gid), pair in sorted(pmi.entries.items())
            ],
        }
    )


def dumps_pmi(pmi: Pmi) -> str:
    return json.dumps(_to_document(pmi).model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def save_pmi(pmi: Pmi, path: PathLike):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_pmi(pmi), encoding="utf-8")
    logger.info("saved PMI with %d features to %s", len(pmi.features), path)


def loads_pmi(text: str, source: str = "<pmi>") -> Pmi:
    """
    Parse a serialized PMI.

    Raises:
        CorruptIndexError: If the text is not a well-formed PMI document
        IndexVersionError: If it was written by a newer format version
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorruptIndexError(f"{source}: not valid JSON (line {e.lineno} column {e.colno}): {e.msg}")
    if not isinstance(raw, dict) or raw.get("format") != "pgsim-pmi":
        raise CorruptIndexError(f"{source}: not a pgsim-pmi document")
    version = raw.get("version")
    if not isinstance(version, int):
        raise CorruptIndexError(f"{source}: missing format version")
    if version > FORMAT_VERSION:
        raise IndexVersionError(f"{source}: format version {version} is newer than supported {FORMAT_VERSION}")
    try:
        document = PmiDocument.model_validate(raw)
        features = [Feature.from_dict(f.model_dump()) for f in document.features]
        params = IndexParams.from_dict(document.params)
    except (SchemaError, PgsimError, KeyError, TypeError) as e:
        raise CorruptIndexError(f"{source}: {e}")
    entries = {
        (entry.feature, entry.graph): BoundPair(entry.lower, entry.upper, entry.metadata)
        for entry in document.entries
    }
    stats = {fid: FeatureStats.from_dict(s.model_dump()) for fid, s in document.stats.items()}
    return Pmi(features, tuple(document.columns), entries, params, document.database_checksum, stats, document.complete)


def load_pmi(path: PathLike) -> Pmi:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CorruptIndexError(f"cannot read {path}: {e}")
    return loads_pmi(text, str(path))
