"""
pgsim: Threshold Subgraph-Similarity Search over Probabilistic Graphs

A probabilistic graph is a labeled graph whose edges exist stochastically,
with joint probability tables over groups of neighboring edges. pgsim
answers threshold queries over databases of such graphs:

- **Possible-world model**: exact inference, conditional probabilities and
  exact world sampling over correlated edge tables
- **Feature index**: frequent, discriminative connected features with
  lower/upper bounds on their probability of appearing in each graph
- **Query pipeline**: structural pruning, bound-based probabilistic
  pruning and Karp-Luby sampled verification
- **Oracle**: exact similarity probabilities by world enumeration

Examples:
    >>> from pgsim import DetGraph, TpsQuery, build_index, run_query
    >>> from pgsim.fixtures import fixture_database
    >>> db = fixture_database()
    >>> pmi = build_index(db)
    >>> path = DetGraph([("1", "A"), ("2", "A"), ("3", "A")],
    ...                 [("a", "1", "2", "x"), ("b", "2", "3", "x")])
    >>> answers, report = run_query(db, pmi, TpsQuery(path, 1, 0.5))
    >>> answers
    ['fix-b']
"""

from .bounds import BoundPair, bound_pair, exact_sip, lower_bound_sip, upper_bound_sip
from .config import Caps, IndexParams, QueryConfig, SamplingParams
from .documents import load_database, load_query, parse_database, save_database
from .exceptions import (
    CorruptIndexError,
    DocumentError,
    IndexVersionError,
    IntegrityError,
    InvalidParameterError,
    PgsimError,
    ValidationError,
)
from .graph import DetGraph, canonical_code, relax_query, subgraph_distance, subgraph_iso_exists
from .index import Pmi, build_index, build_pmi, load_pmi, save_pmi
from .mining import Feature, select_features
from .model import GraphDatabase, JointTable, ProbGraph, validate
from .query import QueryReport, TpsQuery, exact_ssp, run_query, verify_ssp_sampled

__version__ = "0.1.0"
__all__ = [
    # Data model
    "DetGraph",
    "JointTable",
    "ProbGraph",
    "GraphDatabase",
    "validate",

    # Graph primitives
    "subgraph_iso_exists",
    "canonical_code",
    "relax_query",
    "subgraph_distance",

    # Index
    "Feature",
    "select_features",
    "BoundPair",
    "bound_pair",
    "lower_bound_sip",
    "upper_bound_sip",
    "exact_sip",
    "Pmi",
    "build_index",
    "build_pmi",
    "save_pmi",
    "load_pmi",

    # Queries
    "TpsQuery",
    "QueryReport",
    "run_query",
    "exact_ssp",
    "verify_ssp_sampled",

    # Documents
    "load_database",
    "parse_database",
    "save_database",
    "load_query",

    # Configuration
    "Caps",
    "IndexParams",
    "QueryConfig",
    "SamplingParams",

    # Exceptions
    "PgsimError",
    "InvalidParameterError",
    "ValidationError",
    "DocumentError",
    "IntegrityError",
    "CorruptIndexError",
    "IndexVersionError",
]
