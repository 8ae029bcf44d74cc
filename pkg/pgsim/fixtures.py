"""
Small probabilistic graphs shipped with the package.

* ``fix_a``: path A-x-B-y-C with one joint table over both edges
  (rows 11: 0.4, 10: 0.2, 01: 0.3, 00: 0.1).
* ``fix_b``: triangle of A vertices, all edges labeled x, one uniform table
  (every world 1/8).
* ``graph_002``: five-edge graph with two overlapping three-edge tables whose
  shared edge has inconsistent marginals, so its normalization differs from 1.
"""

from functools import lru_cache
from pathlib import Path

from .documents import load_database
from .exceptions import DocumentError
from .model import GraphDatabase, ProbGraph

DATA_DIR = Path(__file__).parent / "data"


@lru_cache(maxsize=None)
def _load_data(name: str) -> GraphDatabase:
    data_file = DATA_DIR / f"{name}.json"
    if not data_file.exists():
        raise DocumentError(f"fixture {name!r} not found. Expected: {data_file}")
    return load_database(data_file)


def _single(name: str) -> ProbGraph:
    database = _load_data(name)
    return next(iter(database))


def fix_a() -> ProbGraph:
    return _single("fix_a")


def fix_b() -> ProbGraph:
    return _single("fix_b")


def graph_002() -> ProbGraph:
    return _single("graph_002")


def fixture_database() -> GraphDatabase:
    """FIX-A and FIX-B together."""
    return GraphDatabase([fix_a(), fix_b()])
