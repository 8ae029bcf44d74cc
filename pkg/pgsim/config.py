"""
Defaults, caps and parameter bundles shared by every pgsim component.

Query defaults are probability threshold 0.5 and distance threshold 4;
feature selection uses alpha = beta = gamma = 0.15 with features of at most
five vertices.
"""

import math
import os
import zlib
from dataclasses import dataclass, replace
from typing import Optional

from .exceptions import InvalidParameterError

FORMAT_VERSION = 1

ORACLE_CAP_ENV = "PGSIM_ORACLE_CAP"

# Possible-world enumeration limit (edges)
DEFAULT_ORACLE_CAP = 20

# Tolerances
ROW_SUM_TOLERANCE = 1e-9
NORMALIZATION_WARNING = 1e-6
PROBABILITY_CLAMP = 1.0 - 1e-12

# Query defaults
DEFAULT_EPSILON = 0.5
DEFAULT_DELTA = 4
DEFAULT_TAU = 0.1
DEFAULT_XI = 0.05

# Feature generation defaults
DEFAULT_ALPHA = 0.15
DEFAULT_BETA = 0.15
DEFAULT_GAMMA = 0.15
DEFAULT_MAX_FEATURE_VERTICES = 5


def oracle_cap() -> int:
    """
    Get the possible-world enumeration cap.

    Returns:
        The value of ``PGSIM_ORACLE_CAP`` when set, else 20

    Raises:
        InvalidParameterError: If the environment value is not a positive integer
    """
    raw = os.environ.get(ORACLE_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_ORACLE_CAP
    try:
        value = int(raw)
    except ValueError:
        raise InvalidParameterError(f"{ORACLE_CAP_ENV} must be an integer, got {raw!r}")
    if value < 1:
        raise InvalidParameterError(f"{ORACLE_CAP_ENV} must be positive, got {value}")
    return value


def derive_seed(root: int, *keys) -> int:
    """Combine a root seed with string keys (graph ids, feature ids) into a replayable seed."""
    seed = int(root) & 0xFFFFFFFF
    for key in keys:
        seed = zlib.crc32(str(key).encode("utf-8"), seed)
    return seed


def sample_count(tau: float, xi: float) -> int:
    """Monte Carlo sample size ceil(4 ln(2/xi) / tau^2)."""
    if tau <= 0:
        raise InvalidParameterError(f"tau must be positive, got {tau}")
    if not 0 < xi < 1:
        raise InvalidParameterError(f"xi must lie in (0, 1), got {xi}")
    return int(math.ceil(4.0 * math.log(2.0 / xi) / (tau * tau)))


@dataclass(frozen=True)
class Caps:
    """Resource caps. Exceeding one either degrades a bound soundly or raises."""

    oracle_edges: int = DEFAULT_ORACLE_CAP
    vertex_maps: int = 10000
    embeddings: int = 200
    cuts: int = 500
    clique_nodes: int = 64
    code_vertices: int = 12
    code_states: int = 50000
    factor_scope: int = 22
    mining_candidates: int = 5000

    @classmethod
    def from_env(cls, **overrides) -> "Caps":
        return cls(oracle_edges=oracle_cap(), **overrides)


@dataclass(frozen=True)
class SamplingParams:
    tau: float = DEFAULT_TAU
    xi: float = DEFAULT_XI
    seed: int = 0

    def sample_count(self) -> int:
        return sample_count(self.tau, self.xi)


@dataclass(frozen=True)
class IndexParams:
    """
    Parameters of feature selection and PMI construction.

    Attributes:
        alpha: Minimum ratio of disjoint embeddings to embeddings for a graph
               to count towards a feature's frequency
        beta: Frequency threshold
        gamma: Discriminative threshold (ratios above 1 are meaningful)
        max_vertices: Largest feature vertex count (maxL)
        mode: "exact" conditionals (sampling only past the inference budget)
              or "sample" (always Monte Carlo)
        seed: Root seed of every sampled conditional
        tighten: Maximum-weight clique selection (True) or first-fit
                 disjoint members (False)
    """

    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA
    max_vertices: int = DEFAULT_MAX_FEATURE_VERTICES
    mode: str = "exact"
    seed: int = 0
    tau: float = DEFAULT_TAU
    xi: float = DEFAULT_XI
    tighten: bool = True

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {value}")
        if self.gamma < 0:
            raise InvalidParameterError(f"gamma must be non-negative, got {self.gamma}")
        if self.max_vertices < 1:
            raise InvalidParameterError(f"max_vertices must be >= 1, got {self.max_vertices}")
        if self.mode not in ("exact", "sample"):
            raise InvalidParameterError(f"mode must be 'exact' or 'sample', got {self.mode!r}")
        sample_count(self.tau, self.xi)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "max_vertices": self.max_vertices,
            "mode": self.mode,
            "seed": self.seed,
            "tau": self.tau,
            "xi": self.xi,
            "tighten": self.tighten,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IndexParams":
        return cls(**{key: data[key] for key in cls().to_dict() if key in data})


@dataclass(frozen=True)
class QueryConfig:
    """
    Knobs of the online query pipeline.

    Attributes:
        tau, xi: Accuracy and confidence of sampled verification
        seed: Root seed; each graph receives derive_seed(seed, graph_id)
        enable_accept_pruning: Apply the lower-bound acceptance rule
        exact_verify: Verify by possible-world enumeration within the oracle cap
        relabel: Let relaxation substitute edge labels
        relabel_alphabet: "database" or "query" edge-label alphabet
        strategy: "optimal" (set cover + quadratic program) or "basic"
                  (one randomly chosen feature per relaxed query)
        literal_karp_luby: Return Cnt/N instead of V*Cnt/N (debug only)
        prefilter: Skip isomorphism tests that an Absent feature already decides
        audit_accepts: Compare each acceptance with the oracle when possible
    """

    tau: float = DEFAULT_TAU
    xi: float = DEFAULT_XI
    seed: int = 0
    enable_accept_pruning: bool = False
    exact_verify: bool = False
    relabel: bool = False
    relabel_alphabet: str = "database"
    strategy: str = "optimal"
    literal_karp_luby: bool = False
    prefilter: bool = True
    audit_accepts: bool = True
    caps: Optional[Caps] = None

    def __post_init__(self):
        sample_count(self.tau, self.xi)
        if self.relabel_alphabet not in ("database", "query"):
            raise InvalidParameterError(
                f"relabel_alphabet must be 'database' or 'query', got {self.relabel_alphabet!r}"
            )
        if self.strategy not in ("optimal", "basic"):
            raise InvalidParameterError(f"strategy must be 'optimal' or 'basic', got {self.strategy!r}")

    def resolved_caps(self) -> Caps:
        return self.caps if self.caps is not None else Caps.from_env()

    def with_seed(self, seed: int) -> "QueryConfig":
        return replace(self, seed=seed)
