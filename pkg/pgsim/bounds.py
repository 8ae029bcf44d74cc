"""
Subgraph isomorphism probability (SIP) of a feature and its bound pair.

For a feature f and a probabilistic graph g:

* the lower bound picks pairwise edge-disjoint embeddings and combines
  their conditionals Pr(embedding present | overlapping embeddings absent)
  as 1 - prod(1 - p);
* the upper bound does the same over the minimal embedding cuts with
  Pr(cut realized | overlapping cuts not realized), giving prod(1 - p).

The member set is the maximum-weight clique of the compatibility graph
under weights -ln(1 - p) (``tighten=True``) or the first-fit disjoint set
in canonical member order (``tighten=False``).

Both bounds are sandwich-sound for product-form tables; for correlated
tables they are computed the same way and audited against the oracle.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .clique import CompatibilityGraph, max_weight_clique
from .config import PROBABILITY_CLAMP, Caps, SamplingParams, derive_seed
from .exceptions import (
    CutFamilyIncomplete,
    EstimationError,
    FeatureNotEmbeddedError,
    InferenceBudgetExceeded,
    InvalidParameterError,
    UndefinedConditionalError,
)
from .graph import DetGraph, capped_edge_images, edge_set_key, subgraph_iso_exists
from .model import EdgeEvent, ProbGraph, cond_prob, sample_worlds, world_matrix

logger = logging.getLogger(__name__)

_DEFAULT_CAPS = Caps()

MODES = ("exact", "sample")


class FamilyKind(str, Enum):
    EMBEDDING = "embedding"
    CUT = "cut"


@dataclass(frozen=True)
class EventFamily:
    """
    Embedding edge images or minimal embedding cuts of one feature in one graph.

    Attributes:
        kind: EMBEDDING (event: all edges present) or CUT (all edges absent)
        members: Distinct edge sets in canonical order
        overlaps: For member i, the indices of the members sharing an edge with it
        truncated: True when the embedding cap cut enumeration short
    """

    kind: FamilyKind
    members: Tuple[FrozenSet[str], ...]
    overlaps: Tuple[Tuple[int, ...], ...]
    truncated: bool = False

    @classmethod
    def from_members(cls, kind: FamilyKind, members, truncated: bool = False) -> "EventFamily":
        ordered = tuple(sorted({frozenset(m) for m in members}, key=edge_set_key))
        overlaps = tuple(
            tuple(j for j, other in enumerate(ordered) if j != i and member & other)
            for i, member in enumerate(ordered)
        )
        return cls(FamilyKind(kind), ordered, overlaps, truncated)

    def __len__(self) -> int:
        return len(self.members)

    def event(self, i: int) -> EdgeEvent:
        if self.kind is FamilyKind.EMBEDDING:
            return EdgeEvent.present(self.members[i])
        return EdgeEvent.absent(self.members[i])

    def conditioning(self, i: int) -> List[EdgeEvent]:
        """Events asserted not to hold when conditioning member i."""
        return [self.event(j) for j in self.overlaps[i]]


@dataclass
class BoundPair:
    lower: float
    upper: float
    metadata: Dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "metadata": self.metadata}

    @classmethod
    def from_dict(cls, data: dict) -> "BoundPair":
        return cls(float(data["lower"]), float(data["upper"]), dict(data.get("metadata", {})))


def minimal_transversals(family: Sequence[FrozenSet[str]], cap: Optional[int] = None) -> List[FrozenSet[str]]:
    """
    All minimal hitting sets of ``family``, in canonical order.

    Sets are added one at a time; each partial transversal that misses the
    new set branches on that set's edges, then non-minimal results are
    filtered out.

    Raises:
        CutFamilyIncomplete: If the partial family grows beyond ``cap``

    Examples:
        >>> [sorted(t) for t in minimal_transversals([frozenset({"e1", "e2"}), frozenset({"e2", "e3"})])]
        [['e2'], ['e1', 'e3']]
    """
    limit = _DEFAULT_CAPS.cuts if cap is None else cap
    sets = sorted({frozenset(s) for s in family}, key=edge_set_key)
    if not sets or any(not s for s in sets):
        return []
    transversals: List[FrozenSet[str]] = [frozenset()]
    for edge_set in sets:
        grown = set()
        for partial in transversals:
            if partial & edge_set:
                grown.add(partial)
            else:
                grown.update(partial | {eid} for eid in edge_set)
        transversals = _minimal(grown)
        if len(transversals) > limit:
            raise CutFamilyIncomplete(f"more than {limit} minimal embedding cuts")
    return transversals


def _minimal(sets) -> List[FrozenSet[str]]:
    kept: List[FrozenSet[str]] = []
    for candidate in sorted(sets, key=edge_set_key):
        if not any(smaller <= candidate for smaller in kept):
            kept.append(candidate)
    return kept


def _images(f: DetGraph, g: ProbGraph, caps: Caps) -> Tuple[Tuple[FrozenSet[str], ...], bool]:
    return capped_edge_images(f, g.skeleton, caps.embeddings, caps.vertex_maps)


def build_event_family(f: DetGraph, g: ProbGraph, kind: FamilyKind, caps: Optional[Caps] = None) -> EventFamily:
    """
    Build the embedding or minimal-cut family of ``f`` in ``g``'s skeleton.

    Args:
        f: Feature pattern
        g: Probabilistic graph
        kind: FamilyKind.EMBEDDING or FamilyKind.CUT
        caps: Embedding and cut caps

    Returns:
        EventFamily; an embedding family past the cap is truncated (and
        flagged), a cut family is always complete

    Raises:
        FeatureNotEmbeddedError: If f has no embedding in the skeleton
        CutFamilyIncomplete: If the cut family cannot be enumerated completely
    """
    caps = caps or _DEFAULT_CAPS
    kind = FamilyKind(kind)
    images, truncated = _images(f, g, caps)
    if not images:
        raise FeatureNotEmbeddedError(f"feature has no embedding in graph {g.graph_id!r}")
    if kind is FamilyKind.EMBEDDING:
        return EventFamily.from_members(kind, images, truncated)
    if truncated:
        raise CutFamilyIncomplete(
            f"embedding enumeration in graph {g.graph_id!r} hit its cap; cuts need every embedding"
        )
    return EventFamily.from_members(kind, minimal_transversals(images, caps.cuts))


def exact_sip(f: DetGraph, g: ProbGraph, cap: Optional[int] = None) -> float:
    """
    Probability that a random world of ``g`` contains ``f``, by enumeration.

    Raises:
        OracleScaleError: If g is beyond the oracle cap

    Examples:
        >>> from pgsim.fixtures import fix_b
        >>> path = DetGraph([("a", "A"), ("b", "A"), ("c", "A")],
        ...                 [("x1", "a", "b", "x"), ("x2", "b", "c", "x")])
        >>> round(exact_sip(path, fix_b()), 9)
        0.5
    """
    worlds, weights = world_matrix(g, cap)
    if not subgraph_iso_exists(f, g.skeleton):
        return 0.0
    total = 0.0
    for row, weight in zip(worlds, weights):
        if weight <= 0.0 or row.sum() < f.size:
            continue
        present = [eid for eid, bit in zip(g.edge_ids, row) if bit]
        if subgraph_iso_exists(f, g.skeleton.realize(present)):
            total += float(weight)
    return min(1.0, total)


def estimate_cond(g: ProbGraph, family: EventFamily, i: int, m: int, seed: int) -> float:
    """
    Sampled Pr(member i's event | no overlapping member's event).

    Draws m worlds from g; n2 counts those where no overlapping event holds
    and n1 those among them where member i's event holds.

    Raises:
        EstimationError: If no sampled world satisfied the condition
        InvalidParameterError: If m < 1 or i is out of range
    """
    if m < 1:
        raise InvalidParameterError(f"sample count must be >= 1, got {m}")
    if not 0 <= i < len(family):
        raise InvalidParameterError(f"member index {i} out of range for {len(family)} members")
    worlds = sample_worlds(g, m, seed)
    condition = np.ones(m, dtype=bool)
    for ev in family.conditioning(i):
        condition &= ~ev.holds(worlds, g.columns)
    n2 = int(condition.sum())
    if n2 == 0:
        raise EstimationError(f"no sampled world of {g.graph_id!r} avoided the overlapping members")
    n1 = int((condition & family.event(i).holds(worlds, g.columns)).sum())
    return n1 / n2


def _conditional(
    g: ProbGraph, family: EventFamily, i: int, mode: str, params: SamplingParams, stream: str, notes: Dict
) -> float:
    """Member conditional with fallbacks; notes counts how each was obtained."""
    target, given = family.event(i), family.conditioning(i)
    seed = derive_seed(params.seed, stream, i)
    if mode == "exact":
        try:
            p = cond_prob(g, target, given)
            notes["exact"] = notes.get("exact", 0) + 1
            return p
        except UndefinedConditionalError:
            notes["zero_conditioning"] = notes.get("zero_conditioning", 0) + 1
            return 0.0
        except InferenceBudgetExceeded:
            logger.debug("conditional of member %d on %s is out of budget, sampling", i, g.graph_id)
    try:
        p = estimate_cond(g, family, i, params.sample_count(), seed)
        notes["sampled"] = notes.get("sampled", 0) + 1
        return p
    except EstimationError:
        pass
    try:
        p = cond_prob(g, target, given)
        notes["exact"] = notes.get("exact", 0) + 1
        return p
    except (UndefinedConditionalError, InferenceBudgetExceeded):
        notes["zero_conditioning"] = notes.get("zero_conditioning", 0) + 1
        return 0.0


def _select(family: EventFamily, weights: Sequence[float], tighten: bool, caps: Caps) -> Tuple[Tuple[int, ...], float, bool]:
    if tighten:
        result = max_weight_clique(CompatibilityGraph.from_members(family.members, weights), caps.clique_nodes)
        return result.nodes, result.weight, result.optimal
    chosen: List[int] = []
    for i, member in enumerate(family.members):
        if all(not member & family.members[j] for j in chosen):
            chosen.append(i)
    return tuple(chosen), sum(weights[i] for i in chosen), True


def _weights(probabilities: Sequence[float]) -> List[float]:
    return [-math.log1p(-min(max(p, 0.0), PROBABILITY_CLAMP)) for p in probabilities]


def _check_mode(mode: str):
    if mode not in MODES:
        raise InvalidParameterError(f"mode must be one of {MODES}, got {mode!r}")


def _lower(
    f: DetGraph, g: ProbGraph, mode: str, params: SamplingParams, caps: Caps, tighten: bool
) -> Tuple[float, Dict]:
    family = build_event_family(f, g, FamilyKind.EMBEDDING, caps)
    meta: Dict = {"embeddings": len(family), "truncated": family.truncated}
    if any(not member for member in family.members):
        meta["certain"] = True
        return 1.0, meta
    notes: Dict = {}
    probabilities = [_conditional(g, family, i, mode, params, "lower", notes) for i in range(len(family))]
    meta["conditionals"] = notes
    if any(p >= PROBABILITY_CLAMP for p in probabilities):
        meta["saturated"] = True
        return 1.0, meta
    nodes, weight, optimal = _select(family, _weights(probabilities), tighten, caps)
    meta.update({"members": list(nodes), "optimal": optimal})
    return float(-math.expm1(-weight)), meta


def _upper(
    f: DetGraph, g: ProbGraph, mode: str, params: SamplingParams, caps: Caps, tighten: bool
) -> Tuple[float, Dict]:
    images, _ = _images(f, g, caps)
    if not images:
        raise FeatureNotEmbeddedError(f"feature has no embedding in graph {g.graph_id!r}")
    meta: Dict = {}
    if any(not image for image in images):
        meta["certain"] = True
        return 1.0, meta
    try:
        family = build_event_family(f, g, FamilyKind.CUT, caps)
    except CutFamilyIncomplete as exc:
        logger.warning("upper bound of a feature on %s falls back to 1.0: %s", g.graph_id, exc)
        meta["cut_fallback"] = str(exc)
        return 1.0, meta
    meta["cuts"] = len(family)
    notes: Dict = {}
    probabilities = [_conditional(g, family, i, mode, params, "upper", notes) for i in range(len(family))]
    meta["conditionals"] = notes
    if any(p >= PROBABILITY_CLAMP for p in probabilities):
        meta["saturated"] = True
        return 0.0, meta
    nodes, weight, optimal = _select(family, _weights(probabilities), tighten, caps)
    meta.update({"members": list(nodes), "optimal": optimal})
    return float(math.exp(-weight)), meta


def lower_bound_sip(
    f: DetGraph,
    g: ProbGraph,
    mode: str = "exact",
    params: Optional[SamplingParams] = None,
    caps: Optional[Caps] = None,
    tighten: bool = True,
) -> float:
    """
    Lower bound 1 - exp(-z) on Pr(f ⊆iso g) from disjoint embeddings.

    Args:
        f: Feature pattern embedded in g's skeleton
        g: Probabilistic graph
        mode: "exact" conditionals (sampled only past the inference budget)
              or "sample"
        params: Sample size and seed of sampled conditionals
        caps: Embedding and clique caps
        tighten: Maximum-weight clique (True) or first-fit disjoint members

    Raises:
        FeatureNotEmbeddedError: If f does not embed in the skeleton
    """
    _check_mode(mode)
    value, _ = _lower(f, g, mode, params or SamplingParams(), caps or _DEFAULT_CAPS, tighten)
    return value


def upper_bound_sip(
    f: DetGraph,
    g: ProbGraph,
    mode: str = "exact",
    params: Optional[SamplingParams] = None,
    caps: Optional[Caps] = None,
    tighten: bool = True,
) -> float:
    """
    Upper bound exp(-v) on Pr(f ⊆iso g) from disjoint minimal embedding cuts.

    Falls back to 1.0 when the cut family exceeds its cap.

    Raises:
        FeatureNotEmbeddedError: If f does not embed in the skeleton
    """
    _check_mode(mode)
    value, _ = _upper(f, g, mode, params or SamplingParams(), caps or _DEFAULT_CAPS, tighten)
    return value


def bound_pair(
    f: DetGraph,
    g: ProbGraph,
    mode: str = "exact",
    params: Optional[SamplingParams] = None,
    caps: Optional[Caps] = None,
    tighten: bool = True,
) -> Optional[BoundPair]:
    """
    Compute the PMI entry of ``f`` for ``g``.

    Returns:
        BoundPair with method metadata, or None (Absent) when f does not
        embed in g's skeleton

    Examples:
        >>> from pgsim.fixtures import fix_a
        >>> edge = DetGraph([("a", "A"), ("b", "B")], [("x1", "a", "b", "x")])
        >>> pair = bound_pair(edge, fix_a())
        >>> round(pair.lower, 9), round(pair.upper, 9)
        (0.6, 0.6)
    """
    _check_mode(mode)
    if not subgraph_iso_exists(f, g.skeleton):
        return None
    params = params or SamplingParams()
    caps = caps or _DEFAULT_CAPS
    lower, lower_meta = _lower(f, g, mode, params, caps, tighten)
    upper, upper_meta = _upper(f, g, mode, params, caps, tighten)
    metadata = {"mode": mode, "tighten": tighten, "lower": lower_meta, "upper": upper_meta}
    if lower > upper:
        logger.warning(
            "bounds of a feature in %s crossed (lower %.6f > upper %.6f); clamping lower", g.graph_id, lower, upper
        )
        metadata["crossed"] = [lower, upper]
        lower = upper
    return BoundPair(lower, upper, metadata)
