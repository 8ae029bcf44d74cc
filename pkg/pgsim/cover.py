"""
Weighted set cover over relaxed queries.

The upper-bound instance attaches UpperB(f) to the set of relaxed queries
containing f and is solved greedily. The lower-bound instance attaches the
pair (LowerB(f), UpperB(f)) to the set of relaxed queries contained in f;
its quadratic objective

    sum_i x_i wL_i - sum_{i<j} x_i x_j wU_i wU_j

is relaxed to [0, 1], maximized by multi-start projected gradient ascent
under the coverage constraints, and rounded randomly.
"""

import logging
import math
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

QP_STARTS = 8
QP_ITERATIONS = 500
QP_STEP = 0.05
_GAMMA_TOLERANCE = 1e-15


@dataclass(frozen=True)
class CoverInstance:
    """
    Attributes:
        universe: Relaxed-query indices to cover
        sets: Subsets of the universe, one per feature
        labels: Feature id of each set
        upper: UpperB weight of each set
        lower: LowerB weight of each set (lower-bound instances only)

    Raises:
        InvalidParameterError: On empty sets, weights outside [0, 1] or
                               elements outside the universe
    """

    universe: Tuple[int, ...]
    sets: Tuple[FrozenSet[int], ...]
    labels: Tuple[str, ...]
    upper: Tuple[float, ...]
    lower: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        n = len(self.sets)
        if len(self.labels) != n or len(self.upper) != n or (self.lower is not None and len(self.lower) != n):
            raise InvalidParameterError("cover instance needs one label and weight per set")
        universe = set(self.universe)
        for position, members in enumerate(self.sets):
            if not members:
                raise InvalidParameterError(f"set {position} is empty")
            if not members <= universe:
                raise InvalidParameterError(f"set {position} has elements outside the universe")
        for weights in (self.upper, self.lower or ()):
            if any(not 0.0 <= w <= 1.0 for w in weights):
                raise InvalidParameterError("set weights must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.sets)

    def coverable(self) -> FrozenSet[int]:
        return frozenset().union(*self.sets) if self.sets else frozenset()

    def uncovered(self) -> Tuple[int, ...]:
        """Universe elements in no set."""
        reach = self.coverable()
        return tuple(u for u in self.universe if u not in reach)

    def is_feasible(self) -> bool:
        return not self.uncovered()


@dataclass(frozen=True)
class CoverSolution:
    value: float
    chosen: Tuple[int, ...]


@dataclass(frozen=True)
class QpSolution:
    """
    Attributes:
        x: Best fractional point found
        objective: Relaxed objective at x
        dropped: Universe elements whose coverage constraint was dropped
    """

    x: Tuple[float, ...]
    objective: float
    dropped: Tuple[int, ...] = ()


@dataclass(frozen=True)
class Rounding:
    chosen: Tuple[int, ...]
    l_sim: float
    covered: bool
    rounds: int


def greedy_cover_upper(instance: CoverInstance) -> Optional[CoverSolution]:
    """
    Greedy weighted set cover.

    Repeatedly picks the set minimizing w(s) / |s - A| (ties to the lower
    set index) until the universe is covered.

    Returns:
        CoverSolution with the weight sum of the chosen sets, or None when
        the sets cannot cover the universe

    Examples:
        >>> inst = CoverInstance((0, 1, 2), ({0, 1}, {1, 2}, {0, 2}), ("f1", "f2", "f3"), (0.4, 0.1, 0.5))
        >>> greedy_cover_upper(inst)
        CoverSolution(value=0.5, chosen=(1, 0))
    """
    if not instance.is_feasible():
        return None
    target = set(instance.universe)
    covered: set = set()
    chosen: List[int] = []
    total = 0.0
    while not target <= covered:
        best, best_gamma = None, math.inf
        for j, members in enumerate(instance.sets):
            gain = len(members - covered)
            if gain == 0:
                continue
            gamma = instance.upper[j] / gain
            if gamma < best_gamma - _GAMMA_TOLERANCE:
                best, best_gamma = j, gamma
        chosen.append(best)
        covered |= instance.sets[best]
        total += instance.upper[best]
    return CoverSolution(total, tuple(chosen))


def lower_objective(x: Sequence[float], lower: Sequence[float], upper: Sequence[float]) -> float:
    """Quadratic lower-bound objective with the penalty over unordered pairs i < j."""
    x = np.asarray(x, dtype=float)
    wl = np.asarray(lower, dtype=float)
    wu = np.asarray(upper, dtype=float)
    scaled = x * wu
    return float(x @ wl - (scaled.sum() ** 2 - (scaled ** 2).sum()) / 2.0)


def _gradient(x: np.ndarray, wl: np.ndarray, wu: np.ndarray) -> np.ndarray:
    scaled = x * wu
    return wl - wu * (scaled.sum() - scaled)


def _project(x: np.ndarray, constraints: List[np.ndarray]) -> np.ndarray:
    # Raising entries never breaks another constraint, so one pass suffices.
    x = np.clip(x, 0.0, 1.0)
    for members in constraints:
        deficit = 1.0 - x[members].sum()
        while deficit > 1e-12:
            free = members[x[members] < 1.0]
            if free.size == 0:
                break
            raise_by = min(deficit / free.size, float((1.0 - x[free]).min()))
            x[free] += raise_by
            deficit = 1.0 - x[members].sum()
    return x


def solve_relaxed_qp(
    instance: CoverInstance,
    starts: int = QP_STARTS,
    iterations: int = QP_ITERATIONS,
    step: float = QP_STEP,
) -> QpSolution:
    """
    Maximize the relaxed lower-bound objective over [0, 1]^|S| with coverage.

    Projected gradient ascent from ``starts`` deterministic points (all ones,
    all one half, then uniform draws seeded 2, 3, ...); every iterate is
    feasible and the best one is returned. Elements covered by no set have
    their constraint dropped.

    Raises:
        InvalidParameterError: If the instance has no sets or no lower weights

    Examples:
        >>> inst = CoverInstance((0, 1, 2), ({0}, {0, 1, 2}), ("f1", "f2"), (0.36, 0.15), (0.28, 0.08))
        >>> round(solve_relaxed_qp(inst).objective, 3)
        0.306
    """
    if not instance.sets:
        raise InvalidParameterError("relaxed program needs at least one set")
    if instance.lower is None:
        raise InvalidParameterError("relaxed program needs lower weights")
    n = len(instance)
    wl = np.asarray(instance.lower, dtype=float)
    wu = np.asarray(instance.upper, dtype=float)
    dropped = instance.uncovered()
    if dropped:
        logger.debug("coverage constraints dropped for relaxed queries %s", list(dropped))
    constraints = [
        np.array([j for j, members in enumerate(instance.sets) if u in members], dtype=np.intp)
        for u in instance.universe
        if u not in dropped
    ]

    initial = [np.ones(n), np.full(n, 0.5)]
    initial += [np.random.default_rng(k).random(n) for k in range(2, starts)]
    best_x, best_value = None, -math.inf
    for x in initial[:starts]:
        x = _project(x, constraints)
        for _ in range(iterations):
            value = lower_objective(x, wl, wu)
            if value > best_value:
                best_x, best_value = x.copy(), value
            x = _project(x + step * _gradient(x, wl, wu), constraints)
        value = lower_objective(x, wl, wu)
        if value > best_value:
            best_x, best_value = x.copy(), value
    return QpSolution(tuple(float(v) for v in best_x), best_value, dropped)


def randomized_round(x: Sequence[float], instance: CoverInstance, seed: int) -> Rounding:
    """
    Round a fractional solution.

    Runs max(1, ceil(2 ln|U|)) rounds; each round adds set i with
    probability x_i. The bound is recomputed from the chosen sets and
    clamped to [0, 1].

    Examples:
        >>> inst = CoverInstance((0, 1, 2), ({0}, {0, 1, 2}), ("f1", "f2"), (0.36, 0.15), (0.28, 0.08))
        >>> round(randomized_round((1.0, 1.0), inst, seed=0).l_sim, 3)
        0.306
    """
    if instance.lower is None:
        raise InvalidParameterError("rounding needs lower weights")
    probabilities = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    if probabilities.shape != (len(instance),):
        raise InvalidParameterError(f"expected {len(instance)} values, got {probabilities.shape}")
    universe_size = len(instance.universe)
    rounds = max(1, math.ceil(2.0 * math.log(universe_size))) if universe_size else 1
    rng = np.random.default_rng(seed)
    picked = np.zeros(len(instance), dtype=bool)
    for _ in range(rounds):
        picked |= rng.random(len(instance)) < probabilities
    chosen = tuple(int(i) for i in np.flatnonzero(picked))
    value = 0.0
    if chosen:
        indicator = picked.astype(float)
        value = min(1.0, max(0.0, lower_objective(indicator, instance.lower, instance.upper)))
    reach = set().union(*(instance.sets[i] for i in chosen)) if chosen else set()
    covered = instance.coverable() <= reach
    return Rounding(chosen, value, covered, rounds)
