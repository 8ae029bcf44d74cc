"""
Exact inference over binary edge variables by variable elimination.

Each joint probability table is a factor over its edges. For a set of
factors the engine computes the partition function (the sum over all
assignments of the factor product) with a min-degree elimination order,
and can keep the intermediate products so that assignments are drawn
exactly by backward sampling along the same order.
"""

import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InferenceBudgetExceeded

logger = logging.getLogger(__name__)


class Factor:
    """Non-negative table over binary variables; axis i indexes ``scope[i]``."""

    __slots__ = ("scope", "values")

    def __init__(self, scope: Sequence[str], values):
        self.scope = tuple(scope)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (2,) * len(self.scope):
            raise ValueError(f"factor over {len(self.scope)} variables has shape {self.values.shape}")

    @classmethod
    def scalar(cls, value: float) -> "Factor":
        return cls((), np.asarray(float(value)))

    def expand(self, scope: Sequence[str]) -> np.ndarray:
        """View of the values broadcastable against ``scope`` (a superset of ours)."""
        if not self.scope:
            return self.values.reshape((1,) * len(scope))
        order = [self.scope.index(var) for var in scope if var in self.scope]
        arranged = np.transpose(self.values, order)
        return arranged.reshape([2 if var in self.scope else 1 for var in scope])

    def multiply(self, other: "Factor") -> "Factor":
        scope = self.scope + tuple(var for var in other.scope if var not in self.scope)
        product = self.expand(scope) * other.expand(scope)
        return Factor(scope, np.broadcast_to(product, (2,) * len(scope)).copy())

    def sum_out(self, var: str) -> "Factor":
        axis = self.scope.index(var)
        return Factor(self.scope[:axis] + self.scope[axis + 1:], self.values.sum(axis=axis))

    def restrict(self, evidence: Mapping[str, int]) -> "Factor":
        if not any(var in evidence for var in self.scope):
            return self
        index = tuple(int(evidence[var]) if var in evidence else slice(None) for var in self.scope)
        scope = tuple(var for var in self.scope if var not in evidence)
        return Factor(scope, self.values[index])


def forbid_corner(scope: Sequence[str], value: int, max_scope: int) -> Factor:
    """
    Indicator that the variables in ``scope`` are NOT all equal to ``value``.

    Raises:
        InferenceBudgetExceeded: If the indicator alone exceeds the budget
    """
    if len(scope) > max_scope:
        raise InferenceBudgetExceeded(
            f"negated event over {len(scope)} edges exceeds the inference budget of {max_scope}; use sampling mode"
        )
    values = np.ones((2,) * len(scope))
    values[(int(value),) * len(scope)] = 0.0
    return Factor(scope, values)


def elimination_order(factors: Iterable[Factor]) -> List[str]:
    """Greedy min-degree order over the variables of ``factors`` (ties by name)."""
    neighbors: Dict[str, set] = {}
    for factor in factors:
        for var in factor.scope:
            neighbors.setdefault(var, set()).update(v for v in factor.scope if v != var)
    order = []
    while neighbors:
        var = min(neighbors, key=lambda v: (len(neighbors[v]), v))
        adjacent = neighbors.pop(var)
        for v in adjacent:
            neighbors[v].discard(var)
            neighbors[v].update(u for u in adjacent if u != v)
        order.append(var)
    return order


class Elimination:
    """
    One variable-elimination run over a fixed factor list.

    Attributes:
        total: Partition function of the factor product
        trace: ``(variable, product-before-summing)`` per eliminated variable
    """

    def __init__(self, factors: Sequence[Factor], max_scope: int, keep_trace: bool = False):
        pending = list(factors)
        trace: List[Tuple[str, Factor]] = []
        for var in elimination_order(pending):
            related = [f for f in pending if var in f.scope]
            pending = [f for f in pending if var not in f.scope]
            width = len({v for f in related for v in f.scope})
            if width > max_scope:
                raise InferenceBudgetExceeded(
                    f"eliminating {var!r} needs a factor over {width} edges "
                    f"(budget {max_scope}); use sampling mode"
                )
            product = related[0]
            for factor in related[1:]:
                product = product.multiply(factor)
            if keep_trace:
                trace.append((var, product))
            pending.append(product.sum_out(var))
        total = 1.0
        for factor in pending:
            total *= float(factor.values)
        self.total = total
        self.trace = trace

    def draw(self, rng: np.random.Generator, n: int) -> Dict[str, np.ndarray]:
        """Draw ``n`` joint assignments of the eliminated variables (0/1 arrays)."""
        drawn: Dict[str, np.ndarray] = {}
        for var, product in reversed(self.trace):
            arranged = np.moveaxis(product.values, product.scope.index(var), 0)
            others = [v for v in product.scope if v != var]
            if others:
                index = tuple(drawn[v] for v in others)
                w0 = arranged[0][index]
                w1 = arranged[1][index]
            else:
                w0 = np.full(n, float(arranged[0]))
                w1 = np.full(n, float(arranged[1]))
            total = w0 + w1
            p1 = np.divide(w1, total, out=np.zeros(n), where=total > 0)
            drawn[var] = (rng.random(n) < p1).astype(np.intp)
        return drawn


def partition(factors: Sequence[Factor], evidence: Optional[Mapping[str, int]], max_scope: int) -> float:
    """Sum of the factor product over assignments consistent with ``evidence``."""
    if evidence:
        factors = [factor.restrict(evidence) for factor in factors]
    return Elimination(factors, max_scope).total
