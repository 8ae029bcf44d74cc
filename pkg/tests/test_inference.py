import numpy as np
import pytest

from pgsim.exceptions import InferenceBudgetExceeded
from pgsim.inference import Elimination, Factor, elimination_order, forbid_corner, partition


def test_multiply_aligns_scopes():
    a = Factor(("x",), [0.25, 0.75])
    b = Factor(("y", "x"), [[1.0, 2.0], [3.0, 4.0]])
    product = a.multiply(b)
    assert product.scope == ("x", "y")
    assert product.values[1, 0] == pytest.approx(0.75 * 2.0)
    assert product.values[0, 1] == pytest.approx(0.25 * 3.0)


def test_sum_out_and_restrict():
    f = Factor(("x", "y"), [[0.1, 0.2], [0.3, 0.4]])
    assert f.sum_out("y").values == pytest.approx([0.3, 0.7])
    assert f.restrict({"x": 1}).values == pytest.approx([0.3, 0.4])
    assert f.restrict({"z": 0}) is f


def test_partition_of_independent_factors():
    factors = [Factor(("a",), [0.4, 0.6]), Factor(("b",), [0.3, 0.7])]
    assert partition(factors, None, max_scope=4) == pytest.approx(1.0)
    assert partition(factors, {"a": 1, "b": 1}, max_scope=4) == pytest.approx(0.42)


def test_forbid_corner():
    f = forbid_corner(("a", "b"), 1, max_scope=4)
    assert f.values[1, 1] == 0.0
    assert f.values.sum() == 3.0
    with pytest.raises(InferenceBudgetExceeded):
        forbid_corner(("a", "b", "c"), 0, max_scope=2)


def test_min_degree_order():
    chain = [Factor(("a", "b"), np.ones((2, 2))), Factor(("b", "c"), np.ones((2, 2)))]
    order = elimination_order(chain)
    assert order[0] in ("a", "c")
    assert sorted(order) == ["a", "b", "c"]


def test_budget():
    wide = Factor(("a", "b", "c"), np.full((2, 2, 2), 0.125))
    with pytest.raises(InferenceBudgetExceeded):
        Elimination([wide], max_scope=2)


def test_backward_sampling_matches_joint():
    joint = Factor(("a", "b"), [[0.1, 0.3], [0.2, 0.4]])
    engine = Elimination([joint], max_scope=4, keep_trace=True)
    drawn = engine.draw(np.random.default_rng(0), 50_000)
    both = (drawn["a"] == 1) & (drawn["b"] == 1)
    assert both.mean() == pytest.approx(0.4, abs=0.01)
    assert (drawn["a"] == 0).mean() == pytest.approx(0.4, abs=0.01)
