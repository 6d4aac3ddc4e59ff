import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupform.clustering import (
    ClusterAssignment,
    ClusterConfig,
    cluster,
    occupancy_constrained_clustering,
    validate_assignment,
    weight_greedy_constrained_clustering,
)
from groupform.errors import CapacityExceededError, GroupFormError
from groupform.graph import WeightedGraph


class FixedOrder:
    """Stands in for a generator whose shuffle/permutation yields a given order."""

    def __init__(self, order):
        self.order = list(order)

    def permutation(self, n):
        assert n == len(self.order)
        return np.array(self.order)

    def shuffle(self, seq):
        seq[:] = self.order


def simulate_occupancy(order, k, cap):
    """Independent restatement of the least-occupied rule."""
    sizes = [0] * k
    for _ in order:
        candidates = [c for c in range(k) if sizes[c] < cap]
        smallest = min(sizes[c] for c in candidates)
        sizes[next(c for c in candidates if sizes[c] == smallest)] += 1
    return sizes


def test_five_into_two_with_cap_three():
    a = occupancy_constrained_clustering(range(5), ClusterConfig(2, 3), np.random.default_rng(0))
    assert sorted(a.sizes()) == [2, 3]


def test_forty_eight_into_ten():
    cfg = ClusterConfig(10, 5)
    a = occupancy_constrained_clustering(range(48), cfg, np.random.default_rng(1))
    assert a.sizes() == simulate_occupancy(range(48), 10, 5)
    assert sorted(a.sizes(), reverse=True) == [5] * 8 + [4] * 2
    assert sorted(a.assignment) == list(range(48))
    assert validate_assignment(a, cfg, 48) == (True, [])


def test_tie_break_lowest_index_and_order():
    a = occupancy_constrained_clustering(range(4), ClusterConfig(3, 2), FixedOrder([2, 0, 3, 1]))
    assert a.assignment == {2: 0, 0: 1, 3: 2, 1: 0}


def test_full_cluster_closed():
    # k=2, cap=2, n=3: the third participant must land in cluster 0 (both have 1)
    a = occupancy_constrained_clustering(range(3), ClusterConfig(2, 2), FixedOrder([0, 1, 2]))
    assert a.sizes() == [2, 1]


def test_default_cap_is_ceiling():
    assert ClusterConfig(10).resolved_cap(48) == 5
    assert ClusterConfig(4).resolved_cap(8) == 2


def test_infeasible_capacity():
    with pytest.raises(CapacityExceededError, match="capacity exceeded"):
        occupancy_constrained_clustering(range(11), ClusterConfig(2, 5), np.random.default_rng(0))
    with pytest.raises(CapacityExceededError):
        weight_greedy_constrained_clustering(WeightedGraph(np.zeros((7, 7))), ClusterConfig(3, 2),
                                             np.random.default_rng(0))


def test_config_validation():
    with pytest.raises(GroupFormError):
        ClusterConfig(0)
    with pytest.raises(GroupFormError):
        ClusterConfig(2, 0)
    with pytest.raises(GroupFormError):
        ClusterConfig(2, strategy="spectral")


def two_cliques():
    w = np.zeros((6, 6))
    for block in ((0, 1, 2), (3, 4, 5)):
        for i, j in itertools.combinations(block, 2):
            w[i, j] = w[j, i] = 1.0
    return WeightedGraph(w)


def test_weight_greedy_keeps_cliques_for_every_order():
    g = two_cliques()
    cfg = ClusterConfig(2, 3, strategy="weight_greedy")
    for order in itertools.permutations(range(6)):
        a = weight_greedy_constrained_clustering(g, cfg, FixedOrder(order))
        groups = sorted(sorted(m) for m in a.groups())
        assert groups == [[0, 1, 2], [3, 4, 5]], order


def test_weight_greedy_singletons():
    g = WeightedGraph(np.zeros((5, 5)))
    cfg = ClusterConfig(5, 1, strategy="weight_greedy")
    a = weight_greedy_constrained_clustering(g, cfg, np.random.default_rng(3))
    assert sorted(a.assignment.values()) == list(range(5))


def test_weight_greedy_random_graph_valid():
    rng = np.random.default_rng(4)
    for seed in range(20):
        m = np.triu(rng.random((8, 8)), 1)
        g = WeightedGraph(m + m.T)
        cfg = ClusterConfig(3, seed=seed, strategy="weight_greedy")
        ok, reasons = validate_assignment(cluster(g, cfg), cfg, 8)
        assert ok, reasons


def test_validate_reports_reasons():
    cfg = ClusterConfig(2, 2)
    good = ClusterAssignment({0: 0, 1: 1, 2: 0}, 2)
    assert validate_assignment(good, cfg, 3) == (True, [])
    ok, reasons = validate_assignment(good, cfg, 3, pairs=[(0, 0), (1, 1), (2, 0), (1, 0)])
    assert not ok and any("double assignment" in r for r in reasons)
    ok, reasons = validate_assignment(ClusterAssignment({0: 0, 1: 0, 2: 0}, 2), cfg, 3)
    assert not ok and any("cap exceeded" in r for r in reasons)
    ok, reasons = validate_assignment(ClusterAssignment({0: 0, 1: 1}, 2), cfg, 3)
    assert not ok and any("unassigned" in r for r in reasons)
    ok, reasons = validate_assignment(ClusterAssignment({0: 0, 1: 1, 2: 5}, 2), cfg, 3)
    assert not ok and any("out of range" in r for r in reasons)


def test_same_seed_same_assignment():
    g = WeightedGraph(np.zeros((20, 20)))
    for strategy in ("occupancy", "weight_greedy"):
        cfg = ClusterConfig(4, seed=9, strategy=strategy)
        assert cluster(g, cfg) == cluster(g, cfg)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 60), st.integers(1, 12), st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_occupancy_invariants(n, k, slack, seed):
    cap = -(-n // k) + slack
    cfg = ClusterConfig(k, cap, seed)
    a = cluster(WeightedGraph(np.zeros((n, n))), cfg)
    ok, reasons = validate_assignment(a, cfg, n)
    assert ok, reasons
    sizes = a.sizes()
    assert sum(sizes) == n and max(sizes) <= cap
    if k * cap >= n + k:
        assert max(sizes) - min(sizes) <= 1
    other = cluster(WeightedGraph(np.zeros((n, n))), ClusterConfig(k, cap, seed + 1))
    assert Counter(sizes) == Counter(other.sizes())
