import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from groupform.errors import DegenerateGraphError, MetricUndefinedError, RecordError
from groupform.graph import (
    InteractionRecord,
    WeightedGraph,
    average_path_length,
    build_graph,
    degree_variance,
    dominance_penalty,
    normalize_weights,
    overall_connectivity,
    read_records,
    weighted_degree,
)


def rec(*rows):
    return [InteractionRecord.from_raw(*r) for r in rows]


def graph(n, entries):
    w = np.zeros((n, n))
    for (i, j), v in entries.items():
        w[i, j] = w[j, i] = v
    return WeightedGraph(w)


def complete(n, value=1.0):
    return WeightedGraph(value * (np.ones((n, n)) - np.eye(n)))


STAR3 = graph(3, {(0, 1): 1.0, (0, 2): 1.0})


# --- construction ------------------------------------------------------

def test_shared_code_in_same_group_links_pair():
    g = build_graph(rec(("A", "g1", "t1", "c1"), ("B", "g1", "t1", "c1")))
    assert g.weights[0, 1] == 1


def test_different_groups_never_link():
    g = build_graph(rec(("A", "g1", "t1", "c1"), ("B", "g2", "t1", "c1")))
    assert g.weights[0, 1] == 0


def test_standardization_trims_and_casefolds():
    g = build_graph(rec((" Alice ", "G1", "t1", "C1"), ("alice", "g1 ", "t2", "c2"),
                        ("BOB", "g1", "t1", "c1")))
    assert g.labels == ("alice", "bob")
    assert g.weights[0, 1] == 1


def test_code_counted_once_across_tasks():
    g = build_graph(rec(("a", "g", "t1", "c"), ("a", "g", "t2", "c"),
                        ("b", "g", "t1", "c"), ("b", "g", "t3", "c")))
    assert g.weights[0, 1] == 1


def test_pair_in_two_groups_accumulates():
    g = build_graph(rec(("a", "g1", "t", "x"), ("b", "g1", "t", "x"),
                        ("a", "g2", "t", "y"), ("b", "g2", "t", "y"), ("b", "g2", "t", "z")))
    assert g.weights[0, 1] == 2


def test_build_matches_pairwise_intersection_oracle():
    rows = [
        ("p0", "g", "t1", "c0"), ("p0", "g", "t1", "c1"), ("p0", "g", "t2", "c2"),
        ("p1", "g", "t1", "c0"), ("p1", "g", "t3", "c2"),
        ("p2", "g", "t2", "c1"), ("p2", "g", "t2", "c2"), ("p2", "g", "t1", "c0"),
        ("p3", "g", "t4", "c1"),
    ]
    people, expected = oracles.pair_weights(rows)
    g = build_graph(rec(*rows))
    assert list(g.labels) == people
    np.testing.assert_array_equal(g.weights, np.array(expected, dtype=float))
    # spot-check the oracle itself: p0 and p2 share c0, c1, c2
    assert expected[0][2] == 3


def test_build_is_permutation_invariant_with_pinned_ids():
    rng = random.Random(3)
    rows = [(f"p{rng.randrange(8)}", f"g{rng.randrange(2)}", "t", f"c{rng.randrange(5)}")
            for _ in range(60)]
    records = rec(*rows)
    base = build_graph(records)
    for _ in range(5):
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert build_graph(shuffled, participants=base.labels) == base


def test_empty_records_rejected():
    with pytest.raises(RecordError, match="no records"):
        build_graph([])


def test_empty_field_names_row():
    with pytest.raises(RecordError, match="row 2: empty field 'code'"):
        InteractionRecord.from_raw("a", "g", "t", "  ", row=2)


def test_read_records_reports_line(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("participant,group,task,code\na,g,t,c\nb,g,t\n")
    with pytest.raises(RecordError, match="line 3"):
        read_records(p)


# --- normalization -----------------------------------------------------

def test_normalize_divides_by_max():
    g = normalize_weights(graph(3, {(0, 1): 2, (0, 2): 4}))
    assert g.weights[0, 1] == 0.5 and g.weights[0, 2] == 1.0 and g.weights[1, 2] == 0


def test_normalize_equal_weights_become_one():
    g = normalize_weights(complete(4, 7.0))
    np.testing.assert_array_equal(g.weights, complete(4).weights)


def test_normalize_random_matrix_matches_recomputation():
    rng = np.random.default_rng(0)
    m = np.triu(rng.integers(0, 9, size=(6, 6)), 1).astype(float)
    m = m + m.T
    g = normalize_weights(WeightedGraph(m))
    np.testing.assert_allclose(g.weights, m / m.max(), rtol=0, atol=0)


def test_normalize_all_zero_raises():
    with pytest.raises(DegenerateGraphError, match="degenerate graph: no interactions"):
        normalize_weights(WeightedGraph(np.zeros((3, 3))))


def test_graph_rejects_asymmetric_or_loops():
    with pytest.raises(ValueError):
        WeightedGraph(np.array([[0, 1.0], [0.5, 0]]))
    with pytest.raises(ValueError):
        WeightedGraph(np.eye(2))


def test_graph_is_read_only():
    g = complete(3)
    with pytest.raises(ValueError):
        g.weights[0, 1] = 0.3


# --- metrics: frozen examples -----------------------------------------

def test_overall_connectivity_examples():
    assert overall_connectivity(complete(5)) == 1.0
    assert overall_connectivity(WeightedGraph(np.zeros((4, 4)))) == 0.0
    # pairs: (0,1)=1, (2,3)=0.5, four zeros -> 1.5 / 6
    assert overall_connectivity(graph(4, {(0, 1): 1.0, (2, 3): 0.5})) == pytest.approx(0.25, abs=1e-15)


def test_metrics_need_two_nodes():
    one = WeightedGraph(np.zeros((1, 1)))
    with pytest.raises(MetricUndefinedError, match="metric undefined"):
        overall_connectivity(one)
    with pytest.raises(MetricUndefinedError):
        average_path_length(one)


def test_weighted_degree_examples():
    g = graph(4, {(0, 1): 0.5, (1, 2): 0.25})
    assert weighted_degree(g, 3) == 0
    assert weighted_degree(complete(5), 2) == 4
    rng = np.random.default_rng(1)
    m = np.triu(rng.random((6, 6)), 1)
    g = WeightedGraph(m + m.T)
    for i in range(6):
        assert weighted_degree(g, i) == pytest.approx(sum(g.weights[i, j] for j in range(6)), abs=1e-12)
    with pytest.raises(IndexError):
        weighted_degree(g, 6)


def test_degree_variance_examples():
    assert degree_variance(complete(5)) == 0
    # star degrees {2, 1, 1}: mean 4/3, ((2/3)^2 + 2 (1/3)^2) / 3 = 2/9
    assert degree_variance(STAR3) == pytest.approx(2 / 9, abs=1e-15)


def test_degree_variance_scales_quadratically():
    rng = np.random.default_rng(2)
    for _ in range(20):
        m = np.triu(rng.random((6, 6)), 1)
        g = WeightedGraph(m + m.T)
        c = rng.uniform(0.1, 3)
        assert degree_variance(g.with_weights(c * g.weights)) == pytest.approx(c * c * degree_variance(g), rel=1e-10)


def test_average_path_length_examples():
    assert average_path_length(complete(4)) == 1.0
    assert average_path_length(graph(3, {(0, 1): 1.0, (1, 2): 1.0})) == pytest.approx(4 / 3, abs=1e-15)
    assert average_path_length(WeightedGraph(np.zeros((2, 2)))) == 2.0


def test_average_path_length_threshold_is_strict():
    g = graph(3, {(0, 1): 0.05, (1, 2): 0.06, (0, 2): 0.5})
    # 0-1 sits exactly at the threshold and is absent -> route via 2
    assert average_path_length(g, 0.05) == pytest.approx((2 + 1 + 1) / 3)


def test_dominance_penalty_examples():
    assert dominance_penalty(complete(5)) == 0
    assert dominance_penalty(STAR3) == pytest.approx(2 / 3, abs=1e-15)


def test_binary_degree_switch():
    g = graph(3, {(0, 1): 0.9, (0, 2): 0.02})
    # binarized at 0.05: degrees {1, 1, 0}
    assert degree_variance(g, weighted=False) == pytest.approx(2 / 9)
    assert dominance_penalty(g, weighted=False) == pytest.approx(1 / 3)


# --- metrics: properties -----------------------------------------------

half_steps = st.integers(2, 6).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.sampled_from([0.0, 0.5, 1.0]),
                                              min_size=n * (n - 1) // 2,
                                              max_size=n * (n - 1) // 2)))


def from_upper(n, values):
    w = np.zeros((n, n))
    w[np.triu_indices(n, 1)] = values
    return WeightedGraph(w + w.T)


@settings(max_examples=300, deadline=None)
@given(half_steps)
def test_metrics_agree_with_brute_force(case):
    n, values = case
    g = from_upper(n, values)
    w = g.weights.tolist()
    assert abs(overall_connectivity(g) - oracles.oc(w)) <= 1e-12
    assert abs(degree_variance(g) - oracles.var(w)) <= 1e-12
    assert abs(average_path_length(g, 0.05) - oracles.pl(w, 0.05)) <= 1e-12
    assert abs(dominance_penalty(g) - oracles.pd(w)) <= 1e-12
    d = g.weights.sum(axis=1)
    regular = bool(np.all(d == d[0]))
    assert (degree_variance(g) <= 1e-12) == regular
    assert (dominance_penalty(g) <= 1e-12) == regular


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 7).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.floats(0, 1), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))))
def test_metric_ranges(case):
    n, values = case
    g = from_upper(n, values)
    assert 0 <= overall_connectivity(g) <= 1
    var = degree_variance(g)
    pd = dominance_penalty(g)
    assert var >= 0 and pd >= -1e-12
    assert 1 <= average_path_length(g) <= n
    np.testing.assert_array_equal(g.weights, g.weights.T)
