import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_fronts, rank_then_pearson
from tinyformula import pareto
from tinyformula.arch import ScalingCoefficients
from tinyformula.search import ExperimentRecord


def make(points, coeffs=None):
    out = []
    for i, (flops, acc) in enumerate(points):
        c = coeffs[i] if coeffs else ScalingCoefficients(1, 1, 1)
        out.append(ExperimentRecord(f"x{i:04d}", c, int(flops), 1, flops / 1000, acc))
    return out


def random_population(rng, n, ties):
    if ties:
        flops = rng.integers(1, 20, size=n)
        acc = rng.integers(0, 10, size=n) / 10
    else:
        flops = rng.integers(1, 10**6, size=n)
        acc = rng.random(n)
    return list(zip(flops.tolist(), acc.tolist()))


@pytest.mark.parametrize("seed", range(50))
def test_fronts_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 300)) if seed % 10 else 1000
    points = random_population(rng, n, ties=seed % 2 == 0)
    assert pareto.front_ranks(make(points)).tolist() == brute_force_fronts(points)


def test_nondominated_sort_partitions(demo_records):
    fronts = pareto.nondominated_sort(demo_records)
    ids = [r.id for f in fronts for r in f]
    assert sorted(ids) == sorted(r.id for r in demo_records)
    for better, worse in zip(fronts, fronts[1:]):
        for w in worse:
            assert any(pareto.dominates(b, w) for b in better)


def test_demo_selects_exactly_twenty(demo_records):
    front = pareto.select_frontier(demo_records, 0.20)
    assert len(front) == 20
    assert len(set(front.members)) == 20


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.floats(0.01, 1.0), st.integers(0, 2**32 - 1))
def test_selection_size(n, fraction, seed):
    points = random_population(np.random.default_rng(seed), n, ties=seed % 2 == 0)
    front = pareto.select_frontier(make(points), fraction)
    assert len(front) == math.ceil(fraction * n - 1e-9)


def test_selection_prefers_better_fronts(demo_records):
    front = pareto.select_frontier(demo_records, 0.3)
    worst_chosen = max(front.fronts[i] for i in front.members)
    unchosen = [r.id for r in demo_records if r.id not in front]
    assert all(front.fronts[i] >= worst_chosen for i in unchosen)


def test_selection_invariant_under_monotone_transform(demo_records):
    base = pareto.select_frontier(demo_records, 0.2)
    squashed = [
        ExperimentRecord(r.id, r.coeffs, r.flops * 3 + 7, r.params, r.ratio,
                         r.accuracy ** 3)
        for r in demo_records
    ]
    assert set(pareto.select_frontier(squashed, 0.2).members) == set(base.members)


def test_selection_independent_of_input_order(demo_records):
    rng = np.random.default_rng(1)
    shuffled = [demo_records[i] for i in rng.permutation(len(demo_records))]
    a = pareto.select_frontier(demo_records, 0.2)
    b = pareto.select_frontier(shuffled, 0.2)
    assert a.members == b.members


def test_crowding_boundaries_infinite():
    front = make([(10, 0.1), (20, 0.2), (30, 0.3), (40, 0.4)])
    dist = pareto.crowding_distance(front)
    assert np.isinf(dist[0]) and np.isinf(dist[-1])
    assert np.isfinite(dist[1:-1]).all()


def test_dominance():
    a, b, c = make([(10, 0.5), (20, 0.5), (10, 0.5)])
    assert pareto.dominates(a, b)
    assert not pareto.dominates(b, a)
    assert not pareto.dominates(a, c)


def test_select_rejects_bad_input(demo_records):
    with pytest.raises(ValueError):
        pareto.select_frontier([], 0.2)
    with pytest.raises(ValueError):
        pareto.select_frontier(demo_records, 0.0)


@pytest.mark.parametrize("seed", range(100))
def test_spearman_matches_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(3, 60))
    if seed % 3 == 0:
        xs = rng.integers(0, 5, size=n).astype(float)
        ys = rng.integers(0, 4, size=n).astype(float)
    else:
        xs, ys = rng.normal(size=n), rng.normal(size=n)
        ys = ys + 0.5 * xs
    expected = rank_then_pearson(xs.tolist(), ys.tolist())
    got = pareto.spearman(xs, ys)
    if expected is None:
        assert got is None
    else:
        assert abs(got - expected) <= 1e-12


def test_spearman_degenerate():
    assert pareto.spearman([1, 1, 1], [1, 2, 3]) is None
    assert pareto.spearman([1, 2, 3], [2, 4, 9]) == 1.0
    with pytest.raises(ValueError):
        pareto.spearman([1, 2], [1, 2, 3])


def test_frontier_csv_round_trip(demo_records):
    front = pareto.select_frontier(demo_records, 0.2)
    text = pareto.frontier_csv(front, demo_records)
    assert pareto.read_frontier_ids(text) == list(front.members)
    assert text.splitlines()[0] == "id,front,r,d,w,ratio,accuracy"


def test_frontier_stats_keys(demo_records):
    front = pareto.select_frontier(demo_records, 0.2)
    stats = pareto.frontier_stats(front, demo_records)
    assert set(stats) == {"spearman_r", "spearman_d", "spearman_w"}
    assert all(-1 <= v <= 1 for v in stats.values())
