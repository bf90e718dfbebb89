import numpy as np
import pytest

from conftest import load_benchmark
from gtsp_lk.instance import weight_of_tour
from gtsp_lk.local_search import (AdaptationOption, nearest_neighbour, three_opt, three_opt_moves,
                                  two_opt)
from gtsp_lk.oracles import random_instance
from gtsp_lk.tour import cluster_optimize, is_feasible, local_optimize, random_tour


def two_opt_neighbours(t):
    m = len(t)
    for i in range(m - 2):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            yield i, j, t[:i + 1] + t[j:i:-1] + t[j + 1:]


def test_nn_on_fixture(g5):
    tour = nearest_neighbour(g5, 1)
    assert tour.vertices == (0, 2, 3, 4, 1)  # 1 3 4 5 2
    assert tour.weight == 2


@pytest.mark.parametrize("r", [0, 6])
def test_nn_run_number_out_of_range(g5, r):
    with pytest.raises(ValueError, match="run number"):
        nearest_neighbour(g5, r)


def test_nn_two_clusters(rng):
    inst = random_instance(rng, 2, 3)
    for r in (1, 2):
        tour = nearest_neighbour(inst, r)
        assert len(tour.vertices) == 2
        assert is_feasible(inst, tour.vertices)


def test_nn_att48_lower_bounded_by_best_known():
    inst, _ = load_benchmark("10att48")
    for r in range(1, 11):
        tour = nearest_neighbour(inst, r)
        assert is_feasible(inst, tour.vertices)
        assert tour.weight >= 5394
        assert tour.vertices[0] == inst.clusters[r - 1][0]


def test_option_table():
    assert [(o.quick, o.slow) for o in AdaptationOption] == [
        ("I", "I"), ("I", "CO"), ("L", "I"), ("L", "CO"), ("CO", "I")]
    assert AdaptationOption(2).suffix == "B-co"


def test_opt1_output_is_two_exchange_optimal():
    rng = np.random.default_rng(21)
    for _ in range(40):
        inst = random_instance(rng, int(rng.integers(4, 9)), 3)
        out = two_opt(inst, random_tour(inst, rng), AdaptationOption.OPT1)
        t = list(out.vertices)
        for _, _, cand in two_opt_neighbours(t):
            assert weight_of_tour(inst, cand) >= out.weight


def test_opt5_output_is_optimal_over_co_neighbourhood():
    rng = np.random.default_rng(22)
    for _ in range(60):
        inst = random_instance(rng, int(rng.integers(4, 7)), 2)
        start = random_tour(inst, rng)
        out = two_opt(inst, start, AdaptationOption.OPT5)
        assert out.weight <= start.weight
        t = list(out.vertices)
        best = min(cluster_optimize(inst, cand).weight for _, _, cand in two_opt_neighbours(t))
        assert best >= out.weight


def test_co_l_raw_dominance_for_one_exchange():
    rng = np.random.default_rng(23)
    for _ in range(100):
        inst = random_instance(rng, 7, 3)
        t = list(random_tour(inst, rng).vertices)
        cof = inst.cluster_of
        for i, j, cand in two_opt_neighbours(t):
            touched = {cof[t[i + 1]], cof[t[j]]}
            raw = weight_of_tour(inst, cand)
            local = local_optimize(inst, cand, touched).weight
            assert cluster_optimize(inst, cand).weight <= local <= raw


@pytest.mark.parametrize("search", [two_opt, three_opt])
@pytest.mark.parametrize("option", list(AdaptationOption))
def test_every_option_preserves_feasibility(search, option):
    rng = np.random.default_rng(24 + option)
    for _ in range(10):
        inst = random_instance(rng, int(rng.integers(3, 8)), 3)
        start = random_tour(inst, rng)
        out = search(inst, start, option)
        assert is_feasible(inst, out.vertices)
        assert out.weight == weight_of_tour(inst, out.vertices)
        assert out.weight <= start.weight


def test_three_opt_reconnections():
    t = list(range(8))
    moves = dict(three_opt_moves(t, 1, 3, 5))
    assert len(moves) == 7
    assert moves["B'C"] == [0, 1, 3, 2, 4, 5, 6, 7]
    assert moves["CB"] == [0, 1, 4, 5, 2, 3, 6, 7]
    assert moves["C'B'"] == [0, 1, 5, 4, 3, 2, 6, 7]
    assert all(sorted(v) == t for v in moves.values())
    assert len({tuple(v) for v in moves.values()}) == 7


def test_three_opt_is_no_worse_than_two_opt_neighbourhood():
    rng = np.random.default_rng(25)
    for _ in range(20):
        inst = random_instance(rng, 6, 2)
        out = three_opt(inst, random_tour(inst, rng), AdaptationOption.OPT1)
        for _, _, cand in two_opt_neighbours(list(out.vertices)):
            assert weight_of_tour(inst, cand) >= out.weight


@pytest.mark.parametrize("search", [two_opt, three_opt])
def test_asymmetric_input_is_rejected(search):
    rng = np.random.default_rng(26)
    inst = random_instance(rng, 5, 2, symmetric=False)
    with pytest.raises(ValueError, match="symmetric"):
        search(inst, random_tour(inst, rng))


def test_two_opt_is_deterministic():
    inst, _ = load_benchmark("11eil51")
    start = nearest_neighbour(inst, 2)
    assert two_opt(inst, start, 2) == two_opt(inst, start, 2)
