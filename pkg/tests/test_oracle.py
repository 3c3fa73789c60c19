import itertools
import math
import random

import numpy as np
import pytest

from cvrp_qptas import Instance, generate_instance, is_feasible
from cvrp_qptas.oracle import OracleBudgetError, exact_cvrp, exact_tsp
from cvrp_qptas.partition import rad, tour_cycle_length
from cvrp_qptas.solution import dist, total_length


def test_tsp_triangle():
    pts = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    order, length = exact_tsp(pts, (0.0, 0.0))
    assert length == pytest.approx(4.0)
    assert sorted(order) == [0, 1, 2]


def test_tsp_single_customer():
    assert exact_tsp([(3.0, 4.0)], (0.0, 0.0))[1] == pytest.approx(10.0)


@pytest.mark.parametrize("seed", range(4))
def test_tsp_beats_random_permutations(seed):
    inst = generate_instance(8, 8, seed=seed)
    order, length = exact_tsp(inst.points, inst.depot)
    assert tour_cycle_length(order, inst) == pytest.approx(length)
    rng = random.Random(seed)
    for _ in range(500):
        perm = list(range(8))
        rng.shuffle(perm)
        assert length <= tour_cycle_length(perm, inst) + 1e-12


def test_tsp_budget():
    with pytest.raises(OracleBudgetError):
        exact_tsp([(0.0, float(i)) for i in range(15)], (0.0, 0.0))


def test_cvrp_k_ge_n_is_tsp():
    inst = generate_instance(6, 6, seed=3)
    assert exact_cvrp(inst)[1] == pytest.approx(exact_tsp(inst.points, inst.depot)[1])


def test_cvrp_k_one_is_out_and_back():
    inst = generate_instance(6, 1, seed=3)
    expected = sum(2 * dist(p, inst.depot) for p in inst.points)
    assert exact_cvrp(inst)[1] == pytest.approx(expected)
    assert exact_cvrp(inst)[1] == pytest.approx(rad(inst.points, inst.depot, 1))


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def _brute_cvrp(inst):
    best = math.inf
    for part in _set_partitions(list(range(inst.n))):
        if any(len(b) > inst.k for b in part):
            continue
        total = 0.0
        for block in part:
            total += min(tour_cycle_length(list(p), inst) for p in itertools.permutations(block))
        best = min(best, total)
    return best


def test_cvrp_unit_square_pairs():
    inst = Instance(points=((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)), depot=(0.5, 0.5), capacity=2)
    assert exact_cvrp(inst)[1] == pytest.approx(_brute_cvrp(inst))
    assert exact_cvrp(inst)[1] == pytest.approx(2 * (1 + math.sqrt(2)))


@pytest.mark.parametrize("seed", range(5))
def test_cvrp_matches_partition_enumeration(seed):
    inst = generate_instance(6, 1 + seed % 3, "clustered" if seed % 2 else "uniform", seed)
    sol, length = exact_cvrp(inst)
    assert is_feasible(sol, inst).ok
    assert total_length(sol, inst) == pytest.approx(length)
    assert length == pytest.approx(_brute_cvrp(inst), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_cvrp_lower_bounds_and_monotone_in_k(seed):
    inst = generate_instance(7, 1, seed=seed)
    values = [exact_cvrp(Instance(inst.points, inst.depot, k))[1] for k in range(1, 8)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
    for k, v in enumerate(values, start=1):
        assert rad(inst.points, inst.depot, k) <= v + 1e-12
        assert exact_tsp(inst.points, inst.depot)[1] <= v + 1e-12


def test_cvrp_budget():
    with pytest.raises(OracleBudgetError):
        exact_cvrp(generate_instance(9, 2, seed=0))
    assert exact_cvrp(generate_instance(9, 2, seed=0), max_n=9)[1] > 0
