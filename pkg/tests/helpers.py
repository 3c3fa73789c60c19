"""Shared builders for the test suite."""

import random

from cvrp_qptas import Instance, Solution, Tour


def line_instance(xs, k, depot=(0.0, 0.0)):
    return Instance(points=tuple((float(x), 0.0) for x in xs), depot=depot, capacity=k)


def random_tours(n, k, rng: random.Random) -> Solution:
    """A random feasible solution: shuffled customers cut into tours of 1..k."""
    perm = list(range(n))
    rng.shuffle(perm)
    tours, i = [], 0
    while i < n:
        size = rng.randint(1, k)
        tours.append(Tour(customers=perm[i : i + size]))
        i += size
    return Solution(tours=tours)


def binomial_sigma(p, trials):
    return (p * (1 - p) / trials) ** 0.5
