"""Tour partitioning baseline: MST, a doubled-tree TSP tour, and cutting it
into capacity-sized tours with depot detours."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .solution import Solution, Tour, dist, total_length

Point = tuple[float, float]


def rad(points: Sequence[Point], depot: Point, k: int) -> float:
    """(2/k) times the summed depot distances; a lower bound on the optimum."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 / k * sum(dist(p, depot) for p in points)


def mst(points: Sequence[Point]) -> list[tuple[int, int]]:
    """Prim's algorithm on the complete Euclidean graph.

    Ties go to the smaller vertex index.  Zero-length edges are ordinary
    edges here, which sparse-graph MST routines would silently drop.
    """
    n = len(points)
    if n == 0:
        raise ValueError("mst needs at least one point")
    pts = np.asarray(points, dtype=float)
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1)
    best[0] = 0.0
    edges = []
    for _ in range(n):
        cand = np.where(in_tree, np.inf, best)
        u = int(np.argmin(cand))
        in_tree[u] = True
        if parent[u] >= 0:
            edges.append((int(parent[u]), u))
        dd = np.hypot(pts[:, 0] - pts[u, 0], pts[:, 1] - pts[u, 1])
        better = (~in_tree) & (dd < best)
        best[better] = dd[better]
        parent[better] = u
    return edges


def mst_weight(points: Sequence[Point], edges) -> float:
    return sum(dist(points[i], points[j]) for i, j in edges)


def tsp_2approx(points: Sequence[Point], depot: Point) -> list[int]:
    """Customer visiting order from a preorder walk of the MST rooted at the depot."""
    if len(points) < 1:
        raise ValueError("need at least one customer")
    allpts = [tuple(depot), *map(tuple, points)]
    adj: dict[int, list[int]] = {i: [] for i in range(len(allpts))}
    for u, v in mst(allpts):
        adj[u].append(v)
        adj[v].append(u)
    order, stack, seen = [], [0], {0}
    while stack:
        u = stack.pop()
        if u != 0:
            order.append(u - 1)
        for v in sorted(adj[u], reverse=True):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return order


@dataclass
class PartitionResult:
    solution: Solution
    # (customer before the detour, customer after it, surcharge)
    detours: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def surcharge(self) -> float:
        return sum(d for _, _, d in self.detours)


def partition_tour(order: Sequence[int], k: int, start: int, inst) -> PartitionResult:
    """Cut the cyclic customer order into tours of ``k``, beginning at position ``start``."""
    n = len(order)
    if not (0 <= start < n):
        raise IndexError(f"start {start} outside tour of {n} customers")
    if k < 1:
        raise ValueError("k must be >= 1")
    o = tuple(inst.depot)
    seq = [order[(start + j) % n] for j in range(n)]
    tours, detours = [], []
    for c in range(0, n, k):
        chunk = seq[c : c + k]
        tours.append(Tour(customers=list(chunk)))
        if len(chunk) == k:
            q, q2 = chunk[-1], seq[(c + k) % n]
            pq, pq2 = inst.points[q], inst.points[q2]
            detours.append((q, q2, dist(pq, o) + dist(o, pq2) - dist(pq, pq2)))
    return PartitionResult(Solution(tours=tours), detours)


def best_start_partition(order: Sequence[int], k: int, inst) -> Solution:
    """Shortest partition over every start position; ties keep the first."""
    best, best_len = None, math.inf
    for s in range(len(order)):
        sol = partition_tour(order, k, s, inst).solution
        ln = total_length(sol, inst)
        if ln < best_len - 1e-12:
            best, best_len = sol, ln
    return best


def partition_solve(inst, customers: Sequence[int] | None = None) -> Solution:
    """Doubled-tree tour plus best-start partitioning over a customer subset."""
    idx = list(range(len(inst.points))) if customers is None else list(customers)
    if not idx:
        return Solution(tours=[])
    sub = [inst.points[i] for i in idx]
    local = tsp_2approx(sub, inst.depot)
    order = [idx[j] for j in local]
    return best_start_partition(order, inst.capacity, inst)


def tour_cycle_length(order: Sequence[int], inst) -> float:
    o = tuple(inst.depot)
    pts = [o, *(inst.points[i] for i in order), o]
    return sum(dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1))
