"""Exact solvers for tiny instances, used as ground truth."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .solution import Solution, Tour

Point = tuple[float, float]

MAX_TSP = 14
MAX_CVRP = 8


class OracleBudgetError(RuntimeError):
    pass


def _held_karp(points: Sequence[Point], depot: Point):
    """Cheapest depot-rooted paths over every subset, ending at each customer.

    Returns ``(g, parent)`` where ``g[mask, j]`` is the cost of leaving the
    depot, visiting ``mask`` and stopping at ``j``.
    """
    n = len(points)
    pts = np.asarray(points, dtype=float).reshape(n, 2)
    o = np.asarray(depot, dtype=float)
    dm = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    d0 = np.hypot(pts[:, 0] - o[0], pts[:, 1] - o[1])
    full = 1 << n
    g = np.full((full, n), np.inf)
    parent = np.full((full, n), -1, dtype=np.int64)
    for j in range(n):
        g[1 << j, j] = d0[j]
    for mask in range(1, full):
        row = g[mask]
        if not np.isfinite(row).any():
            continue
        for j in range(n):
            if mask & (1 << j):
                continue
            cand = row + dm[:, j]
            i = int(np.argmin(cand))
            nm = mask | (1 << j)
            if cand[i] < g[nm, j]:
                g[nm, j] = cand[i]
                parent[nm, j] = i
    return g, parent, d0


def _walk_back(parent, mask: int, j: int) -> list[int]:
    order = []
    while j >= 0:
        order.append(j)
        pj = int(parent[mask, j])
        mask &= ~(1 << j)
        j = pj
    return order[::-1]


def exact_tsp(points: Sequence[Point], depot: Point, max_n: int = MAX_TSP) -> tuple[list[int], float]:
    """Optimal depot-rooted cycle through all points (order, length)."""
    n = len(points)
    if n == 0:
        return [], 0.0
    if n > max_n:
        raise OracleBudgetError(f"exact_tsp: {n} customers exceeds budget {max_n}")
    g, parent, d0 = _held_karp(points, depot)
    full = (1 << n) - 1
    tot = g[full] + d0
    j = int(np.argmin(tot))
    return _walk_back(parent, full, j), float(tot[j])


def exact_cvrp(inst, max_n: int = MAX_CVRP) -> tuple[Solution, float]:
    """Optimal CVRP by set partitioning into blocks of at most k customers."""
    n, k = len(inst.points), inst.capacity
    if n > max_n:
        raise OracleBudgetError(f"exact_cvrp: {n} customers exceeds budget {max_n}")
    g, parent, d0 = _held_karp(inst.points, inst.depot)
    full = 1 << n
    block = np.full(full, np.inf)
    block_end = np.full(full, -1, dtype=np.int64)
    for mask in range(1, full):
        if bin(mask).count("1") > k:
            continue
        tot = g[mask] + d0
        j = int(np.argmin(tot))
        block[mask], block_end[mask] = tot[j], j
    best = [math.inf] * full
    choice = [0] * full
    best[0] = 0.0
    for mask in range(1, full):
        low = mask & -mask
        rest = mask ^ low
        sub = rest
        # blocks containing the lowest customer of mask
        while True:
            b = sub | low
            if np.isfinite(block[b]):
                c = block[b] + best[mask ^ b]
                if c < best[mask] - 1e-12:
                    best[mask], choice[mask] = c, b
            if sub == 0:
                break
            sub = (sub - 1) & rest
    tours = []
    mask = full - 1
    while mask:
        b = choice[mask]
        tours.append(Tour(customers=_walk_back(parent, b, int(block_end[b]))))
        mask ^= b
    return Solution(tours=tours), float(best[full - 1])
