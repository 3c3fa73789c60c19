"""Point types from drop demands.

A point of type -1 is black and stays on its DP tour; a point of type
``l >= 0`` is red and was dropped by a rounded segment of a level-``l``
square.  A point is active at level ``l`` when its type is below ``l``.

Demands are processed deepest level first, so a segment's active points are
exactly its customers still typed -1 at that moment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .solution import (
    Solution,
    TypeAssignment,
    _bucket,
    dist,
    square_segments,
    squares_with_customers,
)

Point = tuple[float, float]

# slack factor in the two derandomized interval conditions
INTERVAL_SLACK = 4.0


def _ordered(demands: Iterable) -> list:
    return sorted(demands, key=lambda dd: (-dd.level, dd.tour, dd.customers))


def active_points(demand, types: Sequence[int]) -> list[int]:
    """The demand's customers still active, in segment order."""
    act = [i for i in demand.customers if types[i] == -1]
    if len(act) != demand.x:
        raise ValueError(
            f"segment in {demand.square} has {len(act)} active points, expected {demand.x}"
        )
    if not 0 <= demand.y < len(act):
        raise ValueError(f"cannot drop {demand.y} of {len(act)} active points")
    return act


def cyclic_interval(seq: Sequence[int], start: int, y: int) -> list[int]:
    return [seq[(start + j) % len(seq)] for j in range(y)]


def assign_types_random(demands: Iterable, n: int, seed: int) -> TypeAssignment:
    """Drop ``y`` consecutive active points from a uniform start, wrapping
    past the segment's last point back to its first."""
    rng = np.random.default_rng(seed)
    types = [-1] * n
    for dd in _ordered(demands):
        act = active_points(dd, types)
        if dd.y == 0:
            continue
        start = int(rng.integers(len(act)))
        for i in cyclic_interval(act, start, dd.y):
            types[i] = dd.level
    return TypeAssignment(tuple(types))


def gap_lengths(pts: Sequence[Point], entry: Point, exit: Point) -> list[float]:
    """Gap ``i`` joins point ``i`` to point ``i+1``; the last gap wraps from
    the last point out through the exit and back in through the entry."""
    x = len(pts)
    gaps = [dist(pts[i], pts[i + 1]) for i in range(x - 1)]
    gaps.append(dist(entry, pts[0]) + dist(pts[-1], exit))
    return gaps


def interval_length(gaps: Sequence[float], start: int, y: int) -> float:
    x = len(gaps)
    return sum(gaps[(start + j) % x] for j in range(y - 1))


@dataclass(frozen=True)
class IntervalChoice:
    start: int
    rad_ratio: float
    length_ratio: float
    fallback: bool


def _ratio(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return 0.0 if num <= 0 else math.inf


def choose_interval(
    pts: Sequence[Point], depot: Point, entry: Point, exit: Point, y: int
) -> IntervalChoice:
    """First cyclic interval of ``y`` points whose depot distance and length
    are both within ``INTERVAL_SLACK * y / x`` of the segment's; otherwise
    the interval minimising the larger of the two ratios to that bound."""
    x = len(pts)
    share = INTERVAL_SLACK * y / x
    dd = [dist(p, depot) for p in pts]
    rad_cap = share * sum(dd)
    gaps = gap_lengths(pts, entry, exit)
    len_cap = share * sum(gaps)
    best = None
    for s in range(x):
        r = _ratio(sum(dd[(s + j) % x] for j in range(y)), rad_cap)
        ln = _ratio(interval_length(gaps, s, y), len_cap)
        if r <= 1.0 and ln <= 1.0:
            return IntervalChoice(s, r, ln, False)
        if best is None or max(r, ln) < max(best.rad_ratio, best.length_ratio):
            best = IntervalChoice(s, r, ln, True)
    return best


def assign_types_derandomized(
    demands: Iterable, inst, fallbacks: list | None = None
) -> TypeAssignment:
    """Deterministic interval per demand; demands that needed the minimax
    fallback are appended to ``fallbacks`` when given."""
    types = [-1] * inst.n
    for dd in _ordered(demands):
        act = active_points(dd, types)
        if dd.y == 0:
            continue
        pts = [tuple(inst.points[i]) for i in act]
        ch = choose_interval(pts, tuple(inst.depot), dd.entry, dd.exit, dd.y)
        if ch.fallback and fallbacks is not None:
            fallbacks.append(dd)
        for i in cyclic_interval(act, ch.start, dd.y):
            types[i] = dd.level
    return TypeAssignment(tuple(types))


def group_rounding(
    s: Solution, d, gamma: float, thresholds: Sequence[int]
) -> TypeAssignment:
    """Bottom-up rounding of a feasible solution in groups of ``gamma``.

    Per square and threshold bucket, while at least ``gamma`` unrounded
    segments fall in the bucket, the first ``gamma`` (ordered by first
    customer, then entry and exit point) shed their earliest active points
    down to the bucket's threshold.  Tours are not touched.
    """
    n = d.pinst.n
    types = [-1] * n
    if math.isinf(gamma):
        return TypeAssignment(tuple(types))
    g = int(gamma)
    ts = list(thresholds)
    by_level: dict[int, list] = {}
    for sq in squares_with_customers(d):
        by_level.setdefault(sq.level, []).append(sq)
    for lvl in sorted(by_level, reverse=True):
        for sq in by_level[lvl]:
            buckets: dict[int, list] = {}
            for seg in square_segments(s, d, sq):
                act = [i for i in seg.customers if types[i] == -1]
                b = _bucket(len(act), ts)
                if b is not None:
                    key = (act[0], seg.entry, seg.exit)
                    buckets.setdefault(b, []).append((key, act))
            for b, segs in sorted(buckets.items()):
                segs.sort(key=lambda kv: kv[0])
                for start in range(0, len(segs) - g + 1, g):
                    for _, act in segs[start : start + g]:
                        for i in act[: len(act) - ts[b]]:
                            types[i] = lvl
    return TypeAssignment(tuple(types))
