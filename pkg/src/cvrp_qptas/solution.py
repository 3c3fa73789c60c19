"""Tours, solutions, feasibility and the structural checkers.

Crossing conventions (shared with the dynamic program):

* For objective purposes a line at ``c`` is crossed by an edge ``(u, v)``
  iff ``c`` lies in ``(min, max]`` of the edge's coordinate range.  A point
  on a line belongs to the upper/right side, which matches half-open
  squares and makes crossing counts additive per edge.
* For lightness and portal checks a crossing is a strict change of side:
  vertices on the line are skipped, so touching a line counts nothing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

Point = tuple[float, float]


@dataclass(frozen=True)
class Waypoint:
    """A vertex of a tour's geometry path."""

    xy: Point
    customer: int | None = None
    is_depot: bool = False

    def moved(self, xy: Sequence[float]) -> "Waypoint":
        return replace(self, xy=(float(xy[0]), float(xy[1])))


@dataclass
class Tour:
    customers: list[int]
    path: list[Waypoint] | None = None

    def geometry(self, inst) -> list[Point]:
        """Closed polyline from the depot back to the depot."""
        if self.path is not None:
            return [w.xy for w in self.path]
        depot = tuple(inst.depot)
        return [depot, *(tuple(inst.points[i]) for i in self.customers), depot]


@dataclass
class Solution:
    tours: list[Tour] = field(default_factory=list)

    def customer_sets(self) -> list[list[int]]:
        return [sorted(t.customers) for t in self.tours]

    def to_dict(self, inst) -> dict:
        out = {
            "tours": [list(t.customers) for t in self.tours],
            "length": total_length(self, inst),
        }
        if any(t.path is not None for t in self.tours):
            out["portals_path"] = [
                [list(p) for p in t.geometry(inst)] for t in self.tours
            ]
        return out

    def to_json(self, inst) -> str:
        return json.dumps(self.to_dict(inst), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict, inst=None) -> "Solution":
        tours_raw = data.get("tours")
        if not isinstance(tours_raw, list):
            raise ValueError("tours: expected a list")
        paths = data.get("portals_path")
        tours = []
        for ti, custs in enumerate(tours_raw):
            custs = [int(i) for i in custs]
            path = None
            if paths is not None and inst is not None:
                path = _path_from_points(paths[ti], custs, inst)
            tours.append(Tour(customers=custs, path=path))
        return cls(tours=tours)


def _path_from_points(points, custs, inst) -> list[Waypoint]:
    # re-attach customer labels by matching coordinates in visiting order
    pending = list(custs)
    out = []
    last = len(points) - 1
    for j, p in enumerate(points):
        xy = (float(p[0]), float(p[1]))
        if j in (0, last):
            out.append(Waypoint(xy, is_depot=True))
            continue
        if pending and tuple(inst.points[pending[0]]) == xy:
            out.append(Waypoint(xy, customer=pending.pop(0)))
        else:
            out.append(Waypoint(xy))
    return out


@dataclass(frozen=True)
class TypeAssignment:
    """Per-customer level labels; -1 keeps a point, anything else drops it."""

    types: tuple[int, ...]

    @classmethod
    def all_black(cls, n: int) -> "TypeAssignment":
        return cls(types=(-1,) * n)

    def active(self, i: int, level: int) -> bool:
        return self.types[i] < level

    def black(self) -> list[int]:
        return [i for i, t in enumerate(self.types) if t == -1]

    def red(self) -> list[int]:
        return [i for i, t in enumerate(self.types) if t != -1]


def dist(u: Sequence[float], v: Sequence[float]) -> float:
    return math.hypot(u[0] - v[0], u[1] - v[1])


def polyline_length(pts: Sequence[Point]) -> float:
    return sum(dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1))


def tour_length(t: Tour, inst) -> float:
    if not t.customers and t.path is None:
        return 0.0
    return polyline_length(t.geometry(inst))


def total_length(s: Solution, inst) -> float:
    return sum(tour_length(t, inst) for t in s.tours)


# ---- feasibility ----------------------------------------------------------


@dataclass
class FeasibilityReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def is_feasible(s: Solution, inst) -> FeasibilityReport:
    rep = FeasibilityReport()
    n, k = len(inst.points), inst.capacity
    seen: dict[int, int] = {}
    for ti, t in enumerate(s.tours):
        if len(t.customers) > k:
            rep.violations.append(f"capacity: tour {ti} has {len(t.customers)} > k={k}")
        if len(set(t.customers)) != len(t.customers):
            rep.violations.append(f"duplicate: tour {ti} repeats a customer")
        for i in t.customers:
            if not (0 <= i < n):
                rep.violations.append(f"index: tour {ti} references customer {i}")
                continue
            if i in seen and seen[i] != ti:
                rep.violations.append(f"duplicate: customer {i} in tours {seen[i]} and {ti}")
            seen.setdefault(i, ti)
        if t.path is not None:
            depot = tuple(inst.depot)
            if not t.path or t.path[0].xy != depot or t.path[-1].xy != depot:
                rep.violations.append(f"path: tour {ti} does not start and end at the depot")
            on_path = [w.customer for w in t.path if w.customer is not None]
            if sorted(on_path) != sorted(t.customers):
                rep.violations.append(f"path: tour {ti} waypoints disagree with its customers")
    missing = sorted(set(range(n)) - set(seen))
    if missing:
        rep.violations.append(f"coverage: customers {missing} not visited")
    return rep


# ---- crossings and the extended objective ----------------------------------


def _edge_level_counts(d, u: Point, v: Point) -> list[int]:
    counts = [0] * (d.lmax + 1)
    for axis, origin in ((0, d.x0), (1, d.y0)):
        lo, hi = sorted((u[axis], v[axis]))
        if lo == hi:
            continue
        for lvl, c in enumerate(d.crossing_levels(lo, hi, origin)):
            counts[lvl] += c
    return counts


def line_crossings_by_level(s: Solution, d) -> list[int]:
    """Crossings of lines of each exact level, summed over tours."""
    counts = [0] * (d.lmax + 1)
    inst = d.pinst
    for t in s.tours:
        pts = t.geometry(inst)
        for i in range(len(pts) - 1):
            for lvl, c in enumerate(_edge_level_counts(d, pts[i], pts[i + 1])):
                counts[lvl] += c
    return counts


def crossings(s: Solution, d, level: int) -> int:
    """Crossings of the boundaries of level-``level`` squares (lines of level <= level)."""
    by_level = line_crossings_by_level(s, d)
    return sum(by_level[: level + 1])


def penalty_factor(eps: float, n: int) -> float:
    if n <= 1:
        return eps
    return eps / math.log2(n) ** 2


def extended_objective(s: Solution, d, eps: float) -> float:
    inst = d.pinst
    length = total_length(s, inst)
    kappa = penalty_factor(eps, inst.n)
    by_level = line_crossings_by_level(s, d)
    pen = 0.0
    for lvl in range(d.lmax + 1):
        c = sum(by_level[: lvl + 1])
        pen += c * d.side(lvl)
    return length + kappa * pen


# ---- segment decomposition ---------------------------------------------------


@dataclass
class Segment:
    """Connected piece of a tour inside a closed square."""

    tour: int
    points: list[Point]
    customers: list[int]
    closed: bool = False

    @property
    def entry(self) -> Point:
        return self.points[0]

    @property
    def exit(self) -> Point:
        return self.points[-1]


def _clip(u: Point, v: Point, box) -> tuple[float, float] | None:
    x1, y1, x2, y2 = box
    t0, t1 = 0.0, 1.0
    dx, dy = v[0] - u[0], v[1] - u[1]
    for p, q in ((-dx, u[0] - x1), (dx, x2 - u[0]), (-dy, u[1] - y1), (dy, y2 - u[1])):
        if p == 0:
            if q < 0:
                return None
            continue
        r = q / p
        if p < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return None
    return t0, t1


def _lerp(u: Point, v: Point, t: float) -> Point:
    if t == 0.0:
        return u
    if t == 1.0:
        return v
    return (u[0] + t * (v[0] - u[0]), u[1] + t * (v[1] - u[1]))


def _inside(box, p: Point) -> bool:
    return box[0] <= p[0] <= box[2] and box[1] <= p[1] <= box[3]


def tour_segments(path: Sequence[Waypoint], box, tour_index: int = 0) -> list[Segment]:
    """Components of a closed tour path intersected with a closed box.

    Components of zero length that visit no customer are dropped.  When the
    depot (the path's first and last vertex) lies inside, the first and last
    runs are one component.
    """
    runs: list[tuple[list[Point], list[int]]] = []
    cur: tuple[list[Point], list[int]] | None = None
    for i in range(len(path) - 1):
        u, v = path[i].xy, path[i + 1].xy
        if i == 0 and _inside(box, u):
            cur = ([u], [])
            if path[0].customer is not None:
                cur[1].append(path[0].customer)
        clip = _clip(u, v, box)
        if clip is None:
            if cur is not None:
                runs.append(cur)
                cur = None
            continue
        a, b = _lerp(u, v, clip[0]), _lerp(u, v, clip[1])
        if cur is None or clip[0] > 0.0:
            if cur is not None:
                runs.append(cur)
            cur = ([a], [])
        if b != cur[0][-1]:
            cur[0].append(b)
        if clip[1] == 1.0:
            w = path[i + 1]
            if w.customer is not None:
                cur[1].append(w.customer)
        else:
            runs.append(cur)
            cur = None
    if cur is not None:
        runs.append(cur)
    whole = len(runs) == 1 and _inside(box, path[0].xy) and all(_inside(box, w.xy) for w in path)
    if not whole and len(runs) > 1 and _inside(box, path[0].xy):
        first_pts, first_c = runs.pop(0)
        last_pts, last_c = runs.pop()
        runs.append((last_pts + first_pts[1:], last_c + first_c))
    out = []
    for pts, custs in runs:
        if len(pts) < 2 and not custs:
            continue
        if polyline_length(pts) == 0.0 and not custs:
            continue
        out.append(Segment(tour=tour_index, points=pts, customers=custs, closed=whole))
    return out


def square_segments(s: Solution, d, sq) -> list[Segment]:
    box = d.bounds(sq)
    out = []
    inst = d.pinst
    for ti, t in enumerate(s.tours):
        path = t.path if t.path is not None else _straight_path(t, inst)
        out.extend(tour_segments(path, box, ti))
    return out


def _straight_path(t: Tour, inst) -> list[Waypoint]:
    depot = tuple(inst.depot)
    return [
        Waypoint(depot, is_depot=True),
        *(Waypoint(tuple(inst.points[i]), customer=i) for i in t.customers),
        Waypoint(depot, is_depot=True),
    ]


# ---- lightness ----------------------------------------------------------------


def strict_line_crossings(pts: Sequence[Point], axis: int, c: float) -> list[tuple[float, bool]]:
    """Strict side changes of a polyline across the line ``coord[axis] == c``.

    Returns ``(position along the line, at_vertex)`` per crossing.  A
    crossing through vertices on the line is located at the last of them.
    """
    other = 1 - axis
    out = []
    sign = 0
    last_on = None
    prev = None
    for p in pts:
        s = (p[axis] > c) - (p[axis] < c)
        if s == 0:
            last_on = p
        else:
            if sign != 0 and s != sign:
                if last_on is not None and prev is not None and prev[axis] == c:
                    out.append((last_on[other], True))
                else:
                    t = (c - prev[axis]) / (p[axis] - prev[axis])
                    out.append((prev[other] + t * (p[other] - prev[other]), False))
            sign = s
            last_on = None
        prev = p
    return out


@dataclass
class LightnessReport:
    portal_violations: list[tuple] = field(default_factory=list)
    light_violations: list[tuple] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.portal_violations and not self.light_violations


def _half_side(pos: float, lo: float, mid: float, hi: float) -> int | None:
    if lo < pos < mid:
        return 0
    if mid < pos < hi:
        return 1
    return None


def _on_portal(d, axis: int, c: float, pos: float, at_vertex: bool) -> bool:
    pt = (c, pos) if axis == 0 else (pos, c)
    if at_vertex:
        return d.is_portal_on_line(pt, axis)
    # an edge passing exactly over a portal position still respects it
    lvl = d.vline_level(c) if axis == 0 else d.hline_level(c)
    origin = d.y0 if axis == 0 else d.x0
    q = (pos - origin) / d.spacing(lvl)
    return abs(q - round(q)) < 1e-9


def is_ilight(s: Solution, d, r: int, per: str = "tour") -> LightnessReport:
    """Portal-respecting and r-light with respect to the compressed quadtree.

    Each split square's bisectors are checked over the square's extent.
    Lightness counts crossings through the open interior of each half side;
    ``per="tour"`` sums a tour's segments, ``per="segment"`` bounds each
    segment separately (the guarantee the dynamic program enforces).
    """
    if per not in ("tour", "segment"):
        raise ValueError("per must be 'tour' or 'segment'")
    rep = LightnessReport()
    inst = d.pinst
    split = [sq for sq, kids in d.tree.items() if kids is not None]
    for ti, t in enumerate(s.tours):
        path = t.path if t.path is not None else _straight_path(t, inst)
        full = [w.xy for w in path]
        for sq in split:
            x1, y1, x2, y2 = d.bounds(sq)
            cx, cy = (x1 + x2) / 2, (y1 + y2) / 2
            if per == "tour":
                pieces = [full]
            else:
                pieces = [seg.points for seg in tour_segments(path, (x1, y1, x2, y2), ti)]
            for pts in pieces:
                counts = [0, 0, 0, 0]
                for axis, c, lo, hi, base in ((0, cx, y1, y2, 0), (1, cy, x1, x2, 2)):
                    for pos, at_vertex in strict_line_crossings(pts, axis, c):
                        if not (lo <= pos <= hi):
                            continue
                        if not _on_portal(d, axis, c, pos, at_vertex):
                            rep.portal_violations.append((ti, sq, axis, pos))
                        h = _half_side(pos, lo, (lo + hi) / 2, hi)
                        if h is not None:
                            counts[base + h] += 1
                names = ("v_low", "v_high", "h_left", "h_right")
                for j, cnt in enumerate(counts):
                    if cnt > r:
                        rep.light_violations.append((ti, sq, names[j], cnt))
    return rep


# ---- relaxed CVRP (rounded segments) ----------------------------------------


@dataclass
class RelaxedReport:
    capacity_violations: list[str] = field(default_factory=list)
    coverage_violations: list[str] = field(default_factory=list)
    bucket_violations: list[tuple] = field(default_factory=list)
    square_cap_violations: list[tuple] = field(default_factory=list)
    growth_violations: list[tuple] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.capacity_violations
            or self.coverage_violations
            or self.bucket_violations
            or self.growth_violations
        )

    @property
    def ok_square_cap(self) -> bool:
        return self.ok and not self.square_cap_violations


def _log2n(n: int) -> float:
    return math.log2(n) if n >= 2 else 1.0


def _bucket(x: int, ts: Sequence[int]) -> int | None:
    if x < ts[0]:
        return None
    i = 0
    while i + 1 < len(ts) and ts[i + 1] <= x:
        i += 1
    return i


def bucket_feasible(e: int, o: int, gamma: float) -> tuple[bool, int]:
    """Can ``e`` exact-threshold and ``o`` other segments be split into
    rounded groups of ``gamma`` with at most ``gamma`` left unrounded?

    Returns (feasible, unrounded count under the largest rounding).
    """
    if math.isinf(gamma):
        return True, e + o
    g = int(gamma)
    rho = (e // g) * g
    left = e - rho + o
    return left <= g, left


def squares_with_customers(d) -> list:
    out = set()
    for p in d.points:
        for lvl in range(d.lmax + 1):
            out.add(d.square_of(lvl, p))
    return sorted(out, key=lambda s: (s.level, s.ix, s.iy))


def check_relaxed(
    s: Solution,
    ta: TypeAssignment,
    d,
    gamma: float,
    thresholds: Sequence[int],
    eps: float,
) -> RelaxedReport:
    """Check the relaxed-solution conditions over every square with customers.

    Which equal-to-threshold segments are rounded is not recorded in a
    solution, so condition (2) is checked for existence of a grouping.
    """
    rep = RelaxedReport()
    inst = d.pinst
    n, k = inst.n, inst.k
    seen = []
    for ti, t in enumerate(s.tours):
        black = [i for i in t.customers if ta.types[i] == -1]
        if len(black) > k:
            rep.capacity_violations.append(f"tour {ti}: {len(black)} black points > k={k}")
        seen.extend(t.customers)
    if sorted(seen) != list(range(n)):
        rep.coverage_violations.append("tours do not cover every customer exactly once")
    growth = 1.0 + eps / _log2n(n)
    ts = list(thresholds)
    tau = len(ts)
    for sq in squares_with_customers(d):
        lvl = sq.level
        segs = square_segments(s, d, sq)
        e = [0] * tau
        o = [0] * tau
        for seg in segs:
            x = sum(1 for i in seg.customers if ta.types[i] < lvl)
            x_next = sum(1 for i in seg.customers if ta.types[i] < lvl + 1)
            if x_next > x * growth + 1e-12:
                rep.growth_violations.append((sq, seg.tour, x, x_next))
            b = _bucket(x, ts)
            if b is None:
                continue
            if x == ts[b]:
                e[b] += 1
            else:
                o[b] += 1
        total_left = 0
        for i in range(tau):
            feas, left = bucket_feasible(e[i], o[i], gamma)
            total_left += left
            if not feas:
                rep.bucket_violations.append((sq, ts[i], e[i], o[i]))
        if not math.isinf(gamma) and total_left > gamma * tau:
            rep.square_cap_violations.append((sq, total_left))
    return rep


def solution_from_walks(walks: Iterable[list[Waypoint]]) -> Solution:
    tours = []
    for w in walks:
        custs = [v.customer for v in w if v.customer is not None]
        tours.append(Tour(customers=custs, path=list(w)))
    return Solution(tours=tours)
