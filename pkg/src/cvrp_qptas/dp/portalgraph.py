"""Glue portals, compressed leaves and move costs shared by the DP engines.

A *glue portal* is a portal strictly inside one of the four half sides of a
split square; a tour passes from one child to its neighbour only there.
A *move* is a straight edge inside one compressed leaf.  Every edge costs
its length plus the penalty factor times the weight of the dissection
lines it crosses, so summed move costs equal the extended objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..dissection import Dissection, Square
from ..solution import dist, penalty_factor

Point = tuple[float, float]

# child pair -> half side index (v_low, v_high, h_left, h_right)
HALF_SIDE = {(0, 1): 0, (2, 3): 1, (0, 2): 2, (1, 3): 3}
HALF_NAMES = ("v_low", "v_high", "h_left", "h_right")


@dataclass(frozen=True)
class GluePortal:
    pid: int
    xy: Point
    square: Square
    half: int
    sides: tuple[Square, Square]  # (lower/left child, upper/right child)


@dataclass
class LeafInfo:
    sq: Square
    bounds: tuple[float, float, float, float]
    loc: int | None  # customer location index
    has_depot: bool
    pids: list[int] = field(default_factory=list)


class PortalGraph:
    def __init__(self, d: Dissection, eps: float):
        self.d = d
        self.eps = eps
        pinst = d.pinst
        self.kappa = penalty_factor(eps, pinst.n)
        self.depot: Point = (float(pinst.depot[0]), float(pinst.depot[1]))
        # distinct customer locations in first-appearance order
        self.loc_xy: list[Point] = []
        self.loc_customers: list[list[int]] = []
        index: dict[Point, int] = {}
        for i, p in enumerate(pinst.points):
            xy = (float(p[0]), float(p[1]))
            if xy not in index:
                index[xy] = len(self.loc_xy)
                self.loc_xy.append(xy)
                self.loc_customers.append([])
            self.loc_customers[index[xy]].append(i)
        self.loc_index = index
        self.mult = tuple(len(c) for c in self.loc_customers)
        self.depot_loc = index.get(self.depot)
        self.customer_loc = [index[(float(p[0]), float(p[1]))] for p in pinst.points]

        self.glue: list[GluePortal] = []
        self.glue_of: dict[Square, list[int]] = {}
        self.bport: dict[Square, list[int]] = {sq: [] for sq in d.tree}
        self.touching: dict[int, tuple[list[Square], list[Square]]] = {}
        self.leaves: dict[Square, LeafInfo] = {}
        self._cost: dict[tuple[Point, Point], float] = {}
        self._build()

    # ---- construction -------------------------------------------------------
    def _build(self) -> None:
        d = self.d
        for sq, kids in d.tree.items():
            if kids is None:
                locs = [self.loc_index[p] for p in map(_f, (d.points[i] for i in d.points_in(sq)))]
                self.leaves[sq] = LeafInfo(
                    sq=sq,
                    bounds=d.bounds(sq),
                    loc=locs[0] if locs else None,
                    has_depot=d.has_depot(sq),
                )
        for sq in sorted((s for s, k in d.tree.items() if k is not None),
                         key=lambda s: (s.level, s.ix, s.iy)):
            kids = d.tree[sq]
            ids = []
            for pair, pts in d.internal_portals(sq).items():
                sides = (kids[pair[0]], kids[pair[1]])
                for xy in pts:
                    pid = len(self.glue)
                    gp = GluePortal(pid, (float(xy[0]), float(xy[1])), sq, HALF_SIDE[pair], sides)
                    self.glue.append(gp)
                    ids.append(pid)
                    touch = ([], [])
                    for s in (0, 1):
                        self._collect(sides[s], gp.xy, pid, touch[s])
                    self.touching[pid] = touch
            self.glue_of[sq] = ids

    def _collect(self, sq: Square, xy: Point, pid: int, out: list) -> None:
        self.bport[sq].append(pid)
        kids = self.d.tree[sq]
        if kids is None:
            out.append(sq)
            self.leaves[sq].pids.append(pid)
            return
        for c in kids:
            if self.d.contains(c, xy):
                self._collect(c, xy, pid, out)

    # ---- queries --------------------------------------------------------------
    def is_leaf(self, sq: Square) -> bool:
        return self.d.tree[sq] is None

    def side_of(self, sq: Square, pid: int) -> int:
        """Which side of the glue portal's line the square ``sq`` lies on."""
        gp = self.glue[pid]
        x1, y1, x2, y2 = self.d.bounds(sq)
        if gp.half in (0, 1):
            return 0 if x2 <= gp.xy[0] else 1
        return 0 if y2 <= gp.xy[1] else 1

    def other_side(self, pid: int, sq: Square) -> Square:
        """The child of the portal's square across the portal from ``sq``."""
        gp = self.glue[pid]
        return gp.sides[1 - self.side_of(sq, pid)]

    def cost(self, u: Point, v: Point) -> float:
        key = (u, v) if u <= v else (v, u)
        c = self._cost.get(key)
        if c is None:
            c = dist(u, v) + self.kappa * self.d.edge_weight(u, v)
            self._cost[key] = c
        return c

    @staticmethod
    def same_side(bounds, u: Point, v: Point) -> bool:
        x1, y1, x2, y2 = bounds
        return (u[0] == v[0] and u[0] in (x1, x2)) or (u[1] == v[1] and u[1] in (y1, y2))

    def xy(self, pid: int) -> Point:
        return self.glue[pid].xy

    def contains_depot(self, sq: Square) -> bool:
        return self.d.has_depot(sq)

    def depot_child(self, sq: Square) -> Square:
        for c in self.d.tree[sq]:
            if self.d.has_depot(c):
                return c
        raise ValueError("square does not contain the depot")

    def is_descendant(self, sq: Square, anc: Square) -> bool:
        if sq.level < anc.level:
            return False
        shift = sq.level - anc.level
        return (sq.ix >> shift) == anc.ix and (sq.iy >> shift) == anc.iy


def _f(p) -> Point:
    return (float(p[0]), float(p[1]))
