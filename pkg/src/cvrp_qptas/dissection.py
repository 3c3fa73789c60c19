"""Shifted quadtree dissection and portal placement.

The root box has side ``2L`` and lower-left corner ``(a - L + 1/2, b - L + 1/2)``
so that every shifted grid keeps all points strictly inside, and no integer
point ever lies on a dissection line.  Level ``l`` squares have side
``d_l = 2L / 2**l``; the deepest level has unit squares.

The dynamic program only recurses into squares holding two or more distinct
locations (the depot counts as a location); :attr:`Dissection.tree` records
that compressed hierarchy.  Geometry queries (crossings, square membership)
always refer to the full dissection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

Point = tuple[float, float]

# child order: SW, SE, NW, NE
CHILD_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))
# pairs of children sharing an internal half side, and which bisector it is on
INTERNAL_SIDES = {
    (0, 1): "v_low",
    (2, 3): "v_high",
    (0, 2): "h_left",
    (1, 3): "h_right",
}


class DissectionError(ValueError):
    pass


def _is_pow2(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


def default_portals(n: int, eps: float, cap: int | None = None) -> int:
    """Smallest power of two >= log2(n + 1) / eps, optionally capped."""
    target = math.log2(n + 1) / eps
    m = 1
    while m < target:
        m *= 2
    if cap is not None:
        m = min(m, cap)
    return m


def enumerate_shifts(L: int) -> Iterator[tuple[int, int]]:
    """All L*L shift pairs in lexicographic order."""
    if L < 1:
        raise DissectionError("L must be >= 1")
    for a in range(L):
        for b in range(L):
            yield (a, b)


@dataclass(frozen=True, order=True)
class Square:
    level: int
    ix: int
    iy: int


class Dissection:
    """Quadtree over a perturbed instance for one shift ``(a, b)``."""

    def __init__(self, pinst, a: int, b: int, m: int):
        L = pinst.L
        if not (0 <= a < L and 0 <= b < L):
            raise DissectionError(f"shift ({a}, {b}) outside [0, {L})")
        if not _is_pow2(m):
            raise DissectionError(f"portal density m={m} must be a power of two")
        self.pinst = pinst
        self.L = L
        self.Lp = 2 * L
        self.a, self.b, self.m = a, b, m
        self.x0 = a - L + 0.5
        self.y0 = b - L + 0.5
        self.lmax = int(math.log2(self.Lp))
        self.points = [tuple(p) for p in pinst.points]
        self.depot = tuple(pinst.depot)
        self.root = Square(0, 0, 0)
        self.tree: dict[Square, tuple[Square, ...] | None] = {}
        self._build(self.root)

    # ---- basic geometry -------------------------------------------------
    def side(self, level: int) -> float:
        return self.Lp / 2 ** level

    def corner(self, sq: Square) -> Point:
        s = self.side(sq.level)
        return (self.x0 + sq.ix * s, self.y0 + sq.iy * s)

    def bounds(self, sq: Square) -> tuple[float, float, float, float]:
        x, y = self.corner(sq)
        s = self.side(sq.level)
        return (x, y, x + s, y + s)

    def children(self, sq: Square) -> tuple[Square, ...]:
        return tuple(
            Square(sq.level + 1, 2 * sq.ix + dx, 2 * sq.iy + dy) for dx, dy in CHILD_OFFSETS
        )

    def parent(self, sq: Square) -> Square | None:
        if sq.level == 0:
            return None
        return Square(sq.level - 1, sq.ix // 2, sq.iy // 2)

    def square_of(self, level: int, pt: Point) -> Square:
        """Half-open square of the given level containing ``pt``."""
        s = self.side(level)
        return Square(level, int(math.floor((pt[0] - self.x0) / s)),
                      int(math.floor((pt[1] - self.y0) / s)))

    def contains(self, sq: Square, pt: Point, closed: bool = True) -> bool:
        x1, y1, x2, y2 = self.bounds(sq)
        if closed:
            return x1 <= pt[0] <= x2 and y1 <= pt[1] <= y2
        return x1 <= pt[0] < x2 and y1 <= pt[1] < y2

    def points_in(self, sq: Square) -> list[int]:
        return [i for i, p in enumerate(self.points) if self.contains(sq, p, closed=False)]

    def has_depot(self, sq: Square) -> bool:
        return self.contains(sq, self.depot, closed=False)

    def locations_in(self, sq: Square) -> set:
        locs = {self.points[i] for i in self.points_in(sq)}
        if self.has_depot(sq):
            locs.add(self.depot)
        return locs

    def is_split(self, sq: Square) -> bool:
        return self.tree.get(sq) is not None

    def _build(self, sq: Square) -> None:
        if len(self.locations_in(sq)) >= 2 and sq.level < self.lmax:
            kids = self.children(sq)
            self.tree[sq] = kids
            for c in kids:
                self._build(c)
        else:
            self.tree[sq] = None

    def dp_squares(self) -> list[Square]:
        """Squares of the compressed tree, deepest first."""
        return sorted(self.tree, key=lambda s: (-s.level, s.ix, s.iy))

    def leaf_of(self, pt: Point) -> Square:
        sq = self.root
        while self.tree[sq] is not None:
            sq = self.square_of(sq.level + 1, pt)
        return sq

    # ---- lines ------------------------------------------------------------
    def line_level(self, rel: int) -> int:
        """Level of the dissection line at relative integer offset ``rel``."""
        if rel <= 0 or rel >= self.Lp:
            return 0
        nu = (rel & -rel).bit_length() - 1
        return self.lmax - nu

    def vline_level(self, x: float) -> int:
        rel = x - self.x0
        if rel != int(rel):
            raise DissectionError(f"x={x} is not on a dissection line")
        return self.line_level(int(rel))

    def hline_level(self, y: float) -> int:
        rel = y - self.y0
        if rel != int(rel):
            raise DissectionError(f"y={y} is not on a dissection line")
        return self.line_level(int(rel))

    def boundary_level(self, pos: float, axis: int = 0) -> int:
        """Level a line at ``pos`` receives in the L-periodic dissection.

        The root here has side 2L, so its levels run one deeper than the
        wrapped dissection of side L; this undoes that offset.
        """
        lvl = self.vline_level(pos) if axis == 0 else self.hline_level(pos)
        return lvl - 1

    def weight(self, level: int) -> float:
        """Sum of d_l over levels l >= ``level`` (a level-j line bounds all deeper squares)."""
        return 2.0 * self.side(level) - 1.0

    def _range(self, lo: float, hi: float, origin: float) -> tuple[int, int]:
        A = math.floor(lo - origin) + 1
        B = math.floor(hi - origin)
        return max(A, 1), min(B, self.Lp - 1)

    def crossing_levels(self, lo: float, hi: float, origin: float) -> list[int]:
        """Per-level counts of lines at ``origin + i`` lying in ``(lo, hi]``."""
        counts = [0] * (self.lmax + 1)
        A, B = self._range(lo, hi, origin)
        if A > B:
            return counts
        prev = B - (A - 1)
        for s in range(1, self.lmax + 1):
            cur = B // 2 ** s - (A - 1) // 2 ** s
            counts[self.lmax - (s - 1)] += prev - cur
            prev = cur
        return counts

    def edge_weight(self, u: Point, v: Point) -> float:
        """Sum of line weights crossed by the straight edge u->v.

        A vertex lying on a line counts as being on its upper/right side, so
        the count is additive over the edges of a path.
        """
        total = 0.0
        for axis, origin in ((0, self.x0), (1, self.y0)):
            lo, hi = sorted((u[axis], v[axis]))
            if lo == hi:
                continue
            for lvl, c in enumerate(self.crossing_levels(lo, hi, origin)):
                if c:
                    total += c * self.weight(lvl)
        return total

    # ---- portals ------------------------------------------------------------
    def spacing(self, level: int) -> float:
        return self.side(level) / self.m

    def _side_positions(self, line_level: int, start: float, lo: float, hi: float) -> list[float]:
        s = self.spacing(line_level)
        first = math.ceil((lo - start) / s)
        last = math.floor((hi - start) / s)
        return [start + i * s for i in range(first, last + 1)]

    def boundary_portals(self, sq: Square) -> list[Point]:
        x1, y1, x2, y2 = self.bounds(sq)
        out = set()
        for x in (x1, x2):
            lvl = self.vline_level(x)
            for y in self._side_positions(lvl, self.y0, y1, y2):
                out.add((x, y))
        for y in (y1, y2):
            lvl = self.hline_level(y)
            for x in self._side_positions(lvl, self.x0, x1, x2):
                out.add((x, y))
        return sorted(out)

    def portals(self, sq: Square) -> list[Point]:
        """Boundary portals of ``sq``; the depot location is appended when inside."""
        out = self.boundary_portals(sq)
        if self.has_depot(sq):
            out.append((float(self.depot[0]), float(self.depot[1])))
        return out

    def internal_portals(self, sq: Square) -> dict[tuple[int, int], list[Point]]:
        """Portals strictly inside the four internal half sides of ``sq``.

        Keys are child index pairs.  The centre and the outer endpoints are
        excluded, so every glue point separates exactly two children.
        """
        x1, y1, x2, y2 = self.bounds(sq)
        s = self.side(sq.level)
        cx, cy = x1 + s / 2, y1 + s / 2
        step = self.spacing(sq.level + 1)
        k = int(round(s / 2 / step))
        low = [(cx, y1 + i * step) for i in range(1, k)]
        high = [(cx, cy + i * step) for i in range(1, k)]
        left = [(x1 + i * step, cy) for i in range(1, k)]
        right = [(cx + i * step, cy) for i in range(1, k)]
        return {(0, 1): low, (2, 3): high, (0, 2): left, (1, 3): right}

    def is_portal_on_line(self, pt: Point, axis: int) -> bool:
        """Whether ``pt`` (lying on a line of the given orientation) is a portal of it."""
        if axis == 0:
            lvl = self.vline_level(pt[0])
            along, origin = pt[1], self.y0
        else:
            lvl = self.hline_level(pt[1])
            along, origin = pt[0], self.x0
        q = (along - origin) / self.spacing(lvl)
        return abs(q - round(q)) < 1e-12
