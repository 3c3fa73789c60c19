"""Exact-mode DP (no rounding).

Without rounding, a square's table entry splits into independent per
segment costs once each segment's served points are fixed, so the table is
stored per segment: ``R[b][start][(end, counts, via)]`` is the cheapest
portal-respecting path through ``b`` from ``start`` to ``end`` that serves
``counts`` customers per location, crosses each internal half side of
``b`` at most ``r`` times, and passes through the depot iff ``via``.  A
root entry with ``start == end == CLOSED`` is a whole tour.

Two engines produce these root entries:

* ``TableEngine`` builds them square by square (children first, searched
  lazily from each start portal).
* ``GraphEngine`` finds the cheapest walk for a customer set on the portal
  graph ignoring lightness, then checks every segment's crossing counts.
  When the check passes the walk is also optimal for the constrained
  problem; otherwise the table engine supplies the entry.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

from ..dissection import Square
from .common import (
    CLOSED,
    DPBudgetError,
    DPInfeasibleError,
    DPInternalError,
    TourWalk,
    Vertex,
    concat,
    rotate_to_depot,
)
from .portalgraph import PortalGraph


def _add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def vertex_xy(g: PortalGraph, v: Vertex):
    if v[0] == "P":
        return g.xy(v[1])
    if v[0] == "L":
        return g.loc_xy[v[1]]
    return g.depot


def walk_cost(g: PortalGraph, verts: list[Vertex]) -> float:
    pts = [vertex_xy(g, v) for v in verts]
    return sum(g.cost(pts[i], pts[i + 1]) for i in range(len(pts) - 1) if pts[i] != pts[i + 1])


def walk_crossings(g: PortalGraph, verts: list[Vertex]) -> dict:
    """Per split square, the half-side crossing counts of each segment."""
    d = g.d
    pts = [vertex_xy(g, v) for v in verts]
    moves = [(pts[i], pts[i + 1]) for i in range(len(pts) - 1) if pts[i] != pts[i + 1]]
    # vertex between move j and j+1
    joints = []
    for i in range(len(pts) - 1):
        if pts[i] != pts[i + 1]:
            joints.append(verts[i + 1])
    out = {}
    for b, pids in g.glue_of.items():
        x1, y1, x2, y2 = d.bounds(b)
        inside = [
            x1 < (u[0] + v[0]) / 2 < x2 and y1 < (u[1] + v[1]) / 2 < y2 for u, v in moves
        ]
        runs: list[list[int]] = []
        for j, ins in enumerate(inside):
            if not ins:
                continue
            if runs and runs[-1][-1] == j - 1:
                runs[-1].append(j)
            else:
                runs.append([j])
        if len(runs) > 1 and d.has_depot(b) and runs[0][0] == 0 and runs[-1][-1] == len(moves) - 1:
            runs[0] = runs.pop() + runs[0]
        per_seg = []
        mine = set(pids)
        for run in runs:
            cv = [0, 0, 0, 0]
            for a, bb in zip(run, run[1:]):
                if bb != a + 1:
                    continue
                v = joints[a]
                if v[0] == "P" and v[1] in mine:
                    cv[g.glue[v[1]].half] += 1
            per_seg.append(cv)
        out[b] = per_seg
    return out


def walk_is_light(g: PortalGraph, verts: list[Vertex], r: int) -> bool:
    return all(max(cv) <= r for segs in walk_crossings(g, verts).values() for cv in segs)


# ---------------------------------------------------------------------------
# table engine
# ---------------------------------------------------------------------------


@dataclass
class _Search:
    results: dict = field(default_factory=dict)  # key -> (cost, sid, piece)
    states: list = field(default_factory=list)  # sid -> (prev_sid, piece)


class TableEngine:
    def __init__(self, g: PortalGraph, k: int, r: int, budget: int):
        self.g = g
        self.k = k
        self.r = r
        self.budget = budget
        self.cells = 0
        self.memo: dict[tuple[Square, int], _Search] = {}
        self.zero = tuple(0 for _ in g.mult)
        self._bset = {sq: set(p) for sq, p in g.bport.items()}

    def _charge(self, sq: Square, n: int = 1) -> None:
        self.cells += n
        if self.cells > self.budget:
            raise DPBudgetError(
                f"table budget {self.budget} exceeded at square {sq} "
                f"({self.cells} cells materialised)"
            )

    def _unit(self, loc: int, c: int) -> tuple:
        v = list(self.zero)
        v[loc] = c
        return tuple(v)

    def table(self, sq: Square, start: int) -> dict:
        key = (sq, start)
        s = self.memo.get(key)
        if s is None:
            s = self._leaf(sq, start) if self.g.is_leaf(sq) else self._split(sq, start)
            self.memo[key] = s
        return s.results

    # ---- leaves ------------------------------------------------------------
    def _leaf(self, sq: Square, x: int) -> _Search:
        g = self.g
        lf = g.leaves[sq]
        s = _Search()
        res = s.results
        D = g.depot
        dl = g.depot_loc
        dmult = g.mult[dl] if dl is not None else 0

        def put(key, cost, piece):
            old = res.get(key)
            if old is None or cost < old[0]:
                res[key] = (cost, None, piece)

        if x == CLOSED:
            if lf.has_depot:
                for c in range(1, min(dmult, self.k) + 1):
                    put((CLOSED, self._unit(dl, c), 1), 0.0, ("closed", c))
            self._charge(sq, len(res))
            return s
        xy = g.xy(x)
        for y in lf.pids:
            yxy = g.xy(y)
            if y != x and not g.same_side(lf.bounds, xy, yxy):
                put((y, self.zero, 0), g.cost(xy, yxy), ("straight",))
            if lf.loc is not None:
                L = g.loc_xy[lf.loc]
                base = g.cost(xy, L) + g.cost(L, yxy)
                for c in range(1, min(g.mult[lf.loc], self.k) + 1):
                    put((y, self._unit(lf.loc, c), 0), base, ("loc", lf.loc, c))
            if lf.has_depot:
                base = g.cost(xy, D) + g.cost(D, yxy)
                for c in range(0, min(dmult, self.k) + 1):
                    cnt = self._unit(dl, c) if dl is not None else self.zero
                    put((y, cnt, 1), base, ("depot", c))
        self._charge(sq, len(res))
        return s

    def _leaf_vertices(self, sq: Square, x: int, key, piece) -> list[Vertex]:
        y = key[0]
        kind = piece[0]
        if kind == "closed":
            return [("D", piece[1])]
        if kind == "straight":
            return [("P", x), ("P", y)]
        if kind == "loc":
            return [("P", x), ("L", piece[1], piece[2]), ("P", y)]
        return [("P", x), ("D", piece[1]), ("P", y)]

    # ---- split squares -------------------------------------------------------
    def _split(self, sq: Square, x: int) -> _Search:
        g = self.g
        d = g.d
        s = _Search()
        heap: list = []
        best: dict = {}
        counter = itertools.count()
        mult, k, r = g.mult, self.k, self.r
        bset = self._bset[sq]

        def push(state, cost, prev, piece):
            old = best.get(state)
            if old is not None and old <= cost:
                return
            best[state] = cost
            sid = len(s.states)
            s.states.append((prev, piece))
            heapq.heappush(heap, (cost, next(counter), sid, state))
            self._charge(sq)

        def record(key, cost, sid, piece):
            old = s.results.get(key)
            if old is None or cost < old[0]:
                s.results[key] = (cost, sid, piece)

        cv0 = (0, 0, 0, 0)
        if x == CLOSED:
            if not d.has_depot(sq):
                return s
            D = g.depot_child(sq)
            for key, (c, _, _) in self.table(D, CLOSED).items():
                record(key, c, None, (D, CLOSED, key))
            for xa in g.glue_of[sq]:
                if D not in g.glue[xa].sides:
                    continue
                for key, (c, _, _) in self.table(D, xa).items():
                    y, S2, v2 = key
                    if v2 != 1 or y == CLOSED or g.glue[y].square != sq:
                        continue
                    h = g.glue[y].half
                    cv = list(cv0)
                    cv[h] += 1
                    if cv[h] > r:
                        continue
                    push((g.other_side(y, D), y, S2, tuple(cv), 1, xa), c, None, (D, xa, key))
        else:
            xy = g.xy(x)
            for c in d.tree[sq]:
                if d.contains(c, xy):
                    push((c, x, self.zero, cv0, 0, None), 0.0, None, None)

        while heap:
            cost, _, sid, state = heapq.heappop(heap)
            if best.get(state, math.inf) < cost:
                continue
            child, pos, S, cv, via, target = state
            for key, (c2, _, _) in self.table(child, pos).items():
                y, S2, v2 = key
                if y == CLOSED:
                    continue
                if via + v2 > 1:
                    continue
                Sn = _add(S, S2)
                if sum(Sn) > k or any(a > b for a, b in zip(Sn, mult)):
                    continue
                ncost = cost + c2
                piece = (child, pos, key)
                gp = g.glue[y]
                if gp.square == sq:
                    h = gp.half
                    if cv[h] + 1 > r:
                        continue
                    cvn = list(cv)
                    cvn[h] += 1
                    nxt = g.other_side(y, child)
                    if target is not None and y == target and nxt == g.depot_child(sq):
                        if via + v2 == 1:
                            record((CLOSED, Sn, 1), ncost, sid, piece)
                    push((nxt, y, Sn, tuple(cvn), via + v2, target), ncost, sid, piece)
                elif target is None and y in bset:
                    record((y, Sn, via + v2), ncost, sid, piece)
        return s

    # ---- trace ------------------------------------------------------------------
    def vertices(self, sq: Square, start: int, key) -> list[Vertex]:
        if (sq, start) not in self.memo:
            self.table(sq, start)
        s = self.memo[(sq, start)]
        if key not in s.results:
            raise DPInternalError(f"missing table entry {key} at {sq}")
        cost, sid, piece = s.results[key]
        if self.g.is_leaf(sq):
            return self._leaf_vertices(sq, start, key, piece)
        pieces = [piece]
        while sid is not None:
            prev, pc = s.states[sid]
            if pc is not None:
                pieces.append(pc)
            sid = prev
        pieces.reverse()
        parts = [self.vertices(c, st, kk) for c, st, kk in pieces]
        if start == CLOSED:
            if len(pieces) == 1 and pieces[0][1] == CLOSED:
                return parts[0]
            # via piece first, then the return path; the cycle closes at its start portal
            cyc = concat(parts)
            return rotate_to_depot(cyc)[:-1]
        return concat(parts)

    def root_entries(self) -> dict:
        root = self.g.d.root
        return {key[1]: v[0] for key, v in self.table(root, CLOSED).items() if any(key[1])}

    def root_walk(self, counts: tuple) -> list[Vertex]:
        return self.vertices(self.g.d.root, CLOSED, (CLOSED, counts, 1)) + [("D", 0)]


# ---------------------------------------------------------------------------
# graph engine
# ---------------------------------------------------------------------------


class GraphEngine:
    """Cheapest walks between locations on the glue-portal graph."""

    def __init__(self, g: PortalGraph):
        self.g = g
        self._sp: dict = {}
        self._leaf_of_loc = {}
        for sq, lf in g.leaves.items():
            if lf.loc is not None:
                self._leaf_of_loc[lf.loc] = sq
            if lf.has_depot:
                self._leaf_of_loc["D"] = sq

    def _xy(self, key):
        return self.g.depot if key == "D" else self.g.loc_xy[key]

    def _sssp(self, src):
        g = self.g
        if src in self._sp:
            return self._sp[src]
        sxy = self._xy(src)
        lf0 = g.leaves[self._leaf_of_loc[src]]
        distm: dict = {}
        prev: dict = {}
        tgt: dict = {}
        heap: list = []
        cnt = itertools.count()
        for v in lf0.pids:
            node = (v, 1 - g.side_of(lf0.sq, v))
            c = g.cost(sxy, g.xy(v))
            if c < distm.get(node, math.inf):
                distm[node] = c
                prev[node] = None
                heapq.heappush(heap, (c, next(cnt), node))
        while heap:
            c, _, node = heapq.heappop(heap)
            if c > distm[node]:
                continue
            pid, side = node
            pxy = g.xy(pid)
            for lsq in g.touching[pid][side]:
                lf = g.leaves[lsq]
                for key in self._targets(lf):
                    if key == src:
                        continue
                    cc = c + g.cost(pxy, self._xy(key))
                    if cc < tgt.get(key, (math.inf,))[0]:
                        tgt[key] = (cc, node)
                for v in lf.pids:
                    if v == pid:
                        continue
                    vxy = g.xy(v)
                    if g.same_side(lf.bounds, pxy, vxy):
                        continue
                    nn = (v, 1 - g.side_of(lsq, v))
                    cc = c + g.cost(pxy, vxy)
                    if cc < distm.get(nn, math.inf):
                        distm[nn] = cc
                        prev[nn] = node
                        heapq.heappush(heap, (cc, next(cnt), nn))
        self._sp[src] = (tgt, prev)
        return tgt, prev

    def _targets(self, lf):
        out = []
        if lf.loc is not None and lf.loc != self.g.depot_loc:
            out.append(lf.loc)
        if lf.has_depot:
            out.append("D")
        return out

    def path(self, a, b) -> tuple[float, list[int]]:
        """Cost and glue portals on the cheapest walk from location a to b."""
        if a == b:
            return 0.0, []
        tgt, prev = self._sssp(a)
        if b not in tgt:
            return math.inf, []
        cost, node = tgt[b]
        pids = []
        while node is not None:
            pids.append(node[0])
            node = prev[node]
        return cost, pids[::-1]

    def tour(self, counts: tuple) -> tuple[float, list[Vertex]]:
        g = self.g
        dl = g.depot_loc
        locs = [l for l, c in enumerate(counts) if c > 0 and l != dl]
        at_depot = counts[dl] if dl is not None else 0
        if not locs:
            return 0.0, [("D", at_depot), ("D", 0)]
        best, best_order = math.inf, None
        for order in itertools.permutations(locs):
            seq = ["D", *order, "D"]
            c = sum(self.path(seq[i], seq[i + 1])[0] for i in range(len(seq) - 1))
            if c < best - 1e-9 * max(1.0, abs(best)) or best_order is None and c < math.inf:
                best, best_order = c, seq
        if best_order is None:
            return math.inf, []
        verts: list[Vertex] = [("D", at_depot)]
        for i in range(len(best_order) - 1):
            _, pids = self.path(best_order[i], best_order[i + 1])
            verts.extend(("P", p) for p in pids)
            nxt = best_order[i + 1]
            verts.append(("D", 0) if nxt == "D" else ("L", nxt, counts[nxt]))
        return best, verts


# ---------------------------------------------------------------------------
# root assembly
# ---------------------------------------------------------------------------


@dataclass
class ExactResult:
    cost: float
    tours: list[TourWalk]
    table: TableEngine | None
    fallbacks: int = 0


def counts_of(g: PortalGraph, customers) -> tuple:
    v = [0] * len(g.mult)
    for i in customers:
        v[g.customer_loc[i]] += 1
    return tuple(v)


def solve_exact(g: PortalGraph, k: int, r: int, budget: int, engine: str = "auto") -> ExactResult:
    n = g.d.pinst.n
    table = TableEngine(g, k, r, budget)
    graph = GraphEngine(g) if engine == "auto" else None
    entries: dict[tuple, tuple[float, list[Vertex], str]] = {}
    fallbacks = 0
    root_cache = None

    def entry(S):
        nonlocal fallbacks, root_cache
        if S in entries:
            return entries[S]
        val = None
        if graph is not None:
            c, verts = graph.tour(S)
            if math.isfinite(c) and walk_is_light(g, verts, r):
                val = (c, verts, "graph")
        if val is None:
            if graph is not None:
                fallbacks += 1
            if root_cache is None:
                root_cache = table.root_entries()
            c = root_cache.get(S, math.inf)
            val = (c, table.root_walk(S) if math.isfinite(c) else [], "table")
        entries[S] = val
        return val

    full = 1 << n
    block = {}
    for mask in range(1, full):
        if bin(mask).count("1") > k:
            continue
        S = counts_of(g, [i for i in range(n) if mask >> i & 1])
        block[mask] = entry(S)[0]
    best = [math.inf] * full
    choice = [0] * full
    best[0] = 0.0
    for mask in range(1, full):
        low = mask & -mask
        rest = mask ^ low
        sub = rest
        while True:
            b = sub | low
            bc = block.get(b, math.inf)
            if bc < math.inf:
                c = bc + best[mask ^ b]
                if c < best[mask] - 1e-12:
                    best[mask], choice[mask] = c, b
            if sub == 0:
                break
            sub = (sub - 1) & rest
    if not math.isfinite(best[full - 1]):
        raise DPInfeasibleError("no admissible root configuration (check m >= 2 and r >= 1)")
    tours = []
    mask = full - 1
    while mask:
        b = choice[mask]
        members = [i for i in range(n) if b >> i & 1]
        S = counts_of(g, members)
        c, verts, src = entry(S)
        tours.append(TourWalk(counts=S, cost=c, vertices=verts, source=src, customers=members))
        mask ^= b
    return ExactResult(cost=best[full - 1], tours=tours, table=table, fallbacks=fallbacks)
