"""Configuration DP with rounded segment counts (finite group size).

A configuration of square ``b`` is a sorted tuple of segments
``(p, q, via, tag)``: end portals (``p <= q``, or both ``CLOSED``), whether
the segment passes through the depot, and a tag ``(0, x)`` for an
unrounded segment carrying ``x`` active points or ``(1, i)`` for a segment
rounded down to threshold ``t_i``.

``L[b][C]`` is computed top-down with memoisation.  For a split square
every segment picks a *profile*: a chain of at most ``4r + 1`` child pieces
glued at internal portals, with tags whose recorded counts add up to the
segment's count (or round down to it).  Profiles are merged one segment at
a time into children configurations, which are then costed recursively.
The root has no configuration of its own to start from, so tours are added
one by one until the customers are covered.

The search is exhaustive and exponential; it is meant for instances of a
handful of points with ``m = 2`` and ``r = 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from ..dissection import Square
from .common import CLOSED, DPBudgetError, DPInfeasibleError, DPInternalError, rotate_to_depot
from .exact import TableEngine
from .portalgraph import PortalGraph
from .thresholds import ThresholdSeq

INF = math.inf


@dataclass
class Expansion:
    verts: list
    # (square, threshold index, recorded sum, vertex positions)
    events: list


class RelaxedEngine:
    def __init__(self, g: PortalGraph, k: int, r: int, gamma: float, ts: ThresholdSeq,
                 budget: int):
        self.g = g
        self.d = g.d
        self.k = k
        self.r = r
        self.gamma = gamma
        self.exact = math.isinf(gamma)
        self.ts = ts
        self.budget = budget
        self.cells = 0
        self.memo: dict = {}
        self._skel: dict = {}
        self._prof: dict = {}
        self._unr: dict = {}
        self.zero_tab = TableEngine(g, k, r, budget)
        self._npts = {sq: self._points_in(sq) for sq in self.d.tree}

    # ---- helpers -------------------------------------------------------------
    def _points_in(self, sq: Square) -> int:
        return len(self.d.points_in(sq))

    def _charge(self, sq, n=1):
        self.cells += n
        if self.cells > self.budget:
            raise DPBudgetError(
                f"configuration budget {self.budget} exceeded at square {sq} "
                f"({self.cells} cells materialised)"
            )

    def val(self, tag) -> int:
        return tag[1] if tag[0] == 0 else self.ts.values[tag[1]]

    def tags_for(self, w: int):
        out = [(0, w)]
        if not self.exact:
            for i, t in enumerate(self.ts.values):
                if t == w:
                    out.append((1, i))
        return out

    def round_ok(self, tag, total: int) -> bool:
        if tag[0] == 0:
            return total == tag[1]
        t = self.ts.values[tag[1]]
        return t <= total < t * self.ts.growth

    def groups_ok(self, segs) -> bool:
        if self.exact:
            return True
        ts = self.ts
        g = int(self.gamma)
        unr = [0] * len(ts.values)
        rnd = [0] * len(ts.values)
        for s in segs:
            tag = s[3]
            if tag[0] == 1:
                rnd[tag[1]] += 1
            else:
                b = ts.bucket(tag[1])
                if b is not None:
                    unr[b] += 1
        return all(u <= g for u in unr) and all(x % g == 0 for x in rnd)

    def unrounded_ok(self, segs) -> bool:
        """The part of the group constraints that adding segments cannot repair."""
        hit = self._unr.get(segs)
        if hit is None:
            unr = [0] * len(self.ts.values)
            for s in segs:
                tag = s[3]
                if tag[0] == 0:
                    b = self.ts.bucket(tag[1])
                    if b is not None:
                        unr[b] += 1
            hit = self._unr[segs] = max(unr) <= self.gamma
        return hit

    @staticmethod
    def canon(x, y, via, tag):
        if x == CLOSED or x <= y:
            return (x, y, via, tag)
        return (y, x, via, tag)

    # ---- leaves ------------------------------------------------------------------
    def _leaf_piece(self, sq: Square, seg) -> float:
        """Cost of one leaf segment, or INF."""
        g = self.g
        lf = g.leaves[sq]
        p, q, via, tag = seg
        c = self.val(tag)
        if tag[0] == 1 and c != self.ts.values[tag[1]]:
            return INF
        if p == CLOSED:
            return 0.0 if lf.has_depot and c >= 1 else INF
        pxy, qxy = g.xy(p), g.xy(q)
        if via:
            if not lf.has_depot:
                return INF
            return g.cost(pxy, g.depot) + g.cost(g.depot, qxy)
        if c == 0:
            if p == q or g.same_side(lf.bounds, pxy, qxy):
                return INF
            return g.cost(pxy, qxy)
        if lf.loc is None:
            return INF
        L = g.loc_xy[lf.loc]
        return g.cost(pxy, L) + g.cost(L, qxy)

    def _leaf_cost(self, sq: Square, C) -> float:
        g = self.g
        lf = g.leaves[sq]
        if not self.groups_ok(C):
            return INF
        total = 0
        cost = 0.0
        dl = g.depot_loc
        for seg in C:
            c = self.val(seg[3])
            if seg[2] or seg[0] == CLOSED:
                # served at the depot location
                if c and (dl is None or lf.loc != dl):
                    return INF
            total += c
            pc = self._leaf_piece(sq, seg)
            if pc == INF:
                return INF
            cost += pc
        need = g.mult[lf.loc] if lf.loc is not None else 0
        return cost if total == need else INF

    # ---- profiles --------------------------------------------------------------------
    def skeletons(self, sq: Square, p, q, via):
        """Child chains for a segment of ``sq``: tuples of (child, x, y, via)."""
        key = (sq, p, q, via)
        if key in self._skel:
            return self._skel[key]
        g, d, r = self.g, self.d, self.r
        out = []
        kids = d.tree[sq]
        has_dep = d.has_depot(sq)
        D = g.depot_child(sq) if has_dep else None
        bset = set(g.bport[sq])
        mine = g.glue_of[sq]

        def extend(child, pos, cv, via_used, pieces, target):
            for y in g.bport[child]:
                gp = g.glue[y]
                for vflag in self._via_opts(child, D, via_used, need):
                    used = via_used + vflag
                    pc = (child, pos, y, vflag)
                    if gp.square == sq:
                        h = gp.half
                        if cv[h] + 1 > r:
                            continue
                        cvn = list(cv)
                        cvn[h] += 1
                        nxt = g.other_side(y, child)
                        if target is not None and y == target and nxt == D and used == 1:
                            out.append(tuple(pieces) + (pc,))
                        extend(nxt, y, tuple(cvn), used, pieces + [pc], target)
                    elif target is None and y == q and y in bset and used == via:
                        out.append(tuple(pieces) + (pc,))

        need = 1 if p == CLOSED else via
        if p == CLOSED:
            if has_dep:
                out.append(((D, CLOSED, CLOSED, 1),))
                for xa in mine:
                    if D not in g.glue[xa].sides:
                        continue
                    for xb in mine:
                        if D not in g.glue[xb].sides:
                            continue
                        h = g.glue[xb].half
                        cv = [0, 0, 0, 0]
                        cv[h] += 1
                        if cv[h] > r:
                            continue
                        first = (D, xa, xb, 1)
                        extend(g.other_side(xb, D), xb, tuple(cv), 1, [first], xa)
        else:
            pxy = g.xy(p)
            for c in kids:
                if d.contains(c, pxy) and p in g.bport[c]:
                    extend(c, p, (0, 0, 0, 0), 0, [], None)
        self._skel[key] = out
        return out

    def _via_opts(self, child, D, used, want):
        if want and not used and child == D:
            return (0, 1)
        return (0,)

    def _piece_ok(self, child: Square, x, y, via, w: int) -> bool:
        """Cheap necessary condition for a child piece to be realisable."""
        if x == y and x != CLOSED and w == 0 and not via:
            return False
        if self.g.is_leaf(child):
            return self._leaf_piece(child, (x, y, via, (0, w))) < INF
        return True

    def zero_cost(self, child: Square, x, y, via) -> float:
        """Cheapest piece through ``child`` serving nobody."""
        if x == CLOSED:
            return INF
        hit = self.zero_tab.table(child, x).get((y, self.zero_tab.zero, via))
        return hit[0] if hit is not None else INF

    def profiles(self, sq: Square, seg):
        """Profiles of one segment, cheapest per induced children configurations.

        Each profile is ``(parts, add, fixed, pieces)``: the non-empty pieces
        per child in canonical form, per-child recorded sums, the cost of the
        pieces serving nobody and the full piece chain ``(child, x, y, via,
        tag)``.  Pieces serving nobody never touch group constraints or
        coverage, so they are costed independently.
        """
        key = (sq, seg)
        hit = self._prof.get(key)
        if hit is not None:
            return hit
        p, q, via, tag = seg
        kids = self.d.tree[sq]
        index = {c: i for i, c in enumerate(kids)}
        best: dict = {}
        for sk in self.skeletons(sq, p, q, via):
            caps = [self._npts[c] for c, *_ in sk]
            lo = self.val(tag)
            hi = lo + 1 if tag[0] == 0 else math.ceil(lo * self.ts.growth) + 1
            for total in range(lo, hi):
                if not self.round_ok(tag, total):
                    continue
                if p == q and p != CLOSED and total == 0 and not via:
                    continue
                for ws in _compositions(total, caps):
                    fixed = 0.0
                    for (c, x, y, v), w in zip(sk, ws):
                        if w == 0:
                            fixed += self.zero_cost(c, x, y, v)
                        elif not self._piece_ok(c, x, y, v, w):
                            fixed = INF
                        if fixed == INF:
                            break
                    if fixed == INF:
                        continue
                    add = [0, 0, 0, 0]
                    for (c, *_), w in zip(sk, ws):
                        add[index[c]] += w
                    for tags in itertools.product(*(self.tags_for(w) for w in ws)):
                        pieces = tuple((c, x, y, v, t) for (c, x, y, v), t in zip(sk, tags))
                        parts = [[], [], [], []]
                        for c, x, y, v, t in pieces:
                            if t != (0, 0):
                                parts[index[c]].append(self.canon(x, y, v, t))
                        pk = tuple(tuple(sorted(pp)) for pp in parts)
                        old = best.get(pk)
                        if old is None or fixed < old[2]:
                            best[pk] = (pk, tuple(add), fixed, pieces)
        out = [best[pk] for pk in sorted(best)]
        self._prof[key] = out
        return out

    # ---- split squares ---------------------------------------------------------------
    def cost(self, sq: Square, C) -> float:
        key = (sq, C)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        self._charge(sq)
        if self.g.is_leaf(sq):
            val = (self._leaf_cost(sq, C), None)
        else:
            val = self._split_cost(sq, C)
        self.memo[key] = val
        return val[0]

    def _split_cost(self, sq: Square, C):
        if not self.groups_ok(C):
            return (INF, None)
        kids = self.d.tree[sq]
        index = {c: i for i, c in enumerate(kids)}
        caps = [self._npts[c] for c in kids]
        # children configurations -> (per-child sums, cost of empty pieces, profiles)
        states = {((), (), (), ()): ((0, 0, 0, 0), 0.0, ())}
        c0, c1, c2, c3 = caps
        check = not self.exact
        for seg in C:
            nxt = {}
            profs = [
                (tuple((i, pp) for i, pp in enumerate(parts) if pp), add, pf, pieces)
                for parts, add, pf, pieces in self.profiles(sq, seg)
            ]
            for st, (sums, fixed, choice) in states.items():
                s0, s1, s2, s3 = sums
                for touched, (a0, a1, a2, a3), pf, pieces in profs:
                    ns = (s0 + a0, s1 + a1, s2 + a2, s3 + a3)
                    if ns[0] > c0 or ns[1] > c1 or ns[2] > c2 or ns[3] > c3:
                        continue
                    key = list(st)
                    ok = True
                    for i, pp in touched:
                        merged = tuple(sorted(key[i] + pp))
                        if check and not self.unrounded_ok(merged):
                            ok = False
                            break
                        key[i] = merged
                    if not ok:
                        continue
                    key = tuple(key)
                    nf = fixed + pf
                    old = nxt.get(key)
                    if old is None or nf < old[1]:
                        nxt[key] = (ns, nf, choice + (pieces,))
            states = nxt
            self._charge(sq, len(states))
        best, best_choice = INF, None
        for st in sorted(states):
            sums, tot, choice = states[st]
            if self.exact and sums != tuple(caps):
                continue
            for i, c in enumerate(kids):
                if tot >= best:
                    break
                tot += self.cost(c, st[i])
            if tot < best:
                best, best_choice = tot, (st, choice)
        return (best, best_choice)

    # ---- root -----------------------------------------------------------------------
    def root_tags(self):
        tags = [(0, v) for v in range(1, self.k + 1)]
        if not self.exact:
            tags += [(1, i) for i, t in enumerate(self.ts.values) if t <= self.k]
        return tags

    def _root_count_ok(self, combo, n: int) -> bool:
        rec = sum(self.val(t) for t in combo)
        if self.exact:
            return rec == n
        # each rounding keeps the actual count below growth times the recorded one
        levels = self.d.lmax + 1
        return rec <= n and rec * self.ts.growth ** levels >= n

    def solve(self):
        """Best root configuration of closed tours and its cost."""
        d = self.d
        root = d.root
        n = d.pinst.n
        tags = self.root_tags()
        best, best_C = INF, None
        # every multiset of tour tags, fewest tours first
        for T in range(1, n + 1):
            for combo in itertools.combinations_with_replacement(tags, T):
                if not self._root_count_ok(combo, n):
                    continue
                C = tuple(sorted((CLOSED, CLOSED, 1, t) for t in combo))
                if not self.groups_ok(C):
                    continue
                c = self.cost(root, C)
                if c < best:
                    best, best_C = c, C
        if best_C is None:
            raise DPInfeasibleError("no admissible root configuration")
        return best, best_C

    # ---- trace ---------------------------------------------------------------------
    def expand(self, sq: Square, C):
        """Per-segment expansions of configuration ``C`` (in ``C`` order)."""
        if self.g.is_leaf(sq):
            return [self._leaf_expand(sq, seg) for seg in C]
        hit = self.memo.get((sq, C))
        if hit is None or hit[1] is None:
            raise DPInternalError(f"no back-pointer for {sq}")
        st, profs = hit[1]
        kids = self.d.tree[sq]
        pools = {}
        for i, c in enumerate(kids):
            exps = self.expand(c, st[i]) if st[i] else []
            pools[c] = {}
            for seg, e in zip(st[i], exps):
                pools[c].setdefault(seg, []).append(e)
        out = []
        for seg, prof in zip(C, profs):
            parts = []
            for c, x, y, v, t in prof:
                if t == (0, 0):
                    z = self.zero_tab.vertices(c, x, (y, self.zero_tab.zero, v))
                    parts.append(Expansion(z, []))
                    continue
                key = self.canon(x, y, v, t)
                e = pools[c][key].pop(0)
                if key[0] != x:
                    e = _reverse(e)
                parts.append(e)
            total = sum(self.val(t) for *_, t in prof)
            exp = _concat(parts)
            if seg[0] == CLOSED and not (len(prof) == 1 and prof[0][1] == CLOSED):
                exp = _rotate(exp)
            if seg[3][0] == 1:
                exp.events.append((sq, seg[3][1], total, list(range(len(exp.verts)))))
            out.append(exp)
        return out

    def _leaf_expand(self, sq: Square, seg) -> Expansion:
        g = self.g
        lf = g.leaves[sq]
        p, q, via, tag = seg
        c = self.val(tag)
        if p == CLOSED:
            verts = [("D", c)]
        elif via:
            verts = [("P", p), ("D", c), ("P", q)]
        elif c == 0:
            verts = [("P", p), ("P", q)]
        else:
            verts = [("P", p), ("L", lf.loc, c), ("P", q)]
        ev = []
        if tag[0] == 1:
            ev.append((sq, tag[1], c, list(range(len(verts)))))
        return Expansion(verts, ev)


def _compositions(total: int, caps: list[int]):
    """All ways to write ``total`` as bounded non-negative parts."""
    if not caps:
        if total == 0:
            yield ()
        return
    head, rest = caps[0], caps[1:]
    room = sum(rest)
    for w in range(max(0, total - room), min(head, total) + 1):
        for tail in _compositions(total - w, rest):
            yield (w,) + tail


def _reverse(e: Expansion) -> Expansion:
    n = len(e.verts)
    return Expansion(
        e.verts[::-1],
        [(sq, i, x, [n - 1 - j for j in pos][::-1]) for sq, i, x, pos in e.events],
    )


def _concat(parts: list[Expansion]) -> Expansion:
    verts: list = []
    events: list = []
    for p in parts:
        shift = len(verts)
        if verts and p.verts and verts[-1] == p.verts[0] and p.verts[0][0] == "P":
            shift -= 1
            verts.extend(p.verts[1:])
        else:
            verts.extend(p.verts)
        events.extend((sq, i, x, [j + shift for j in pos]) for sq, i, x, pos in p.events)
    return Expansion(verts, events)


def _rotate(e: Expansion) -> Expansion:
    """Rotate a cyclic expansion (first vertex repeated at the end) to start at the depot."""
    verts = e.verts
    n = len(verts)
    if n > 1 and verts[0] == verts[-1] and verts[0][0] == "P":
        n -= 1
        base = verts[:-1]
    else:
        base = verts
    start = next(i for i, v in enumerate(base) if v[0] == "D")
    rot = rotate_to_depot(list(verts))[:-1]

    def mp(j):
        return (j % n - start) % n

    return Expansion(rot, [(sq, i, x, [mp(j) for j in pos]) for sq, i, x, pos in e.events])
