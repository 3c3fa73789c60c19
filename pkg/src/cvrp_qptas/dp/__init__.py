"""Dynamic program over a shifted dissection.

``solve_dp`` finds the cheapest light, portal-respecting solution of a
perturbed instance under the extended objective; ``trace_back`` turns the
result into concrete tours in grid coordinates plus the drop demands of
every rounded segment.  With ``gamma = inf`` (exact mode) no segment is
rounded and tours respect the true capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from ..dissection import Dissection, Square
from ..instance import PerturbedInstance
from ..solution import Solution, Tour, Waypoint
from .common import (
    CLOSED,
    DPBudgetError,
    DPInfeasibleError,
    DPInternalError,
    DPParams,
    TourWalk,
)
from .exact import solve_exact, walk_cost
from .portalgraph import PortalGraph
from .relaxed import RelaxedEngine
from .thresholds import ThresholdSeq, thresholds

__all__ = [
    "DPBudgetError",
    "DPInfeasibleError",
    "DPInternalError",
    "DPParams",
    "DPOutcome",
    "DropDemand",
    "RelaxedSolution",
    "ShiftSearch",
    "solve_dp",
    "trace_back",
    "best_shift",
]


@dataclass
class DPOutcome:
    cost: float
    tours: list[TourWalk]
    graph: PortalGraph
    params: DPParams
    eps: float
    thresholds: ThresholdSeq | None
    engine: str
    cells: int
    fallbacks: int = 0

    @property
    def dissection(self) -> Dissection:
        return self.graph.d


@dataclass(frozen=True)
class DropDemand:
    """A rounded segment that must shed ``y`` of its active points.

    ``customers`` lists every customer of the segment in visiting order,
    entry to exit; the active ones are those not already dropped inside a
    smaller square, and there are exactly ``x`` of them.
    """

    square: Square
    level: int
    tour: int
    customers: tuple[int, ...]
    entry: tuple[float, float]
    exit: tuple[float, float]
    t: int
    x: int

    @property
    def y(self) -> int:
        return self.x - self.t


@dataclass
class RelaxedSolution:
    solution: Solution  # grid coordinates
    demands: list[DropDemand] = field(default_factory=list)
    cost: float = 0.0


def solve_dp(pinst: PerturbedInstance, d: Dissection, params: DPParams, eps: float) -> DPOutcome:
    """Cheapest solution for one dissection.

    Raises ``DPBudgetError`` when the table outgrows ``params.budget`` and
    ``DPInfeasibleError`` when no admissible root configuration exists.
    """
    if d.pinst is not pinst:
        raise ValueError("dissection was built over a different instance")
    g = PortalGraph(d, eps)
    k = pinst.capacity
    if pinst.n == 0:
        return DPOutcome(0.0, [], g, params, eps, None, "exact", 0)
    if params.exact:
        res = solve_exact(g, k, params.r, params.budget, engine=params.engine)
        return DPOutcome(
            cost=res.cost,
            tours=res.tours,
            graph=g,
            params=params,
            eps=eps,
            thresholds=None,
            engine="exact",
            cells=res.table.cells if res.table is not None else 0,
            fallbacks=res.fallbacks,
        )
    ts = thresholds(k, eps, pinst.n, params.tau_cap)
    eng = RelaxedEngine(g, k, params.r, params.gamma, ts, params.budget)
    cost, C = eng.solve()
    tours = []
    for exp in eng.expand(d.root, C):
        verts = exp.verts + [("D", 0)]
        counts = [0] * len(g.mult)
        for v in verts:
            if v[0] == "L":
                counts[v[1]] += v[2]
            elif v[0] == "D" and v[1]:
                counts[g.depot_loc] += v[1]
        tours.append(
            TourWalk(
                counts=tuple(counts),
                cost=walk_cost(g, verts),
                vertices=verts,
                source="config",
                roundings=exp.events,
            )
        )
    total = sum(t.cost for t in tours)
    if not math.isclose(total, cost, rel_tol=1e-9, abs_tol=1e-9):
        raise DPInternalError(f"traced walks cost {total} but the table says {cost}")
    return DPOutcome(cost, tours, g, params, eps, ts, "relaxed", eng.cells)


def trace_back(outcome: DPOutcome) -> RelaxedSolution:
    """Concrete tours (grid coordinates) and the drop demands of rounded segments."""
    g = outcome.graph
    # customers still unassigned, per location, in index order
    pools = [list(c) for c in g.loc_customers]
    tours: list[Tour] = []
    demands: list[DropDemand] = []
    for ti, walk in enumerate(outcome.tours):
        if walk.customers is not None:
            mine: dict[int, list[int]] = {}
            for i in sorted(walk.customers):
                mine.setdefault(g.customer_loc[i], []).append(i)
            for loc, cs in mine.items():
                for i in cs:
                    pools[loc].remove(i)
            source = mine
        else:
            source = None
        path: list[Waypoint] = []
        # customers served at each vertex position
        served: list[list[int]] = []
        for pos, v in enumerate(walk.vertices):
            here: list[int] = []
            if v[0] == "D":
                path.append(Waypoint(g.depot, is_depot=True))
                take = v[1]
                loc = g.depot_loc
            elif v[0] == "L":
                take, loc = v[2], v[1]
            else:
                path.append(Waypoint(g.xy(v[1])))
                take, loc = 0, None
            for _ in range(take):
                pool = source[loc] if source is not None else pools[loc]
                if not pool:
                    raise DPInternalError(f"location {loc} served more often than it has customers")
                i = pool.pop(0)
                here.append(i)
                path.append(Waypoint(g.loc_xy[loc], customer=i))
            served.append(here)
        custs = [w.customer for w in path if w.customer is not None]
        tours.append(Tour(customers=custs, path=path))
        for sq, idx, x, span in walk.roundings:
            seq = tuple(i for j in span for i in served[j])
            first, last = walk.vertices[span[0]], walk.vertices[span[-1]]
            demands.append(
                DropDemand(
                    square=sq,
                    level=sq.level,
                    tour=ti,
                    customers=seq,
                    entry=_vertex_xy(g, first),
                    exit=_vertex_xy(g, last),
                    t=outcome.thresholds.values[idx],
                    x=x,
                )
            )
    if any(pools[loc] for loc in range(len(pools))) and all(w.customers is None for w in outcome.tours):
        raise DPInternalError("trace-back left customers unserved")
    demands.sort(key=lambda dd: (-dd.level, dd.tour, dd.customers))
    return RelaxedSolution(Solution(tours=tours), demands, outcome.cost)


def _vertex_xy(g: PortalGraph, v) -> tuple[float, float]:
    if v[0] == "P":
        return g.xy(v[1])
    if v[0] == "L":
        return g.loc_xy[v[1]]
    return g.depot


@dataclass
class ShiftSearch:
    outcome: DPOutcome
    shift: tuple[int, int]
    tried: int
    skipped: list[tuple[tuple[int, int], str]]


def best_shift(
    pinst: PerturbedInstance,
    shifts: Iterable[tuple[int, int]],
    params: DPParams,
    eps: float,
) -> ShiftSearch:
    """Cheapest DP outcome over the given shifts; ties go to the earlier shift.

    A shift whose table exceeds the budget is skipped; if every shift is
    skipped the last budget error is re-raised.
    """
    best: DPOutcome | None = None
    best_ab = None
    tried = 0
    skipped: list = []
    last_err: Exception | None = None
    for a, b in shifts:
        tried += 1
        d = Dissection(pinst, a, b, params.m)
        try:
            out = solve_dp(pinst, d, params, eps)
        except (DPBudgetError, DPInfeasibleError) as e:
            skipped.append(((a, b), type(e).__name__))
            last_err = e
            continue
        if best is None or out.cost < best.cost - 1e-12 * max(1.0, abs(best.cost)):
            best, best_ab = out, (a, b)
    if best is None:
        if last_err is None:
            raise ValueError("no shifts given")
        raise last_err
    return ShiftSearch(best, best_ab, tried, skipped)
