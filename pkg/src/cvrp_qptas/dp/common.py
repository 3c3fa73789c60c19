"""Shared DP types: errors, parameters, walks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

CLOSED = -1


class DPBudgetError(RuntimeError):
    """The table outgrew its cell budget."""


class DPInfeasibleError(RuntimeError):
    """No admissible root configuration exists."""


class DPInternalError(RuntimeError):
    """Back-pointers do not reconstruct a consistent solution."""


@dataclass(frozen=True)
class DPParams:
    m: int = 4
    r: int = 2
    gamma: float = math.inf
    tau_cap: int | None = None
    budget: int = 2_000_000
    # "auto": fast portal-graph search with a per-tour fallback to the
    # square-by-square table; "table": always build the table
    engine: str = "auto"

    @property
    def exact(self) -> bool:
        return math.isinf(self.gamma)


# Walk vertices:
#   ("D", c)       depot, serving c customers located at the depot
#   ("P", pid)     glue portal
#   ("L", loc, c)  customer location, serving c customers there
Vertex = tuple


def concat(parts: list[list[Vertex]]) -> list[Vertex]:
    out: list[Vertex] = []
    for p in parts:
        if out and p and out[-1] == p[0] and p[0][0] == "P":
            out.extend(p[1:])
        else:
            out.extend(p)
    return out


def rotate_to_depot(cycle: list[Vertex]) -> list[Vertex]:
    """Closed walk starting and ending at the depot from a cyclic vertex list."""
    if cycle and cycle[0] == cycle[-1] and cycle[0][0] == "P":
        cycle = cycle[:-1]
    for i, v in enumerate(cycle):
        if v[0] == "D":
            return cycle[i:] + cycle[:i] + [("D", 0)]
    raise DPInternalError("closed walk misses the depot")


@dataclass
class TourWalk:
    counts: tuple[int, ...]
    cost: float
    vertices: list[Vertex]
    source: str = "graph"
    customers: list[int] | None = None
    # (square, threshold index, recorded value, vertex span) per rounding
    roundings: list = field(default_factory=list)
