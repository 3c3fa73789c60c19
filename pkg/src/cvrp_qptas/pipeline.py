"""End-to-end solving: DP tours for black points, tour partitioning for red ones."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dissection import enumerate_shifts
from .dp import DPParams, ShiftSearch, best_shift, trace_back
from .instance import Instance, lift_solution, perturb
from .oracle import exact_cvrp
from .partition import partition_solve
from .solution import Solution, Tour, is_feasible, total_length
from .typeassign import assign_types_derandomized, assign_types_random

SCHEMA_VERSION = 1
MODES = ("qptas", "partition", "exact")
# above this grid size the default shift policy samples instead of scanning
ALL_SHIFTS_MAX_L = 32
RANDOM_SHIFTS = 16


@dataclass(frozen=True)
class PipelineParams:
    eps: float = 1.0
    mode: str = "qptas"
    m: int = 4
    r: int = 2
    gamma: float = math.inf
    tau_cap: int | None = None
    budget: int = 2_000_000
    # "auto", "all", or a number of random shifts
    shifts: str | int = "auto"
    # overrides the policy with a single shift (a, b)
    fixed_shift: tuple[int, int] | None = None
    typing: str = "derandomized"
    seed: int = 0
    engine: str = "auto"
    # largest instance the exact mode accepts
    oracle_max_n: int = 8

    def dp_params(self) -> DPParams:
        return DPParams(
            m=self.m,
            r=self.r,
            gamma=self.gamma,
            tau_cap=self.tau_cap,
            budget=self.budget,
            engine=self.engine,
        )

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (0.0 < self.eps <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.eps}")
        if self.m < 1 or self.r < 1:
            raise ValueError("portals and r must be >= 1")
        if not math.isinf(self.gamma) and (self.gamma < 1 or self.gamma != int(self.gamma)):
            raise ValueError("gamma must be a positive integer or inf")
        if self.typing not in ("random", "derandomized"):
            raise ValueError(f"unknown typing method {self.typing!r}")
        if self.engine not in ("auto", "table"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if isinstance(self.shifts, str) and self.shifts not in ("auto", "all"):
            raise ValueError(f"shift policy must be auto, all or a count, got {self.shifts!r}")
        if isinstance(self.shifts, int) and self.shifts < 1:
            raise ValueError("shift count must be >= 1")
        if self.fixed_shift is not None and min(self.fixed_shift) < 0:
            raise ValueError(f"shift must be non-negative, got {self.fixed_shift}")


def shift_list(L: int, policy: str | int, seed: int) -> list[tuple[int, int]]:
    """Shifts to try: every pair, or a seeded sample of distinct pairs."""
    if policy == "all" or (policy == "auto" and L <= ALL_SHIFTS_MAX_L):
        return list(enumerate_shifts(L))
    count = RANDOM_SHIFTS if policy == "auto" else int(policy)
    count = min(count, L * L)
    rng = np.random.default_rng(seed)
    picks = rng.choice(L * L, size=count, replace=False)
    return sorted((int(p) // L, int(p) % L) for p in picks)


@dataclass
class PipelineResult:
    solution: Solution
    report: dict = field(default_factory=dict)

    def report_json(self) -> str:
        return json.dumps(self.report, sort_keys=True, indent=2)


def _params_dict(p: PipelineParams) -> dict:
    out = asdict(p)
    if p.fixed_shift is not None:
        out["fixed_shift"] = list(p.fixed_shift)
    out["gamma"] = None if math.isinf(p.gamma) else int(p.gamma)
    return out


def _base_report(inst: Instance, p: PipelineParams) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": p.mode,
        "params": _params_dict(p),
        "instance": {"n": inst.n, "k": inst.capacity},
    }


def solve_qptas(inst: Instance, params: PipelineParams = PipelineParams()) -> PipelineResult:
    """Solve ``inst`` in the requested mode and report how the answer was built."""
    params.validate()
    report = _base_report(inst, params)
    if params.mode == "partition":
        sol = partition_solve(inst)
        return _finish(inst, sol, report)
    if params.mode == "exact":
        sol, _ = exact_cvrp(inst, max_n=params.oracle_max_n)
        return _finish(inst, sol, report)

    pinst = perturb(inst, params.eps)
    if params.fixed_shift is not None:
        a, b = params.fixed_shift
        if a >= pinst.L or b >= pinst.L:
            raise ValueError(f"shift ({a}, {b}) outside [0, {pinst.L})")
        shifts = [(a, b)]
    else:
        shifts = shift_list(pinst.L, params.shifts, params.seed)
    search: ShiftSearch = best_shift(pinst, shifts, params.dp_params(), params.eps)
    out = search.outcome
    relaxed = trace_back(out)

    fallbacks: list = []
    if params.typing == "random":
        ta = assign_types_random(relaxed.demands, inst.n, params.seed)
    else:
        ta = assign_types_derandomized(relaxed.demands, pinst, fallbacks)
    red = set(ta.red())

    # black part: DP tours without their red customers, in original coordinates
    black_grid = []
    for t in relaxed.solution.tours:
        path = [w for w in t.path if w.customer is None or w.customer not in red]
        custs = [i for i in t.customers if i not in red]
        if custs:
            black_grid.append(Tour(customers=custs, path=path))
    black = lift_solution(pinst, Solution(tours=black_grid))
    red_sol = partition_solve(inst, sorted(red))
    sol = Solution(tours=black.tours + red_sol.tours)

    report["grid"] = {"L": pinst.L, "scale": pinst.scale}
    report["shift"] = list(search.shift)
    report["shifts_tried"] = search.tried
    report["shifts_skipped"] = len(search.skipped)
    report["dp"] = {
        "F": out.cost,
        "engine": out.engine,
        "cells": out.cells,
        "fallbacks": out.fallbacks,
        "thresholds": list(out.thresholds.values) if out.thresholds is not None else None,
        "drop_demands": [
            {
                "square": [dd.square.level, dd.square.ix, dd.square.iy],
                "tour": dd.tour,
                "t": dd.t,
                "x": dd.x,
                "y": dd.y,
                "customers": list(dd.customers),
            }
            for dd in relaxed.demands
        ],
    }
    report["typing"] = {
        "method": params.typing,
        "red": sorted(red),
        "fallbacks": len(fallbacks),
    }
    black_len = total_length(black, inst)
    red_len = total_length(red_sol, inst)
    return _finish(inst, sol, report, black_len, red_len)


def _finish(inst, sol, report, black_len=None, red_len=None) -> PipelineResult:
    total = total_length(sol, inst)
    report["lengths"] = {"total": total, "black": black_len, "red": red_len}
    sd = sol.to_dict(inst)
    report["tours"] = sd["tours"]
    if "portals_path" in sd:
        report["portals_path"] = sd["portals_path"]
    rep = is_feasible(sol, inst)
    report["feasible"] = rep.ok
    return PipelineResult(sol, report)

