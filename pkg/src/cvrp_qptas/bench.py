"""Benchmark harness: solve a generated corpus in several modes and compare
against the exact oracle where it fits."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .instance import Instance, generate_instance
from .oracle import MAX_CVRP, exact_cvrp
from .pipeline import PipelineParams, solve_qptas

COLUMNS = ("instance", "n", "k", "dist", "seed", "mode", "length", "optimum", "ratio", "feasible", "seconds")


@dataclass(frozen=True)
class CorpusSpec:
    count: int
    n_min: int = 1
    n_max: int = 8
    k_min: int = 1
    k_max: int = 4
    dists: tuple[str, ...] = ("uniform", "clustered")
    seed: int = 0


def generate_corpus(spec: CorpusSpec) -> list[tuple[str, int, Instance]]:
    """Deterministic ``(dist, seed, instance)`` triples."""
    rng = np.random.default_rng(spec.seed)
    out = []
    for i in range(spec.count):
        n = int(rng.integers(spec.n_min, spec.n_max + 1))
        k = int(rng.integers(spec.k_min, spec.k_max + 1))
        dist = spec.dists[i % len(spec.dists)]
        seed = spec.seed * 100_000 + i
        out.append((dist, seed, generate_instance(n, k, dist, seed)))
    return out


def bench(
    spec: CorpusSpec,
    modes: Sequence[str],
    params: PipelineParams = PipelineParams(),
    timing: bool = True,
) -> list[dict]:
    """One row per (instance, mode).  ``timing=False`` zeroes the wall-clock
    column so repeated runs produce identical tables."""
    rows = []
    for idx, (dist, seed, inst) in enumerate(generate_corpus(spec)):
        opt = exact_cvrp(inst)[1] if inst.n <= MAX_CVRP else None
        for mode in modes:
            t0 = time.perf_counter()
            res = solve_qptas(inst, replace(params, mode=mode))
            secs = time.perf_counter() - t0 if timing else 0.0
            length = res.report["lengths"]["total"]
            rows.append(
                {
                    "instance": idx,
                    "n": inst.n,
                    "k": inst.capacity,
                    "dist": dist,
                    "seed": seed,
                    "mode": mode,
                    "length": length,
                    "optimum": opt,
                    "ratio": length / opt if opt else None,
                    "feasible": res.report["feasible"],
                    "seconds": secs,
                }
            )
    return rows


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: ("" if r[c] is None else r[c]) for c in COLUMNS})
    return buf.getvalue()


def rows_to_json(rows: Sequence[dict]) -> str:
    return json.dumps(list(rows), sort_keys=True, indent=2)
