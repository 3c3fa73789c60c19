"""Command line: gen, solve, check, bench, plot.

Exit codes: 0 success, 2 bad parameters or input, 3 budget exhausted,
4 infeasible or internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .bench import CorpusSpec, bench, rows_to_csv, rows_to_json
from .dissection import Dissection, DissectionError
from .dp import DPBudgetError, DPInfeasibleError, DPInternalError
from .instance import InstanceError, generate_instance, parse_instance, perturb, serialize_instance
from .oracle import OracleBudgetError
from .pipeline import PipelineParams, solve_qptas
from .plotting import plot_ratios, plot_solution
from .solution import Solution, is_feasible

EXIT_OK, EXIT_PARAM, EXIT_BUDGET, EXIT_INFEASIBLE = 0, 2, 3, 4


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)


def _figure_path(out: str | None) -> Path | None:
    if out is None or out == "-":
        return None
    return Path(out).with_suffix(".svg")


def _load_instance(path: str):
    return parse_instance(Path(path).read_text())


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("qptas", "partition", "exact"), default="qptas")
    p.add_argument("--portals", type=int, default=4, help="portals per half side, m")
    p.add_argument("--r", type=int, default=2, help="crossing limit per half side")
    p.add_argument("--gamma", type=float, default=math.inf, help="rounding group size")
    p.add_argument("--tau-cap", type=int, default=None, help="keep at most this many thresholds")
    p.add_argument("--exact-mode", action="store_true", help="disable rounding (gamma = inf)")
    shifts = p.add_mutually_exclusive_group()
    shifts.add_argument("--all-shifts", action="store_true")
    shifts.add_argument("--shifts", type=int, default=None, help="number of random shifts")
    shifts.add_argument("--shift-a", type=int, default=None, help="fixed horizontal shift (needs --shift-b)")
    p.add_argument("--shift-b", type=int, default=None, help="fixed vertical shift")
    p.add_argument("--typing", choices=("random", "derandomized"), default="derandomized")
    p.add_argument("--budget", type=int, default=2_000_000, help="DP table cell budget")
    p.add_argument("--oracle-max-n", type=int, default=8)


def _fixed_shift(args) -> tuple[int, int] | None:
    if args.shift_a is None and args.shift_b is None:
        return None
    if args.shift_a is None or args.shift_b is None:
        raise ValueError("--shift-a and --shift-b must be given together")
    return (args.shift_a, args.shift_b)


def _params(args) -> PipelineParams:
    shifts = "all" if args.all_shifts else (args.shifts if args.shifts is not None else "auto")
    return PipelineParams(
        eps=args.epsilon,
        mode=args.mode,
        m=args.portals,
        r=args.r,
        gamma=math.inf if args.exact_mode else args.gamma,
        tau_cap=args.tau_cap,
        budget=args.budget,
        shifts=shifts,
        typing=args.typing,
        seed=args.seed,
        oracle_max_n=args.oracle_max_n,
        fixed_shift=_fixed_shift(args),
    )


def cmd_gen(args) -> int:
    inst = generate_instance(args.n, args.k, args.dist, args.seed)
    _write(serialize_instance(inst), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    res = solve_qptas(inst, _params(args))
    if args.format == "svg":
        _write(plot_solution(inst, res.solution), args.out)
    elif args.format == "csv":
        lines = ["tour,position,customer"]
        for ti, tour in enumerate(res.report["tours"]):
            lines += [f"{ti},{j},{c}" for j, c in enumerate(tour)]
        _write("\n".join(lines) + "\n", args.out)
    else:
        _write(res.report_json(), args.out)
    fig = _figure_path(args.out) if args.format != "svg" else None
    if fig is not None:
        fig.write_text(plot_solution(inst, res.solution, title=f"{args.mode}: {res.report['lengths']['total']:.4f}"))
    return EXIT_OK if res.report["feasible"] else EXIT_INFEASIBLE


def cmd_check(args) -> int:
    inst = _load_instance(args.instance)
    data = json.loads(Path(args.solution).read_text())
    sol = Solution.from_dict(data, inst)
    rep = is_feasible(sol, inst)
    out = {"feasible": rep.ok, "violations": rep.violations, "length": sol.to_dict(inst)["length"]}
    _write(json.dumps(out, sort_keys=True, indent=2), args.out)
    return EXIT_OK if rep.ok else EXIT_INFEASIBLE


def cmd_bench(args) -> int:
    spec = CorpusSpec(
        count=args.count,
        n_min=args.n_min,
        n_max=args.n_max,
        k_min=args.k_min,
        k_max=args.k_max,
        seed=args.seed,
    )
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    params = _params(args)
    rows = bench(spec, modes, params, timing=not args.no_timing)
    text = rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows)
    _write(text, args.out)
    fig = _figure_path(args.out)
    if fig is not None:
        rated = [r for r in rows if r["ratio"] is not None]
        labels = [f"{r['instance']}:{r['mode']}" for r in rated]
        fig.write_text(plot_ratios(labels, [r["ratio"] for r in rated], "length / optimum"))
    return EXIT_OK if all(r["feasible"] for r in rows) else EXIT_INFEASIBLE


def cmd_plot(args) -> int:
    inst = _load_instance(args.instance)
    sol = None
    if args.solution:
        sol = Solution.from_dict(json.loads(Path(args.solution).read_text()), inst)
    d = None
    if args.overlay_dissection:
        pinst = perturb(inst, args.epsilon)
        a, b = _fixed_shift(args) or (0, 0)
        d = Dissection(pinst, a, b, args.portals)
    _write(plot_solution(inst, sol, d), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cvrp-qptas", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--dist", choices=("uniform", "clustered"), default="uniform")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance and print the report")
    s.add_argument("instance")
    _add_solver_flags(s)
    s.add_argument("--out")
    s.add_argument("--format", choices=("json", "csv", "svg"), default="json")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="check a solution for feasibility")
    c.add_argument("instance")
    c.add_argument("solution")
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="benchmark modes on a generated corpus")
    b.add_argument("--count", type=int, default=20)
    b.add_argument("--n-min", type=int, default=1)
    b.add_argument("--n-max", type=int, default=8)
    b.add_argument("--k-min", type=int, default=1)
    b.add_argument("--k-max", type=int, default=4)
    b.add_argument("--modes", default="partition,exact")
    b.add_argument("--no-timing", action="store_true", help="zero the wall-clock column")
    _add_solver_flags(b)
    b.add_argument("--out")
    b.add_argument("--format", choices=("json", "csv"), default="csv")
    b.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="draw an instance and optionally a solution")
    p.add_argument("instance")
    p.add_argument("--solution")
    p.add_argument("--overlay-dissection", action="store_true")
    p.add_argument("--shift-a", type=int, default=None)
    p.add_argument("--shift-b", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--portals", type=int, default=4)
    p.add_argument("--out")
    p.add_argument("--format", choices=("svg",), default="svg")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, DissectionError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OracleBudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        print("hint: raise --oracle-max-n or use --mode qptas", file=sys.stderr)
        return EXIT_BUDGET
    except DPBudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        print("hint: try --exact-mode, fewer --portals or a smaller --r", file=sys.stderr)
        return EXIT_BUDGET
    except (DPInfeasibleError, DPInternalError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
