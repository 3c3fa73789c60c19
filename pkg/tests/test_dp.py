import math

import pytest

from cvrp_qptas import Instance, generate_instance, is_feasible, lift_solution, perturb
from cvrp_qptas.dissection import Dissection
from cvrp_qptas.dp import (
    DPBudgetError,
    DPInfeasibleError,
    DPParams,
    best_shift,
    solve_dp,
    trace_back,
)
from cvrp_qptas.dp.exact import solve_exact
from cvrp_qptas.dp.portalgraph import PortalGraph
from cvrp_qptas.dp.relaxed import RelaxedEngine
from cvrp_qptas.dp.thresholds import thresholds
from cvrp_qptas.oracle import exact_cvrp
from cvrp_qptas.solution import check_relaxed, extended_objective, is_ilight, total_length
from cvrp_qptas.typeassign import assign_types_derandomized

from helpers import line_instance

CASES = [(n, k, seed) for n, k in [(3, 2), (4, 2), (5, 3), (6, 2)] for seed in range(2)]


def _dissect(inst, a=3, b=5, m=4, eps=1.0):
    p = perturb(inst, eps)
    return p, Dissection(p, a % p.L, b % p.L, m)


@pytest.mark.parametrize("n,k,seed", CASES)
def test_graph_search_matches_table(n, k, seed):
    p, d = _dissect(generate_instance(n, k, seed=seed))
    g = PortalGraph(d, 1.0)
    auto = solve_exact(g, k, 2, 10**7, engine="auto").cost
    table = solve_exact(g, k, 2, 10**7, engine="table").cost
    assert auto == pytest.approx(table, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_configuration_engine_matches_exact_mode(n):
    p, d = _dissect(generate_instance(n, 2, seed=n), 1, 2, m=2)
    g = PortalGraph(d, 1.0)
    exact = solve_exact(g, 2, 1, 10**7, engine="table").cost
    eng = RelaxedEngine(g, 2, 1, math.inf, thresholds(2, 1.0, n), 10**7)
    assert eng.solve()[0] == pytest.approx(exact, rel=1e-12)


def test_single_customer():
    inst = Instance(points=((0.9, 0.4),), depot=(0.1, 0.2), capacity=1)
    p, d = _dissect(inst, 1, 1)
    out = solve_dp(p, d, DPParams(), 1.0)
    rs = trace_back(out)
    euclid = 2 * math.dist(p.points[0], p.depot)
    assert out.cost >= euclid
    assert [t.customers for t in rs.solution.tours] == [[0]]


@pytest.mark.parametrize("n,k,seed", CASES)
def test_trace_back_exact_mode(n, k, seed):
    inst = generate_instance(n, k, seed=seed)
    p, d = _dissect(inst)
    params = DPParams()
    out = solve_dp(p, d, params, 1.0)
    rs = trace_back(out)
    gi = p.as_instance()
    assert rs.demands == []
    assert is_feasible(rs.solution, gi).ok
    assert is_ilight(rs.solution, d, params.r, per="segment").ok
    F = extended_objective(rs.solution, d, 1.0)
    assert F == pytest.approx(out.cost, rel=1e-9)
    assert F >= total_length(rs.solution, gi)


@pytest.mark.parametrize("seed", range(3))
def test_lifted_exact_mode_not_below_optimum(seed):
    inst = generate_instance(5, 2, seed=seed)
    p = perturb(inst, 1.0)
    search = best_shift(p, [(0, 0), (3, 7), (9, 2)], DPParams(), 1.0)
    lifted = lift_solution(p, trace_back(search.outcome).solution)
    assert is_feasible(lifted, inst).ok
    assert total_length(lifted, inst) >= exact_cvrp(inst)[1] - 1e-12


def test_more_portals_or_crossings_never_cost_more():
    inst = generate_instance(5, 2, seed=4)
    p = perturb(inst, 1.0)
    cost = {}
    for m in (2, 4):
        for r in (1, 2):
            d = Dissection(p, 3, 5, m)
            cost[m, r] = solve_dp(p, d, DPParams(m=m, r=r), 1.0).cost
    assert cost[4, 1] <= cost[2, 1] + 1e-9
    assert cost[2, 2] <= cost[2, 1] + 1e-9
    assert cost[4, 2] <= min(cost[4, 1], cost[2, 2]) + 1e-9


def test_deterministic():
    p, d = _dissect(generate_instance(6, 3, seed=1))
    a = trace_back(solve_dp(p, d, DPParams(), 1.0))
    b = trace_back(solve_dp(p, d, DPParams(), 1.0))
    assert a.cost == b.cost
    assert [[w.xy for w in t.path] for t in a.solution.tours] == [[w.xy for w in t.path] for t in b.solution.tours]


def test_budget_error():
    p, d = _dissect(generate_instance(6, 3, seed=1))
    with pytest.raises(DPBudgetError):
        solve_dp(p, d, DPParams(engine="table", budget=10), 1.0)


def test_single_portal_is_infeasible():
    p, d = _dissect(generate_instance(4, 2, seed=1), m=1)
    with pytest.raises(DPInfeasibleError):
        solve_dp(p, d, DPParams(m=1), 1.0)


def test_rejects_foreign_dissection():
    p, d = _dissect(generate_instance(4, 2, seed=1))
    other = perturb(generate_instance(4, 2, seed=2), 1.0)
    with pytest.raises(ValueError):
        solve_dp(other, d, DPParams(), 1.0)


def test_best_shift_prefers_cheapest_and_reports_skips():
    p = perturb(generate_instance(5, 2, seed=3), 1.0)
    shifts = [(0, 0), (3, 5), (6, 1)]
    costs = {s: solve_dp(p, Dissection(p, *s, 4), DPParams(), 1.0).cost for s in shifts}
    search = best_shift(p, shifts, DPParams(), 1.0)
    assert search.outcome.cost == min(costs.values())
    assert search.shift == min(shifts, key=lambda s: (costs[s], s))
    assert search.tried == 3 and search.skipped == []
    # a duplicate of the winner later in the list never displaces it
    again = best_shift(p, shifts + [search.shift], DPParams(), 1.0)
    assert again.shift == search.shift
    with pytest.raises(DPInfeasibleError):
        best_shift(p, shifts, DPParams(m=1), 1.0)


# ---- small group size: rounding is exercised ------------------------------------

SMALL_GAMMA = DPParams(m=2, r=1, gamma=2, tau_cap=2, budget=3_000_000)


def _rounding_run(inst, shift):
    p = perturb(inst, 1.0)
    d = Dissection(p, *shift, SMALL_GAMMA.m)
    out = solve_dp(p, d, SMALL_GAMMA, 1.0)
    return p, d, out, trace_back(out)


@pytest.fixture(scope="module")
def two_stacks():
    # 4 customers at one spot and 3 at another; capacity 3 forces the stack of 4 to round
    pts = [(3.0, 0.0)] * 4 + [(5.0, 0.0)] * 3
    return _rounding_run(Instance(points=tuple(pts), depot=(0.0, 0.0), capacity=3), (5, 2))


def test_rounded_segments_obey_the_window(two_stacks):
    p, d, out, rs = two_stacks
    assert out.engine == "relaxed"
    assert any(dd.y > 0 for dd in rs.demands)
    growth = 1 + 1.0 / math.log2(p.n)
    for dd in rs.demands:
        assert dd.t <= dd.x < dd.t * growth
        assert dd.y <= dd.x * 1.0 / math.log2(p.n)


def test_rounding_trace_back_consistent(two_stacks):
    p, d, out, rs = two_stacks
    assert extended_objective(rs.solution, d, 1.0) == pytest.approx(out.cost, rel=1e-9)
    assert is_ilight(rs.solution, d, SMALL_GAMMA.r, per="segment").ok
    ta = assign_types_derandomized(rs.demands, p)
    assert check_relaxed(rs.solution, ta, d, SMALL_GAMMA.gamma, out.thresholds.values, 1.0).ok


@pytest.mark.parametrize("shift", [(5, 2), (7, 7), (12, 4)])
def test_six_point_line(shift):
    p, d, out, rs = _rounding_run(line_instance(range(1, 7), 3), shift)
    ta = assign_types_derandomized(rs.demands, p)
    assert check_relaxed(rs.solution, ta, d, 2, out.thresholds.values, 1.0).ok
    assert extended_objective(rs.solution, d, 1.0) == pytest.approx(out.cost, rel=1e-9)
