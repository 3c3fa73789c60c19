import numpy as np
import pytest

from cvrp_qptas import Instance, generate_instance, perturb
from cvrp_qptas.dissection import Dissection, DissectionError, Square, default_portals, enumerate_shifts

from helpers import binomial_sigma


@pytest.fixture
def p8():
    p = perturb(Instance(points=((1.0, 1.0), (2.0, 2.0)), depot=(0.0, 0.0), capacity=1), 1.0)
    assert p.L == 8
    return p


def test_unshifted_geometry(p8):
    d = Dissection(p8, 0, 0, 4)
    assert d.Lp == 16 and d.lmax == 4
    assert d.side(1) == 8


def test_rejects_bad_parameters(p8):
    with pytest.raises(DissectionError):
        Dissection(p8, 8, 0, 4)
    with pytest.raises(DissectionError):
        Dissection(p8, 0, -1, 4)
    with pytest.raises(DissectionError):
        Dissection(p8, 0, 0, 3)


def test_enumerate_shifts():
    assert list(enumerate_shifts(1)) == [(0, 0)]
    pairs = list(enumerate_shifts(2))
    assert pairs == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert len(set(enumerate_shifts(8))) == 64


def test_default_portals():
    assert default_portals(7, 1.0) == 4
    assert default_portals(7, 0.5) == 8
    assert default_portals(100, 0.5, cap=8) == 8


@pytest.mark.parametrize("seed", range(6))
def test_points_in_exactly_one_square_per_level(seed):
    p = perturb(generate_instance(8, 2, seed=seed), 1.0)
    rng = np.random.default_rng(seed)
    d = Dissection(p, int(rng.integers(p.L)), int(rng.integers(p.L)), 2)
    for pt in d.points:
        for lvl in range(d.lmax + 1):
            side = d.side(lvl)
            owners = [
                Square(lvl, i, j)
                for i in range(2 ** lvl)
                for j in range(2 ** lvl)
                if d.contains(Square(lvl, i, j), pt, closed=False)
            ]
            assert owners == [d.square_of(lvl, pt)]
            x1, y1, x2, y2 = d.bounds(owners[0])
            # strictly inside: no grid point lies on a line
            assert x1 < pt[0] < x2 and y1 < pt[1] < y2
            assert x2 - x1 == side


def test_children_partition_parent(p8):
    d = Dissection(p8, 3, 5, 2)
    for lvl in range(d.lmax):
        sq = Square(lvl, 0, 0)
        x1, y1, x2, y2 = d.bounds(sq)
        kids = d.children(sq)
        area = sum((b[2] - b[0]) * (b[3] - b[1]) for b in map(d.bounds, kids))
        assert area == (x2 - x1) * (y2 - y1)
        assert all(d.parent(k) == sq for k in kids)
        assert min(d.bounds(k)[0] for k in kids) == x1 and max(d.bounds(k)[2] for k in kids) == x2


def test_compressed_tree_leaves_hold_one_location():
    p = perturb(generate_instance(9, 3, "clustered", 2), 1.0)
    d = Dissection(p, 1, 6, 2)
    for sq, kids in d.tree.items():
        if kids is None:
            assert len(d.locations_in(sq)) <= 1
        else:
            assert len(d.locations_in(sq)) >= 2


@pytest.mark.parametrize("m", [1, 2, 4, 8])
def test_portal_count_bound(m):
    p = perturb(generate_instance(7, 2, seed=m), 1.0)
    d = Dissection(p, 2, 3, m)
    for sq in d.tree:
        assert len(d.portals(sq)) <= 4 * m + 5


def test_root_portals_equidistant(p8):
    d = Dissection(p8, 0, 0, 4)
    ps = d.boundary_portals(d.root)
    # m+1 per side including both corners, corners shared
    assert len(ps) == 4 * 4
    x1, y1, x2, y2 = d.bounds(d.root)
    bottom = sorted(x for x, y in ps if y == y1)
    assert np.allclose(np.diff(bottom), (x2 - x1) / 4)


def test_child_portals_refine_parent_spacing():
    p = perturb(generate_instance(8, 2, seed=5), 1.0)
    d = Dissection(p, 4, 1, 4)
    for sq, kids in d.tree.items():
        if kids is None or sq.level == 0:
            continue
        parent = d.parent(sq)
        x1, y1, x2, y2 = d.bounds(parent)
        fine = d.spacing(parent.level) / 2
        for x, y in d.boundary_portals(sq):
            on_parent_boundary = x in (x1, x2) or y in (y1, y2)
            if on_parent_boundary:
                along = y - d.y0 if x in (x1, x2) else x - d.x0
                q = along / fine
                assert abs(q - round(q)) < 1e-9


def test_depot_square_lists_depot_portal():
    p = perturb(generate_instance(5, 2, seed=1), 1.0)
    d = Dissection(p, 0, 0, 2)
    for sq in d.tree:
        if d.has_depot(sq):
            assert d.portals(sq)[-1] == (float(p.depot[0]), float(p.depot[1]))


def test_deterministic(p8):
    a = Dissection(p8, 5, 2, 4)
    b = Dissection(p8, 5, 2, 4)
    assert a.tree == b.tree
    assert [a.portals(s) for s in a.tree] == [b.portals(s) for s in b.tree]


def test_line_level_frequency_level_one(p8):
    # a fixed vertical line lies on a level <= 1 boundary with probability 2/8
    rng = np.random.default_rng(11)
    draws = 10_000
    pos = 3.5
    hits = sum(
        Dissection(p8, int(a), 0, 1).boundary_level(pos, 0) <= 1 for a in rng.integers(0, 8, draws)
    )
    p = 2 / 8
    assert abs(hits / draws - p) <= 4 * binomial_sigma(p, draws)
