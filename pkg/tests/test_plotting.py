import xml.etree.ElementTree as ET

from cvrp_qptas import generate_instance, perturb
from cvrp_qptas.dissection import Dissection
from cvrp_qptas.partition import partition_solve
from cvrp_qptas.plotting import plot_ratios, plot_solution, tour_colors


def _is_svg(text):
    return ET.fromstring(text.encode()).tag.endswith("svg")


def test_solution_figure_is_stable_svg():
    inst = generate_instance(6, 2, seed=1)
    sol = partition_solve(inst)
    a = plot_solution(inst, sol, title="partition")
    assert _is_svg(a)
    assert a == plot_solution(inst, sol, title="partition")


def test_dissection_overlay_adds_squares():
    inst = generate_instance(6, 2, seed=1)
    d = Dissection(perturb(inst, 1.0), 3, 4, 2)
    bare = plot_solution(inst)
    over = plot_solution(inst, dissection=d)
    assert _is_svg(over) and over.count("<path") > bare.count("<path")


def test_points_only_and_distinct_tour_colours():
    inst = generate_instance(4, 2, seed=2)
    bare = plot_solution(inst)
    assert _is_svg(bare)
    two = plot_solution(inst, partition_solve(inst))
    strokes = {c for c in ("#1f77b4", "#ff7f0e") if f"stroke: {c}" in two}
    assert len(strokes) == 2 and not any(f"stroke: {c}" in bare for c in strokes)


def test_ratio_chart():
    assert _is_svg(plot_ratios(["a", "b"], [1.0, 1.2], "ratios"))


def test_colour_count():
    assert len(tour_colors(3)) == 3 and len(tour_colors(25)) == 25
