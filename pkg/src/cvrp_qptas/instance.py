"""Instances: parsing, generation, grid perturbation and lifting back.

The perturbed copy lives on an integer grid where every customer and the
depot sit at cell centres ``4*i + 2``, so distinct locations are at least 4
apart.  Coincident points stay distinct customers (multiset semantics).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .solution import Solution, Tour

Point = tuple[float, float]


class InstanceError(ValueError):
    """Raised for malformed instance files or invalid parameters."""


@dataclass(frozen=True)
class Instance:
    points: tuple[Point, ...]
    depot: Point
    capacity: int

    def __post_init__(self):
        if len(self.points) < 1:
            raise InstanceError("n < 1: instance needs at least one customer")
        if self.capacity < 1:
            raise InstanceError("capacity: k < 1")
        for p in (*self.points, self.depot):
            if not all(math.isfinite(c) for c in p):
                raise InstanceError(f"points: non-finite coordinate {p}")

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def k(self) -> int:
        return self.capacity

    def coords(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


def _point(value, name: str) -> Point:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise InstanceError(f"{name}: expected [x, y], got {value!r}")
    try:
        x, y = float(value[0]), float(value[1])
    except (TypeError, ValueError):
        raise InstanceError(f"{name}: coordinates must be numbers") from None
    if isinstance(value[0], bool) or isinstance(value[1], bool):
        raise InstanceError(f"{name}: coordinates must be numbers")
    return (x, y)


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise InstanceError("instance: top level must be an object")
    for key in ("depot", "points", "capacity"):
        if key not in data:
            raise InstanceError(f"{key}: missing field")
    depot = _point(data["depot"], "depot")
    if not isinstance(data["points"], list):
        raise InstanceError("points: expected a list")
    points = tuple(_point(p, f"points[{i}]") for i, p in enumerate(data["points"]))
    cap = data["capacity"]
    if isinstance(cap, bool) or not isinstance(cap, int):
        raise InstanceError("capacity: expected an integer")
    return Instance(points=points, depot=depot, capacity=cap)


def parse_instance(text: str) -> Instance:
    """Parse the JSON instance format ``{"depot", "points", "capacity"}``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON: {exc}") from None
    return instance_from_dict(data)


def instance_to_dict(inst: Instance) -> dict:
    return {
        "depot": list(inst.depot),
        "points": [list(p) for p in inst.points],
        "capacity": inst.capacity,
    }


def serialize_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst))


def generate_instance(n: int, k: int, dist: str = "uniform", seed: int = 0) -> Instance:
    """Random instance in the unit square; the depot is drawn like a customer.

    ``clustered`` draws ceil(sqrt(n)) centres and scatters points around them
    with a small Gaussian, clipped back into the square.
    """
    if n < 1:
        raise InstanceError("n < 1")
    if k < 1:
        raise InstanceError("capacity: k < 1")
    rng = np.random.default_rng(seed)
    if dist == "uniform":
        pts = rng.random((n + 1, 2))
    elif dist == "clustered":
        n_centers = math.ceil(math.sqrt(n))
        centers = rng.random((n_centers, 2))
        which = rng.integers(0, n_centers, size=n + 1)
        pts = np.clip(centers[which] + rng.normal(0.0, 0.05, size=(n + 1, 2)), 0.0, 1.0)
    else:
        raise InstanceError(f"dist: unknown distribution {dist!r}")
    pts = [(float(x), float(y)) for x, y in pts]
    return Instance(points=tuple(pts[1:]), depot=pts[0], capacity=k)


@dataclass(frozen=True)
class PerturbedInstance:
    """Integer-grid copy of an instance.

    ``scale`` maps original lengths to grid lengths; a grid coordinate ``X``
    corresponds to ``offset + X / scale`` in the original plane.  ``scale`` is
    ``None`` in the degenerate case where every point coincides.
    """

    points: tuple[tuple[int, int], ...]
    depot: tuple[int, int]
    capacity: int
    L: int
    scale: float | None
    offset: Point
    d: float
    eps: float
    original: Instance = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def k(self) -> int:
        return self.capacity

    def to_original(self, xy: Sequence[float]) -> Point:
        if self.scale is None:
            return self.original.depot
        return (self.offset[0] + xy[0] / self.scale, self.offset[1] + xy[1] / self.scale)

    def as_instance(self) -> Instance:
        return Instance(
            points=tuple((float(x), float(y)) for x, y in self.points),
            depot=(float(self.depot[0]), float(self.depot[1])),
            capacity=self.capacity,
        )


def _cell(value: float, origin: float, g: float) -> int:
    # boundary ties go to the lower cell
    t = (value - origin) / g
    return max(0, math.ceil(t) - 1)


def _next_pow2(x: int) -> int:
    p = 1
    while p < x:
        p *= 2
    return p


def perturb(inst: Instance, eps: float) -> PerturbedInstance:
    """Snap to a grid of granularity d*eps/n and scale by 4n/(eps*d)."""
    if not (0.0 < eps <= 1.0):
        raise InstanceError(f"epsilon must lie in (0, 1], got {eps}")
    allpts = np.asarray((inst.depot, *inst.points), dtype=float)
    diff = allpts[:, None, :] - allpts[None, :, :]
    d = float(np.sqrt((diff ** 2).sum(-1)).max())
    if d == 0.0:
        return PerturbedInstance(
            points=tuple((2, 2) for _ in inst.points),
            depot=(2, 2),
            capacity=inst.capacity,
            L=4,
            scale=None,
            offset=inst.depot,
            d=0.0,
            eps=eps,
            original=inst,
        )
    g = d * eps / inst.n
    ox, oy = float(allpts[:, 0].min()), float(allpts[:, 1].min())

    def snap(p: Point) -> tuple[int, int]:
        return (4 * _cell(p[0], ox, g) + 2, 4 * _cell(p[1], oy, g) + 2)

    points = tuple(snap(p) for p in inst.points)
    depot = snap(inst.depot)
    top = max(max(c) for c in (*points, depot))
    L = max(4, _next_pow2(top + 1))
    return PerturbedInstance(
        points=points,
        depot=depot,
        capacity=inst.capacity,
        L=L,
        scale=4.0 / g,
        offset=(ox, oy),
        d=d,
        eps=eps,
        original=inst,
    )


def lift_solution(pinst: PerturbedInstance, sol: Solution) -> Solution:
    """Map a grid solution back onto the original customer locations.

    Customer vertices are replaced by their true positions (the detour from
    the cell centre); portal waypoints are mapped through the affine change
    of coordinates.
    """
    n = pinst.n
    orig = pinst.original
    tours = []
    for t in sol.tours:
        for i in t.customers:
            if not (0 <= i < n):
                raise IndexError(f"customer index {i} out of range for n={n}")
        path = None
        if t.path is not None:
            path = []
            for v in t.path:
                if v.customer is not None:
                    path.append(v.moved(orig.points[v.customer]))
                elif v.is_depot:
                    path.append(v.moved(orig.depot))
                else:
                    path.append(v.moved(pinst.to_original(v.xy)))
        tours.append(Tour(customers=list(t.customers), path=path))
    return Solution(tours=tours)
