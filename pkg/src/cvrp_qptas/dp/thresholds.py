"""Geometric grid of segment point counts used for rounding."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ThresholdSeq:
    values: tuple[int, ...]
    growth: float

    @property
    def tau(self) -> int:
        return len(self.values) - 1

    def round_index(self, x: int) -> int | None:
        """Index i with t_i <= x < t_i * growth, if any."""
        for i, t in enumerate(self.values):
            if t <= x < t * self.growth:
                return i
        return None

    def bucket(self, x: int) -> int | None:
        if x < self.values[0]:
            return None
        i = 0
        while i + 1 < len(self.values) and self.values[i + 1] <= x:
            i += 1
        return i


def log2n(n: int) -> float:
    return math.log2(n) if n >= 2 else 1.0


def thresholds(k: int, eps: float, n: int, tau_cap: int | None = None) -> ThresholdSeq:
    """t_0 = 1, t_1 = ceil(1/eps), then geometric growth (1 + eps/log2 n),
    forced up by at least one per step and capped at k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not (0.0 < eps <= 1.0):
        raise ValueError("epsilon must lie in (0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    growth = 1.0 + eps / log2n(n)
    seq = [1]
    prev = 1
    i = 1
    while prev < k:
        raw = math.ceil((1.0 / eps) * growth ** (i - 1) - 1e-9)
        t = min(k, raw) if i == 1 else min(k, max(prev + 1, raw))
        if t > prev:
            seq.append(t)
            prev = t
        i += 1
    if tau_cap is not None:
        if tau_cap < 1:
            raise ValueError("tau_cap must be >= 1")
        if len(seq) > tau_cap:
            seq = seq[: tau_cap - 1] + [k] if tau_cap > 1 else [seq[0]]
    return ThresholdSeq(values=tuple(seq), growth=growth)
