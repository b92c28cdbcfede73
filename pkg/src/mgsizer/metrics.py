"""Frontier quality measures.

Both measures compare a frontier against fixed references: the objective
rectangle area (ORA) scores closeness to an ideal corner relative to a
worst-case anchor, and the diverse count measures how well points spread
along each objective axis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .validation import check_positive


@dataclass(frozen=True)
class WorstCase:
    """Anchor point that every decent frontier point should undercut."""

    cost_star: float = 1.6e7
    pec_star: float = 4.0e6

    def __post_init__(self):
        check_positive(self.cost_star, "cost_star")
        check_positive(self.pec_star, "pec_star")


def ora(point, w: WorstCase) -> float:
    """Product of the two slacks to the worst case; larger is better.

    A point at or beyond the anchor in either coordinate produces a
    non-positive area, returned as-is with a RuntimeWarning.
    """
    area = (w.cost_star - point.cost) * (w.pec_star - point.pec)
    if point.cost >= w.cost_star or point.pec >= w.pec_star:
        warnings.warn(
            f"point ({point.cost:.4g} $, {point.pec:.4g} kg) is not "
            "strictly inside the worst case; ORA is not meaningful",
            RuntimeWarning, stacklevel=2)
    return float(area)


def largest_ora(frontier, w: WorstCase):
    """(best area, the point achieving it) over the frontier."""
    points = list(frontier)
    if not points:
        raise ValueError("largest_ora needs a non-empty frontier")
    best = max(points,
               key=lambda p: (w.cost_star - p.objectives.cost)
               * (w.pec_star - p.objectives.pec))
    return ora(best.objectives, w), best


def _greedy_spaced(values, gap: float) -> int:
    count = 1
    last = values[0]
    for v in values[1:]:
        if v - last >= gap:
            count += 1
            last = v
    return count


def diverse_count(frontier, cost_gap: float = 1.0e5,
                  pec_gap: float = 2.0e4):
    """(n_cost, n_pec): greedy epsilon-spaced subset sizes per axis.

    Walking each axis in ascending order from its first point, a point
    counts when it clears the previous counted point by at least the gap.
    """
    check_positive(cost_gap, "cost_gap")
    check_positive(pec_gap, "pec_gap")
    points = list(frontier)
    if not points:
        return 0, 0
    costs = sorted(p.objectives.cost for p in points)
    pecs = sorted(p.objectives.pec for p in points)
    return _greedy_spaced(costs, cost_gap), _greedy_spaced(pecs, pec_gap)
