"""
L-junctions and their parallelograms.

A junction with M branches is split into C(M, 2) two-branch L-junctions. The
branch vectors of an L-junction span a parallelogram whose pixels receive the
junction's saliency when the building index is rasterized.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import pandas as pd

# Pairs closer than this to 0 or pi are collinear
DEGENERATE_ANGLE = 1e-6

# Slack on the barycentric bounds when testing containment
CONTAINS_TOLERANCE = 1e-9

LJUNCTION_COLUMNS = ["x", "y", "cx", "cy", "s1", "theta1", "s2", "theta2", "beta", "rho"]


def included_angle(theta1, theta2):
    """Folded angular difference between two branch directions, in [0, pi]."""
    diff = np.mod(np.abs(np.asarray(theta1) - np.asarray(theta2)), 2.0 * np.pi)
    return np.minimum(diff, 2.0 * np.pi - diff)


@dataclass(frozen=True)
class Parallelogram:
    """Region p + a*nu1 + b*nu2 with a, b in [0, 1]."""

    corner: tuple
    nu1: tuple
    nu2: tuple

    @property
    def vertices(self):
        px, py = self.corner
        (ax, ay), (bx, by) = self.nu1, self.nu2
        return [
            (px, py),
            (px + ax, py + ay),
            (px + ax + bx, py + ay + by),
            (px + bx, py + by),
        ]

    @property
    def area(self):
        (ax, ay), (bx, by) = self.nu1, self.nu2
        return abs(ax * by - ay * bx)

    @property
    def perimeter(self):
        return 2.0 * (math.hypot(*self.nu1) + math.hypot(*self.nu2))


@dataclass(frozen=True)
class LJunction:
    x: float
    y: float
    s1: float
    theta1: float
    s2: float
    theta2: float
    rho: float

    @property
    def nu1(self):
        return (self.s1 * math.cos(self.theta1), self.s1 * math.sin(self.theta1))

    @property
    def nu2(self):
        return (self.s2 * math.cos(self.theta2), self.s2 * math.sin(self.theta2))

    @property
    def center(self):
        """Midpoint of the two branch tips, i.e. the parallelogram center."""
        (ax, ay), (bx, by) = self.nu1, self.nu2
        return (self.x + (ax + bx) / 2.0, self.y + (ay + by) / 2.0)

    @property
    def beta(self):
        return float(included_angle(self.theta1, self.theta2))

    @property
    def max_scale(self):
        return max(self.s1, self.s2)

    def parallelogram(self):
        return Parallelogram(corner=(self.x, self.y), nu1=self.nu1, nu2=self.nu2)


def is_degenerate(beta):
    return beta < DEGENERATE_ANGLE or beta > math.pi - DEGENERATE_ANGLE


def decompose(junction):
    """Split a junction into one L-junction per unordered branch pair.

    Args:
        junction: Detected junction with x, y, branches (scale, theta) and rho

    Returns:
        List of LJunction in branch-pair order; collinear pairs are dropped
    """
    ljunctions = []
    for b1, b2 in combinations(junction.branches, 2):
        if is_degenerate(float(included_angle(b1.theta, b2.theta))):
            continue
        ljunctions.append(LJunction(
            x=float(junction.x), y=float(junction.y),
            s1=float(b1.scale), theta1=float(b1.theta),
            s2=float(b2.scale), theta2=float(b2.theta),
            rho=float(junction.rho),
        ))
    return ljunctions


def contains_points(region, xs, ys):
    """Vectorized closed-region containment test.

    Solves pt - p = a*nu1 + b*nu2 for (a, b) by inverting the 2x2 edge matrix.
    """
    px, py = region.corner
    (ax, ay), (bx, by) = region.nu1, region.nu2
    det = ax * by - ay * bx
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if det == 0:
        return np.zeros(np.broadcast(xs, ys).shape, dtype=bool)
    dx = xs - px
    dy = ys - py
    a = (dx * by - dy * bx) / det
    b = (ax * dy - ay * dx) / det
    lo, hi = -CONTAINS_TOLERANCE, 1.0 + CONTAINS_TOLERANCE
    return (a >= lo) & (a <= hi) & (b >= lo) & (b <= hi)


def contains(region, pt):
    return bool(contains_points(region, pt[0], pt[1]))


def covered_pixels(region, bounds):
    """Integer pixel centers inside the region, clipped to the image.

    Args:
        region: Parallelogram
        bounds: (height, width) of the image

    Returns:
        (ys, xs) integer arrays in row-major order
    """
    height, width = bounds
    vx, vy = zip(*region.vertices)
    x0 = max(int(math.floor(min(vx))) - 1, 0)
    x1 = min(int(math.ceil(max(vx))) + 1, width - 1)
    y0 = max(int(math.floor(min(vy))) - 1, 0)
    y1 = min(int(math.ceil(max(vy))) + 1, height - 1)
    if x0 > x1 or y0 > y1:
        empty = np.zeros(0, dtype=np.intp)
        return empty, empty

    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    inside = contains_points(region, xs, ys)
    return ys[inside], xs[inside]


def ljunctions_to_frame(ljunctions):
    rows = []
    for lj in ljunctions:
        cx, cy = lj.center
        rows.append({
            "x": lj.x, "y": lj.y, "cx": cx, "cy": cy,
            "s1": lj.s1, "theta1": lj.theta1, "s2": lj.s2, "theta2": lj.theta2,
            "beta": lj.beta, "rho": lj.rho,
        })
    return pd.DataFrame(rows, columns=LJUNCTION_COLUMNS)


def ljunctions_from_frame(df):
    return [
        LJunction(x=row.x, y=row.y, s1=row.s1, theta1=row.theta1,
                  s2=row.s2, theta2=row.theta2, rho=row.rho)
        for row in df.itertuples(index=False)
    ]
