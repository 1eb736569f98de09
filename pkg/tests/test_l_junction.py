import math

import numpy as np
import pytest

from junction_detection import Branch, Junction
from l_junction import (
    LJunction, Parallelogram, contains, contains_points, covered_pixels, decompose, included_angle,
    ljunctions_from_frame, ljunctions_to_frame,
)

SQUARE = Parallelogram(corner=(0.0, 0.0), nu1=(2.0, 0.0), nu2=(0.0, 2.0))


def _junction(*thetas, scale=10.0, rho=0.25):
    return Junction(x=5, y=6, branches=tuple(Branch(scale, t) for t in thetas), rho=rho)


def _random_ljunction(rng, size):
    while True:
        lj = LJunction(
            x=float(rng.uniform(0, size)), y=float(rng.uniform(0, size)),
            s1=float(rng.uniform(2, size / 2)), theta1=float(rng.uniform(0, 2 * math.pi)),
            s2=float(rng.uniform(2, size / 2)), theta2=float(rng.uniform(0, 2 * math.pi)),
            rho=float(rng.random()),
        )
        if 0.2 < lj.beta < math.pi - 0.2:
            return lj


class TestDecompose:

    def test_two_branches(self):
        ljs = decompose(_junction(0.0, math.pi / 2))
        assert len(ljs) == 1
        assert ljs[0].rho == 0.25
        assert ljs[0].beta == pytest.approx(math.pi / 2)

    def test_three_branches(self):
        assert len(decompose(_junction(0.0, 2.0, 4.0))) == 3

    def test_collinear_pair_dropped(self):
        assert len(decompose(_junction(0.0, math.pi, 1.0, 2.0))) == 5

    def test_branch_data_carried(self):
        junction = Junction(x=3, y=4, branches=(Branch(7.0, 0.0), Branch(11.0, 1.5)), rho=0.1)
        (lj,) = decompose(junction)
        assert (lj.x, lj.y, lj.s1, lj.theta1, lj.s2, lj.theta2) == (3.0, 4.0, 7.0, 0.0, 11.0, 1.5)


class TestGeometry:

    def test_center_is_midpoint_of_tips(self):
        lj = LJunction(x=1.0, y=2.0, s1=4.0, theta1=0.0, s2=2.0, theta2=math.pi / 2, rho=0.0)
        assert lj.center == pytest.approx((3.0, 3.0))

    def test_included_angle_symmetry(self, rng):
        a, b = rng.uniform(0, 2 * math.pi, size=2)
        assert included_angle(a, b) == pytest.approx(included_angle(b, a))
        assert included_angle(a + 2 * math.pi, b) == pytest.approx(included_angle(a, b))
        assert 0 <= included_angle(a, b) <= math.pi

    def test_parallelogram_vertices_and_area(self):
        assert SQUARE.vertices == [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]
        assert SQUARE.area == 4.0
        assert SQUARE.perimeter == 8.0

    def test_center_inside_own_parallelogram(self, rng):
        for _ in range(50):
            lj = _random_ljunction(rng, 40)
            assert contains(lj.parallelogram(), lj.center)


class TestContains:

    @pytest.mark.parametrize("pt, expected", [((1, 1), True), ((3, 3), False), ((2, 2), True), ((0, 0), True)])
    def test_square(self, pt, expected):
        assert contains(SQUARE, pt) is expected

    def test_degenerate_region_contains_nothing(self):
        flat = Parallelogram(corner=(0.0, 0.0), nu1=(1.0, 1.0), nu2=(2.0, 2.0))
        assert not contains(flat, (0.5, 0.5))


class TestCoveredPixels:

    def test_closed_unit_grid(self):
        ys, xs = covered_pixels(SQUARE, (10, 10))
        assert set(zip(xs.tolist(), ys.tolist())) == {(x, y) for x in range(3) for y in range(3)}

    def test_outside_bounds(self):
        far = Parallelogram(corner=(50.0, 50.0), nu1=(3.0, 0.0), nu2=(0.0, 3.0))
        ys, xs = covered_pixels(far, (10, 10))
        assert ys.size == 0 and xs.size == 0

    def test_matches_exhaustive_scan(self, rng):
        ys_all, xs_all = np.mgrid[0:32, 0:32]
        for _ in range(25):
            region = _random_ljunction(rng, 32).parallelogram()
            ys, xs = covered_pixels(region, (32, 32))
            inside = contains_points(region, xs_all, ys_all)
            assert set(zip(xs.tolist(), ys.tolist())) == set(zip(xs_all[inside].tolist(), ys_all[inside].tolist()))

    def test_count_sandwich(self, rng):
        for _ in range(25):
            lj = _random_ljunction(rng, 200)
            region = Parallelogram(corner=(lj.x + 500.0, lj.y + 500.0), nu1=lj.nu1, nu2=lj.nu2)
            ys, _ = covered_pixels(region, (10_000, 10_000))
            assert max(0.0, region.area - region.perimeter) <= ys.size <= region.area + region.perimeter + 4


class TestFrames:

    def test_columns(self):
        lj = LJunction(x=1.0, y=2.0, s1=4.0, theta1=0.0, s2=2.0, theta2=math.pi / 2, rho=0.5)
        df = ljunctions_to_frame([lj])
        assert list(df.columns) == ["x", "y", "cx", "cy", "s1", "theta1", "s2", "theta2", "beta", "rho"]
        assert ljunctions_from_frame(df) == [lj]

    def test_empty(self):
        assert ljunctions_to_frame([]).empty
