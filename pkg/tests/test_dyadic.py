import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyadic_diffusion.dyadic import (DeltaValue, DyadicInterval, DyadicPoint,
                                     IdenticalPointsError, ball_constant,
                                     delta_power_integral, dyadic_distance, shell_measure,
                                     smallest_common_interval, tail_constant)

grid_points = st.integers(0, 2**12 - 1).map(lambda n: DyadicPoint(n, 8))


def test_interval_basics():
    I = DyadicInterval(3, 5)
    assert I.length == Fraction(1, 8)
    assert (I.left, I.right) == (Fraction(5, 8), Fraction(6, 8))
    assert I.parent == DyadicInterval(2, 2)
    assert not I.is_left_half
    assert all(I.contains(c) for c in I.children())
    assert I.parent.contains(I) and not I.contains(I.parent)


def test_negative_position_rejected():
    with pytest.raises(ValueError):
        DyadicInterval(0, -1)


@given(st.integers(-6, 6), st.integers(0, 200), st.integers(-6, 6), st.integers(0, 200))
def test_intervals_nested_or_disjoint(j1, k1, j2, k2):
    a, b = DyadicInterval(j1, k1), DyadicInterval(j2, k2)
    overlap = max(a.left, b.left) < min(a.right, b.right)
    assert overlap == a.intersects(b)


def test_point_exact_conversion():
    assert DyadicPoint.of(0.75) == DyadicPoint(3, 2)
    assert DyadicPoint.of(Fraction(6, 8)) == DyadicPoint(3, 2)
    assert DyadicPoint(12, 4).value == Fraction(3, 4)
    with pytest.raises(ValueError, match="binary rational"):
        DyadicPoint.of(Fraction(1, 3))


def test_smallest_common_interval_examples():
    assert smallest_common_interval(0.25, 0.75) == DyadicInterval(0, 0)
    eps = Fraction(1, 256)
    assert smallest_common_interval(Fraction(1, 2) - eps, Fraction(1, 2) + eps) == DyadicInterval(0, 0)
    # straddling 1 forces the common ancestor [0, 2)
    assert smallest_common_interval(1 - eps, 1 + eps) == DyadicInterval(-1, 0)
    assert dyadic_distance(1 - eps, 1 + eps) == DeltaValue(1)
    # both points of 3/2 +- eps already share [1, 2)
    assert smallest_common_interval(Fraction(3, 2) - eps, Fraction(3, 2) + eps) == DyadicInterval(0, 1)


def test_identical_points():
    with pytest.raises(IdenticalPointsError, match="identical points"):
        smallest_common_interval(0.5, Fraction(1, 2))
    assert dyadic_distance(0.5, 0.5).is_zero


def test_distance_examples():
    assert dyadic_distance(0.25, 0.75) == DeltaValue(0)
    assert dyadic_distance(2.0, 6.0) == DeltaValue(3)
    assert DeltaValue.zero() < DeltaValue(-40)


@given(grid_points, grid_points)
def test_points_in_different_halves(x, y):
    if x == y:
        return
    I = smallest_common_interval(x, y)
    left, right = I.children()
    assert left.contains(x) != left.contains(y)
    assert right.contains(x) != right.contains(y)
    assert dyadic_distance(x, y).value == I.length


@settings(max_examples=1000)
@given(grid_points, grid_points, grid_points)
def test_ultrametric_and_dominance(x, y, z):
    dxz, dxy, dyz = dyadic_distance(x, z), dyadic_distance(x, y), dyadic_distance(y, z)
    assert dxz <= max(dxy, dyz)
    assert abs(x.value - y.value) <= dxy.value


@given(grid_points, grid_points, st.integers(-8, 8))
def test_homogeneity(x, y, j):
    assert dyadic_distance(x.scale(j), y.scale(j)) == dyadic_distance(x, y).scale(j)


def test_ultrametric_bulk():
    rng = np.random.default_rng(7)
    pts = [DyadicPoint(int(n), 10) for n in rng.integers(0, 2**14, size=(10_000, 3)).ravel()]
    for x, y, z in zip(pts[0::3], pts[1::3], pts[2::3]):
        assert dyadic_distance(x, z) <= max(dyadic_distance(x, y), dyadic_distance(y, z))


@pytest.mark.parametrize("m", [-3, 0, 1, 4])
def test_shell_measure_brute_force(m):
    J = 10
    x = DyadicPoint(3 * 2**J // 4 + 5, J)  # somewhere in [0, 1)
    span = max(m, 0) + 1  # domain [0, 2**span) holds the whole shell
    count = sum(1 for n in range(2 ** (span + J))
                if dyadic_distance(x, DyadicPoint(n, J)) == DeltaValue(m))
    assert count * 2.0 ** -J == shell_measure(x, m) == 2.0 ** (m - 1)


def test_shells_partition_domain():
    J, D = 6, 2
    x = DyadicPoint(37, J)
    total = 0.0
    seen = 0
    for m in range(-J + 1, D + 1):
        cells = [n for n in range(2 ** (D + J)) if dyadic_distance(x, DyadicPoint(n, J)) == DeltaValue(m)]
        seen += len(cells)
        total += len(cells) * 2.0 ** -J
    assert seen == 2 ** (D + J) - 1
    assert total == 2.0 ** D - 2.0 ** -J


def test_power_integral_examples():
    assert delta_power_integral(0.0, 1.0, "ball") == 1.0
    assert delta_power_integral(-2.0, 1.0, "tail") == 1.0
    assert delta_power_integral(-1.0, 1.0, "tail") == math.inf
    assert delta_power_integral(-1.0, 1.0, "ball") == math.inf
    with pytest.raises(ValueError):
        delta_power_integral(0.0, 0.0, "ball")
    with pytest.raises(ValueError):
        delta_power_integral(0.0, 1.0, "annulus")


def _shell_sum(alpha, lo, hi):
    return math.fsum(0.5 * 2.0 ** ((1 + alpha) * j) for j in range(lo, hi + 1))


@given(st.floats(-0.95, 3.0), st.integers(-20, 20), st.floats(1.0, 1.99))
def test_ball_matches_shell_sum(alpha, j0, frac):
    r = frac * 2.0 ** j0
    direct = _shell_sum(alpha, j0 - 2000, j0)
    assert math.isclose(delta_power_integral(alpha, r, "ball"), direct, rel_tol=1e-12)


@given(st.floats(-4.0, -1.05), st.integers(-20, 20))
def test_tail_matches_shell_sum(alpha, j1):
    r = 2.0 ** j1
    direct = _shell_sum(alpha, j1, j1 + 3000)
    assert math.isclose(delta_power_integral(alpha, r, "tail"), direct, rel_tol=1e-12)


def test_tail_between_powers_rounds_up():
    # {delta >= 3} = {delta >= 4}
    assert delta_power_integral(-2.0, 3.0, "tail") == delta_power_integral(-2.0, 4.0, "tail")


def test_constants():
    assert ball_constant(0.0) == 1.0
    assert tail_constant(-2.0) == 1.0
