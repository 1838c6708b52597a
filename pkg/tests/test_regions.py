import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from koopreach.errors import InfeasibleRegionError
from koopreach.regions import (Box, BumpField, Sublevel, Union, bump_sublevel, contains, estimate_eps_measure,
                               grid_points, region_from_dict, sample_iid)


def example1_x0():
    return bump_sublevel(0.05, 1.15, 1, 2, 0.05, -0.1)


def example1_xf():
    return bump_sublevel(1.85, -0.75, 5, 8, 0.1, -0.7)


def test_box_contains_duffing_x0():
    assert contains(Box([1.0, 1.0], [1.1, 1.1]), [1.05, 1.05])


def test_box_is_closed():
    box = Box([1.0, 1.0], [1.1, 1.1])
    assert contains(box, [1.0, 1.1])
    assert contains(box, [1.1, 1.1])
    assert not contains(box, [1.1 + 1e-12, 1.0])


def test_bump_center_value():
    fld = BumpField(1.85, -0.75, 5, 8, 0.1)
    assert fld([1.85, -0.75]) == pytest.approx(-1.0)
    assert contains(example1_xf(), [1.85, -0.75])


def test_box_validation():
    with pytest.raises(ValueError):
        Box([1.0, 0.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        BumpField(0, 0, 1, 1, 0.0)


def test_contains_batch_and_dimension():
    box = Box([0, 0], [1, 1])
    np.testing.assert_array_equal(contains(box, np.array([[0.5, 0.5], [2.0, 0.5]])), [True, False])
    with pytest.raises(ValueError):
        contains(box, [0.5, 0.5, 0.5])


def test_unit_box_mean():
    pts = sample_iid(Box([0, 0], [1, 1]), 10_000, 0)
    assert np.all(np.abs(pts.mean(axis=0) - 0.5) < 0.02)


@pytest.mark.parametrize("make", [example1_x0, example1_xf])
def test_sublevel_samples_inside(make):
    region = make()
    pts = sample_iid(region, 5000, 1)
    assert pts.shape == (5000, 2)
    assert contains(region, pts).all()


def test_union_samples_inside_and_weights():
    a, b = Box([0, 0], [1, 1]), Box([2, 0], [5, 1])
    u = Union((a, b))
    pts = sample_iid(u, 20_000, 2)
    assert contains(u, pts).all()
    frac_b = contains(b, pts).mean()
    assert frac_b == pytest.approx(0.75, abs=0.02)


def test_sampling_deterministic():
    r = example1_x0()
    np.testing.assert_array_equal(sample_iid(r, 100, 9), sample_iid(r, 100, 9))


def test_sub_box_fraction_matches_volume():
    box = Box([0, 0], [2, 1])
    sub = Box([0.2, 0.1], [0.9, 0.6])
    n = 100_000
    p = sub.volume() / box.volume()
    frac = contains(sub, sample_iid(box, n, 4)).mean()
    assert abs(frac - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_infeasible_region():
    fld = BumpField(0, 0, 0, 0, 1.0)
    g = np.linspace(-0.5, 0.5, 2001)
    h_min = fld(np.stack([g, np.zeros_like(g)], axis=-1)).min()
    # a sliver just above the minimum occupies far less than 1e-4 of the box
    thin = Sublevel(fld, h_min + 1e-6, Box([-50, -50], [50, 50]))
    with pytest.raises(InfeasibleRegionError) as info:
        sample_iid(thin, 10, 0)
    assert info.value.rate < 1e-4


def test_bounding_box_must_cover_set():
    fld = BumpField(0, 0, 0, 0, 1.0)
    with pytest.raises(ValueError):
        Sublevel(fld, -0.5, Box([-0.1, -0.1], [0.1, 0.1]))


def test_eps_measure_constant():
    assert estimate_eps_measure(Box([0], [1]), lambda p: np.zeros(len(p)), 0.01, "sup", 2000, 0) == 1.0


def test_eps_measure_linear():
    m = estimate_eps_measure(Box([0], [1]), lambda p: p[:, 0], 0.1, "sup", 10_000, 0)
    assert m == pytest.approx(0.1, abs=0.02)
    m = estimate_eps_measure(Box([0], [1]), lambda p: p[:, 0], 0.1, "inf", 10_000, 0)
    assert m == pytest.approx(0.1, abs=0.02)


def test_eps_measure_square():
    m = estimate_eps_measure(Box([-1], [1]), lambda p: p[:, 0] ** 2, 0.19, "sup", 10_000, 0)
    assert m == pytest.approx(1 - math.sqrt(0.81), abs=0.02)


def test_eps_measure_floor_and_errors():
    m = estimate_eps_measure(Box([0], [1]), lambda p: p[:, 0], 0.0, "sup", 1000, 0)
    assert m == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        estimate_eps_measure(Box([0], [1]), lambda p: p[:, 0], 0.1, "sup", 999, 0)
    with pytest.raises(ValueError):
        estimate_eps_measure(Box([0], [1]), lambda p: p[:, 0], 0.1, "max", 1000, 0)


def test_eps_measure_monotone_in_eps():
    fn = lambda p: np.sin(3 * p[:, 0]) * p[:, 1]
    vals = [estimate_eps_measure(Box([0, 0], [1, 1]), fn, e, "sup", 5000, 3) for e in np.linspace(0, 0.5, 11)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_region_json_round_trip():
    for region in (Box([0, 1], [2, 3]), example1_x0(), Union((Box([0], [1]), Box([3], [4])))):
        again = region_from_dict(region.to_dict())
        pts = sample_iid(region, 200, 0)
        np.testing.assert_array_equal(contains(again, pts), contains(region, pts))


def test_region_json_without_bounding_box():
    d = {"type": "sublevel", "field": {"name": "bump", "x1c": 0.05, "x2c": 1.15, "a": 1, "b": 2, "s": 0.05},
         "threshold": -0.1}
    r = region_from_dict(d)
    assert contains(r, sample_iid(example1_x0(), 500, 0)).all()
    with pytest.raises(ValueError):
        region_from_dict({"type": "ellipse"})


def test_grid_points_inside():
    r = example1_xf()
    g = grid_points(r, 20_000)
    assert len(g) > 1000
    assert contains(r, g).all()


@settings(max_examples=30, deadline=None)
@given(lo=st.lists(st.floats(-5, 5), min_size=2, max_size=3),
       widths=st.lists(st.floats(0.01, 3), min_size=3, max_size=3),
       seed=st.integers(0, 1000))
def test_box_samples_always_inside(lo, widths, seed):
    lo = np.array(lo)
    hi = lo + np.array(widths[: len(lo)])
    box = Box(lo, hi)
    assert contains(box, sample_iid(box, 100, seed)).all()
