import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from coopd2d.topology import (
    CellScenario,
    GeometryError,
    distance,
    fixed_line_scenario,
    sample_scenario,
    scenario_from_csv,
    scenario_to_csv,
)


def _all_points(sc):
    return np.vstack((sc.cu_positions, sc.dt_positions, sc.dr_positions))


def test_snapshot_counts_and_containment():
    sc = sample_scenario(10, 5, 500.0, 3.8, seed=42)
    assert (sc.m_links, sc.n_links) == (10, 5)
    assert len(_all_points(sc)) == 20
    assert np.all(np.hypot(*_all_points(sc).T) <= 500.0)
    assert np.array_equal(sc.bs_pos, [0.0, 0.0])


def test_tiny_cell_stays_within_a_millimetre():
    sc = sample_scenario(1, 1, 0.001, seed=9)
    assert np.all(np.hypot(*_all_points(sc).T) <= 0.001)


def test_radial_cdf_matches_uniform_disk():
    sc = sample_scenario(10_000, 1, 500.0, seed=3)
    r = np.hypot(*sc.cu_positions.T)
    res = stats.kstest(r, lambda x: np.clip(x / 500.0, 0.0, 1.0) ** 2)
    assert res.statistic < 0.02


def test_angles_are_uniform():
    sc = sample_scenario(10_000, 1, 1.0, seed=4)
    ang = np.arctan2(sc.cu_positions[:, 1], sc.cu_positions[:, 0])
    assert stats.kstest(ang, stats.uniform(loc=-math.pi, scale=2 * math.pi).cdf).statistic < 0.02


def test_same_seed_is_bitwise_identical_and_seeds_differ():
    a = sample_scenario(4, 3, seed=11)
    b = sample_scenario(4, 3, seed=11)
    c = sample_scenario(4, 3, seed=12)
    assert np.array_equal(_all_points(a), _all_points(b))
    assert not np.array_equal(_all_points(a), _all_points(c))


def test_growing_n_extends_the_scenario():
    small = sample_scenario(6, 3, seed=21)
    big = sample_scenario(6, 8, seed=21)
    assert np.array_equal(small.cu_positions, big.cu_positions)
    assert np.array_equal(small.dt_positions, big.dt_positions[:3])
    assert np.array_equal(small.dr_positions, big.dr_positions[:3])


def test_pair_distance_cap_resamples_receivers():
    sc = sample_scenario(3, 50, 500.0, seed=5, d2d_max_pair_distance=60.0)
    d = np.hypot(*(sc.dt_positions - sc.dr_positions).T)
    assert np.all(d <= 60.0)
    assert np.all(np.hypot(*sc.dr_positions.T) <= 500.0)


@pytest.mark.parametrize("m, n, radius", [(0, 1, 1.0), (1, 0, 1.0), (1, 1, 0.0), (1, 1, -5.0)])
def test_sample_rejects_bad_arguments(m, n, radius):
    with pytest.raises(ValueError):
        sample_scenario(m, n, radius)


@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 12), n=st.integers(1, 12), radius=st.floats(1e-3, 1e4), seed=st.integers(0, 2**32))
def test_containment_property(m, n, radius, seed):
    sc = sample_scenario(m, n, radius, seed=seed)
    assert np.all(np.hypot(*_all_points(sc).T) <= radius)


@pytest.mark.parametrize(
    "a, b, expected",
    [((0, 0), (3, 4), 5.0), ((7, -2), (7, -2), 0.0), ((1, 1), (4, 5), 5.0)],
    ids=["345", "identity", "translated"],
)
def test_distance_examples(a, b, expected):
    assert distance(a, b) == expected
    assert distance(b, a) == expected


def test_fixed_line_collinear_near_side():
    sc = fixed_line_scenario(1000, 500, 500, 500)
    assert sc.cu_positions[0] == pytest.approx([1000.0, 0.0], abs=1e-9)
    assert np.array_equal(sc.dt_positions[0], [500.0, 0.0])


def test_fixed_line_collinear_far_side():
    sc = fixed_line_scenario(1000, 500, 500, 1500)
    assert sc.cu_positions[0] == pytest.approx([-1000.0, 0.0], abs=1e-9)


def test_fixed_line_circle_intersection():
    sc = fixed_line_scenario(1000, 500, 500, 1000)
    cu = sc.cu_positions[0]
    # independent solve: x = 250 by symmetry, y from the BS circle
    assert cu[0] == pytest.approx(250.0, abs=1e-9)
    assert cu[1] == pytest.approx(math.sqrt(1000.0**2 - 250.0**2), abs=1e-9)
    assert distance(cu, (0, 0)) == pytest.approx(1000.0, abs=1e-9)
    assert distance(cu, sc.dt_positions[0]) == pytest.approx(1000.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    d_cu_bs=st.floats(10, 2000), d_dt_bs=st.floats(10, 2000), d_dt_dr=st.floats(1, 500), t=st.floats(0, 1)
)
def test_fixed_line_reproduces_all_distances(d_cu_bs, d_dt_bs, d_dt_dr, t):
    lo, hi = abs(d_cu_bs - d_dt_bs), d_cu_bs + d_dt_bs
    d_cu_dt = lo + t * (hi - lo)
    sc = fixed_line_scenario(d_cu_bs, d_dt_bs, d_dt_dr, d_cu_dt)
    cu, dt, dr = sc.cu_positions[0], sc.dt_positions[0], sc.dr_positions[0]
    scale = max(d_cu_bs, d_dt_bs)
    assert cu[1] >= 0.0
    assert distance(cu, (0, 0)) == pytest.approx(d_cu_bs, rel=1e-9, abs=1e-9 * scale)
    assert distance(dt, (0, 0)) == pytest.approx(d_dt_bs, rel=1e-9)
    assert distance(dt, dr) == pytest.approx(d_dt_dr, rel=1e-9)
    assert distance(cu, dt) == pytest.approx(d_cu_dt, rel=1e-9, abs=1e-6 * scale)
    # DR leaves the DT perpendicular to the BS-DT axis
    assert np.dot(dr - dt, dt) == pytest.approx(0.0, abs=1e-9 * scale**2)


@pytest.mark.parametrize("d_cu_dt", [499.0, 1501.0])
def test_fixed_line_triangle_violation(d_cu_dt):
    with pytest.raises(GeometryError):
        fixed_line_scenario(1000, 500, 500, d_cu_dt)


def test_scenario_validation():
    with pytest.raises(ValueError):
        CellScenario(1.0, np.zeros((0, 2)), np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        CellScenario(1.0, np.zeros((1, 2)), np.zeros((2, 2)), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        CellScenario(1.0, np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)), pl_exponent=0.0)


def test_scenario_arrays_are_read_only():
    sc = sample_scenario(2, 2, seed=1)
    with pytest.raises(ValueError):
        sc.cu_positions[0, 0] = 1.0


def test_csv_round_trip():
    sc = sample_scenario(3, 2, 500.0, seed=8)
    text = scenario_to_csv(sc)
    assert text.splitlines()[0] == "kind,index,x_m,y_m"
    assert text.splitlines()[1] == "BS,0,0.0,0.0"
    back = scenario_from_csv(text, radius=500.0)
    assert np.array_equal(_all_points(back), _all_points(sc))
    assert back.m_links == 3 and back.n_links == 2
