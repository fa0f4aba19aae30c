import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uowc_rte.receiver import ReceiverGeometry, power_profile, received_power, ring_areas

from conftest import grid_for


def test_ring_areas_values():
    A = ring_areas(0.01, 0.05)
    assert A.size == 5
    assert A[0] == pytest.approx(7.853981633974483e-05, rel=1e-14)
    assert A[1] == pytest.approx(6.283185307179586e-04, rel=1e-14)
    np.testing.assert_allclose(A[1:], 2 * np.pi * 1e-4 * np.arange(1, 5))


def test_ring_areas_not_a_partition():
    # printed rings overshoot the disc; the sum is recorded, not forced to pi R^2
    A = ring_areas(0.01, 0.05)
    assert A.sum() / (np.pi * 0.05**2) == pytest.approx(0.8100, abs=1e-4)


def test_single_disc():
    A = ring_areas(0.01, 0.01)
    assert A.size == 1
    assert A[0] == pytest.approx(np.pi * 0.005**2)


def test_recurrence_ring_model():
    A = ring_areas(0.01, 0.05, "recurrence")
    r = 0.005 + 0.01 * np.arange(6)
    assert A.size == 6
    np.testing.assert_allclose(A[:-1] + A[1:], np.pi * r[1:] ** 2)


def test_ring_errors():
    with pytest.raises(ValueError):
        ring_areas(0.01, 0.005)
    with pytest.raises(ValueError):
        ring_areas(0.01, 0.05, "other")


@pytest.fixture(scope="module")
def geom():
    return ReceiverGeometry.build(grid_for("sthg"), 0.01)


def test_zero_field(geom):
    assert received_power(np.zeros((21, 7, 22)), geom) == 0.0


def test_uniform_field_factorizes(geom):
    L = np.full((21, 7, 22), 3.5)
    expect = 3.5 * geom.areas.sum() * geom.gaps.sum()
    assert received_power(L, geom) == pytest.approx(expect, rel=1e-14)
    np.testing.assert_allclose(power_profile(L, geom), expect, rtol=1e-14)


def test_rows_used(geom):
    L = np.zeros((21, 4, 22))
    L[10:15, -1, geom.directions] = 1.0
    base = received_power(L, geom)
    L[9, -1, :] = 100.0  # below the axis: not sampled
    L[15, -1, :] = 100.0  # beyond the aperture
    L[12, -1, np.setdiff1d(np.arange(22), geom.directions)] = 100.0  # outside the FOV
    assert received_power(L, geom) == base


def test_geometry_too_large():
    geom = ReceiverGeometry.build(grid_for("sthg"), 0.01, R=0.2)
    with pytest.raises(ValueError):
        received_power(np.zeros((21, 3, 22)), geom)


def test_non_finite_field(geom):
    L = np.zeros((21, 3, 22))
    L[10, -1, 0] = np.nan
    with pytest.raises(FloatingPointError):
        received_power(L, geom)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r1=st.integers(1, 9), r2=st.integers(1, 9),
       f1=st.floats(0.1, np.pi), f2=st.floats(0.1, np.pi), alpha=st.floats(0.0, 1e3))
def test_monotone_and_linear(seed, r1, r2, f1, f2, alpha):
    grid = grid_for("sthg")
    L = np.random.default_rng(seed).random((21, 5, 22))
    (ra, rb), (fa, fb) = sorted((r1, r2)), sorted((f1, f2))
    small = ReceiverGeometry.build(grid, 0.01, R=0.01 * ra, fov_half_angle=fa)
    big = ReceiverGeometry.build(grid, 0.01, R=0.01 * rb, fov_half_angle=fb)
    assert received_power(L, small) <= received_power(L, big) * (1 + 1e-14)
    assert received_power(alpha * L, big) == pytest.approx(alpha * received_power(L, big), rel=1e-12)
