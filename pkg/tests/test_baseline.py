import numpy as np
import pytest

from thermofit.baseline import InterpolationConfig, constant_field, knn_interpolate


def test_constant_field():
    assert np.array_equal(constant_field(20.0, 5), np.full(5, 20.0))
    assert np.array_equal(constant_field(0.0, 3), np.zeros(3))


def test_query_at_sensor_returns_sensor_value():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    vals = np.array([5.0, 7.0, 9.0])
    out = knn_interpolate(pts, vals, pts, InterpolationConfig(k=3))
    assert np.array_equal(out, vals)


def test_equidistant_pair_averages():
    pts = np.array([[0.0, 0.0], [2.0, 0.0]])
    vals = np.array([10.0, 30.0])
    out = knn_interpolate(pts, vals, [(1.0, 0.0)], InterpolationConfig(k=2))
    assert out[0] == pytest.approx(20.0, rel=1e-12)


def test_idw_hand_computed_value():
    # sensors on a line at x = 0, 1, 2 with values 10, 20, 30; query x = 0.5:
    # (10/0.5 + 20/0.5 + 30/1.5) / (1/0.5 + 1/0.5 + 1/1.5) = 120/7
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    vals = np.array([10.0, 20.0, 30.0])
    out = knn_interpolate(pts, vals, [(0.5, 0.0)], InterpolationConfig(k=3))
    assert out[0] == pytest.approx(120.0 / 7.0, rel=1e-12)


def test_convex_combination_of_neighbors():
    rng = np.random.default_rng(8)
    pts = rng.random((12, 2)) * 10.0
    vals = rng.normal(size=12) * 50.0
    queries = rng.random((40, 2)) * 10.0
    out = knn_interpolate(pts, vals, queries, InterpolationConfig(k=3))
    assert np.all(out >= vals.min() - 1e-12)
    assert np.all(out <= vals.max() + 1e-12)


def test_fewer_sensors_than_k_rejected():
    with pytest.raises(ValueError):
        knn_interpolate(
            np.array([[0.0, 0.0]]), np.array([1.0]), [(0.5, 0.5)],
            InterpolationConfig(k=3),
        )


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        InterpolationConfig(k=0)


def test_tie_epsilon_snaps_to_sensor():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    vals = np.array([10.0, 20.0, 30.0])
    out = knn_interpolate(
        pts, vals, [(1.0 + 1e-12, 0.0)], InterpolationConfig(k=3)
    )
    assert out[0] == 20.0


def test_distance_ties_broken_by_sensor_index():
    # four sensors on a square, query at the center: with k=2 the two
    # lowest-index sensors win the tie
    pts = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])
    vals = np.array([1.0, 3.0, 5.0, 7.0])
    out = knn_interpolate(pts, vals, [(1.0, 1.0)], InterpolationConfig(k=2))
    assert out[0] == pytest.approx(2.0, rel=1e-12)  # mean of sensors 0 and 1


def test_deterministic_repeat():
    rng = np.random.default_rng(9)
    pts = rng.random((8, 2))
    vals = rng.normal(size=8)
    queries = rng.random((20, 2))
    a = knn_interpolate(pts, vals, queries, InterpolationConfig(k=3))
    b = knn_interpolate(pts, vals, queries, InterpolationConfig(k=3))
    assert np.array_equal(a, b)
