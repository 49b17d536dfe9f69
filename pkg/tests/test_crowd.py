import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavcover.crowd import (
    EstimationError,
    GpParams,
    GpPosterior,
    SensorNetwork,
    estimate_field,
    intensity_from_csv,
    intensity_to_csv,
    kernel,
    kernel_matrix,
    posterior_mean,
)
from uavcover.simulator import generate_true_intensity, place_sensors, sense
from uavcover.tessellation import GroundGrid

TABLE = GpParams()


def test_table_defaults():
    assert (TABLE.mu, TABLE.a0, TABLE.a1) == (100.0, 10.0, 250000.0)
    assert TABLE.diag_jitter == pytest.approx(1e-7)


@pytest.mark.parametrize("kwargs", [{"a0": 0}, {"a1": -1}, {"jitter": -1e-9}])
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        GpParams(**kwargs)


def test_kernel_examples():
    assert kernel((3, 4), (3, 4), TABLE) == 10.0
    assert kernel((0, 0), (500, 0), TABLE) == pytest.approx(10 / math.e, rel=1e-15)
    assert kernel((0, 0), (600, 800), TABLE) == pytest.approx(0.18316, abs=1e-5)


@given(st.tuples(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4)), st.tuples(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4)))
def test_kernel_symmetric_nonnegative(p, q):
    assert kernel(p, q, TABLE) == kernel(q, p, TABLE)
    assert 0 <= kernel(p, q, TABLE) <= TABLE.a0


def test_single_sensor_interpolates():
    params = GpParams(jitter=0.0)
    net = SensorNetwork([(1000.0, 2000.0)], [137.0])
    assert posterior_mean((1000.0, 2000.0), net, params) == pytest.approx(137.0, rel=1e-15)


def test_far_field_reverts_to_prior():
    params = GpParams(jitter=0.0)
    net = SensorNetwork([(0.0, 0.0), (700.0, 300.0)], [40.0, 250.0])
    far = 100 * math.sqrt(params.a1)
    assert abs(posterior_mean((far, far), net, params) - params.mu) < 1e-6 * params.a0


def test_two_sensor_closed_form():
    params = TABLE
    g = np.array([[1000.0, 1000.0], [1400.0, 1300.0]])
    x = np.array([120.0, 80.0])
    y = (1200.0, 1500.0)
    k = lambda a, b: 10.0 * math.exp(-((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) / 500.0**2)
    a = k(g[0], g[0]) + params.diag_jitter
    d = k(g[1], g[1]) + params.diag_jitter
    b = k(g[0], g[1])
    det = a * d - b * b
    inv = np.array([[d, -b], [-b, a]]) / det
    ky = np.array([k(y, g[0]), k(y, g[1])])
    oracle = 100.0 + ky @ inv @ (x - 100.0)
    assert posterior_mean(y, SensorNetwork(g, x), params) == pytest.approx(oracle, abs=1e-10)


def test_posterior_variance_diagnostic():
    params = GpParams(jitter=0.0)
    post = GpPosterior(SensorNetwork([(0, 0), (1000, 0)], [90, 110]), params)
    var = post.variance([(0, 0), (1e6, 1e6)])
    assert abs(var[0]) < 1e-9
    assert var[1] == pytest.approx(params.a0)


def test_coincident_sensors_fail_with_condition_number():
    net = SensorNetwork([(10.0, 10.0), (10.0, 10.0)], [1.0, 2.0])
    with pytest.raises(EstimationError, match="condition number"):
        GpPosterior(net, GpParams(jitter=0.0))


def test_no_sensors():
    with pytest.raises(EstimationError):
        GpPosterior(SensorNetwork(np.zeros((0, 2)), []), TABLE)


def test_length_mismatch():
    with pytest.raises(ValueError):
        SensorNetwork([(0, 0)], [1.0, 2.0])


def test_full_sensors_reproduce_field():
    grid = GroundGrid.square(5000.0, 50)
    field = generate_true_intensity(grid, TABLE, 3)
    net = sense(field, grid, np.arange(grid.size))
    est = estimate_field(net, grid, GpParams(jitter=0.0))
    assert np.max(np.abs(est - field)) <= 1e-8


def test_full_sensors_without_cell_index_reproduce_field():
    grid = GroundGrid.square(1000.0, 10)
    field = generate_true_intensity(grid, GpParams(a1=300.0**2), 3)
    net = SensorNetwork(grid.centers, field.ravel())
    est = estimate_field(net, grid, GpParams(a1=300.0**2, jitter=0.0))
    assert np.max(np.abs(est - field)) <= 1e-8


def test_flat_observations_give_flat_field():
    grid = GroundGrid.square(5000.0, 20)
    cells = place_sensors(grid, 0.1, np.random.default_rng(0))
    net = SensorNetwork(grid.centers[cells], np.full(cells.size, 100.0))
    est = estimate_field(net, grid, TABLE)
    assert np.allclose(est, 100.0, rtol=0, atol=1e-9)


def test_sparse_sensing_beats_flat_prior():
    grid = GroundGrid.square(5000.0, 50)
    field = generate_true_intensity(grid, TABLE, 7)
    cells = place_sensors(grid, 0.03, np.random.default_rng(1))
    est = estimate_field(sense(field, grid, cells), grid, TABLE)
    assert np.mean(np.abs(est - field)) < np.mean(np.abs(TABLE.mu - field))


def test_estimate_clamped_nonnegative():
    grid = GroundGrid.square(1000.0, 10)
    # a steep rise between two sensors overshoots below zero on the far side
    net = SensorNetwork([(450.0, 450.0), (650.0, 450.0)], [0.0, 300.0])
    params = GpParams(mu=1.0, a0=1000.0, a1=400.0**2)
    assert GpPosterior(net, params).mean([(250.0, 450.0)])[0] < 0
    est = estimate_field(net, grid, params)
    assert est.min() == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_interpolation_property(seed):
    rng = np.random.default_rng(seed)
    params = GpParams(jitter=0.0)
    # well separated: one sensor per 1 km block
    pos = np.array([(1000 * i + rng.uniform(100, 900), 1000 * j + rng.uniform(100, 900)) for i in range(4) for j in range(4)])
    obs = rng.uniform(0, 300, len(pos))
    mean = GpPosterior(SensorNetwork(pos, obs), params).mean(pos)
    assert np.all(np.abs(mean - obs) <= 1e-6 * np.abs(obs) + 1e-12)


def test_estimation_deterministic():
    grid = GroundGrid.square(5000.0, 50)
    field = generate_true_intensity(grid, TABLE, 1)
    cells = place_sensors(grid, 0.05, np.random.default_rng(2))
    a = estimate_field(sense(field, grid, cells), grid, TABLE)
    b = estimate_field(sense(field, grid, cells), grid, TABLE)
    assert np.array_equal(a, b)


def test_sensor_record_roundtrip():
    net = SensorNetwork([(1.0, 2.0), (3.0, 4.0)], [5.0, 6.0], period=2)
    rec = json.loads(net.to_json())
    assert rec == {"k": 2, "positions": [[1.0, 2.0], [3.0, 4.0]], "observations": [5.0, 6.0]}
    back = SensorNetwork.from_record(rec)
    assert np.array_equal(back.positions, net.positions) and back.period == 2


def test_intensity_csv_roundtrip(tmp_path):
    field = np.random.default_rng(0).uniform(0, 200, (4, 5))
    path = tmp_path / "lam.csv"
    intensity_to_csv(field, path)
    assert path.read_text().splitlines()[0] == "row,col,value"
    assert np.array_equal(intensity_from_csv(path, (4, 5)), field)
    with pytest.raises(ValueError):
        intensity_from_csv(path, (5, 5))


def test_kernel_matrix_psd():
    pts = np.random.default_rng(0).uniform(0, 5000, (40, 2))
    k = kernel_matrix(pts, pts, TABLE)
    assert np.array_equal(k, k.T)
    assert np.linalg.eigvalsh(k + TABLE.diag_jitter * np.eye(40)).min() > 0
