import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavcover.pushsum import (
    ConstraintBox,
    NumericalFailure,
    PerturbationConfig,
    PushSumNodeState,
    StepSchedule,
    calibrate_step_size,
    consensus_diagnostics,
    extended_gradient,
    init_states,
    step,
    step_size,
)
from uavcover.tessellation import NeighborGraph

BOX = ConstraintBox.from_area(5000.0, 10.0, 1500.0, push_gain=7.0)
OFF = PerturbationConfig(enabled=False)


def zero_provider(node, pseudo):
    return np.zeros_like(pseudo)


def random_connected_graph(rng, n):
    adj = np.eye(n, dtype=bool)
    order = rng.permutation(n)
    for k in range(1, n):  # random spanning tree
        a, b = order[k], order[rng.integers(k)]
        adj[a, b] = adj[b, a] = True
    extra = rng.random((n, n)) < 0.2
    adj |= extra | extra.T
    return NeighborGraph(adj, np.zeros(n, dtype=bool))


def random_deployment(rng, n):
    return np.column_stack([rng.uniform(0, 5000, (n, 2)), rng.uniform(10, 1500, n)])


# ---------------------------------------------------------------- init / schedule


def test_init_states():
    dep = random_deployment(np.random.default_rng(0), 4)
    states = init_states(dep)
    assert sum(s.phi for s in states) == 4
    assert all(np.array_equal(s.u, states[0].u) for s in states)
    assert all(np.array_equal(s.u, s.w) and np.array_equal(s.u, s.xi) for s in states)
    assert init_states([(1.0, 2.0, 3.0)])[0].u.shape == (3,)


def test_step_size_examples():
    assert step_size(0, StepSchedule(a0=2.5)) == 2.5
    assert step_size(99, StepSchedule(a0=1.0, nu=0.55)) == pytest.approx(0.07943, abs=1e-5)
    a = [step_size(t, StepSchedule()) for t in range(10001)]
    assert np.all(np.diff(a) <= 0)
    with pytest.raises(ValueError):
        step_size(-1, StepSchedule())


@pytest.mark.parametrize("kwargs", [{"nu": 0.5}, {"nu": 1.0}, {"a0": 0.0}])
def test_schedule_validation(kwargs):
    with pytest.raises(ValueError):
        StepSchedule(**kwargs)


def test_box_validation():
    with pytest.raises(ValueError):
        ConstraintBox((0, 0, 100), (10, 10, 50))
    with pytest.raises(ValueError):
        ConstraintBox.from_area(10, 1, 2, push_gain=0)
    with pytest.raises(ValueError):
        PerturbationConfig(scale=-1)


# ---------------------------------------------------------------- extended gradient


def test_extended_gradient_inside_is_local_gradient():
    pseudo = np.array([[100.0, 200.0, 300.0], [4000.0, 10.0, 1500.0]])
    expected = np.arange(6.0).reshape(2, 3)
    got = extended_gradient(0, pseudo, BOX, lambda node, p: expected)
    assert np.array_equal(got, expected.ravel())


def test_extended_gradient_above_ceiling():
    pseudo = np.array([[100.0, 200.0, 300.0], [4000.0, 10.0, 1600.0]])
    got = extended_gradient(1, pseudo, BOX, zero_provider)
    assert np.linalg.norm(got) == pytest.approx(7.0)
    assert np.array_equal(got, [0, 0, 0, 0, 0, -7.0])


def test_extended_gradient_far_outside():
    pseudo = np.array([[-1e5, 9e5, -50.0], [7e6, -3.0, 1e4]])
    got = extended_gradient(0, pseudo, BOX, zero_provider)
    assert np.linalg.norm(got) == pytest.approx(7.0, rel=1e-14)


# ---------------------------------------------------------------- step


def test_single_node_fixed_point():
    states = init_states([(100.0, 200.0, 300.0)])
    graph = NeighborGraph.complete(1)
    rng = np.random.default_rng(0)
    new, actual = step(states, graph, 0, StepSchedule(), OFF, BOX, rng, zero_provider)
    assert np.array_equal(new[0].u, states[0].u)
    assert new[0].phi == 1.0
    assert np.array_equal(actual, [[100.0, 200.0, 300.0]])


def test_two_node_consensus_to_weighted_average():
    a = np.array([100.0, 200.0, 300.0, 400.0, 500.0, 600.0])
    b = np.array([900.0, 100.0, 50.0, 4000.0, 10.0, 1000.0])
    states = [PushSumNodeState(a.copy(), a.copy(), a.copy(), 1.0), PushSumNodeState(b.copy(), b.copy(), b.copy(), 1.0)]
    oracle = (a + b) / 2.0  # sum of xi over sum of phi
    graph = NeighborGraph.complete(2)
    rng = np.random.default_rng(0)
    for t in range(200):
        states, _ = step(states, graph, t, StepSchedule(), OFF, BOX, rng, zero_provider)
    assert consensus_diagnostics(states)["disagreement"] < 1e-9
    assert np.allclose(states[0].u, oracle, rtol=0, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 9))
def test_mass_conservation_and_positivity(seed, n):
    rng = np.random.default_rng(seed)
    states = init_states(random_deployment(rng, n))
    noisy = PerturbationConfig(enabled=True, scale=3.0)

    def provider(node, pseudo):
        return np.sin(pseudo + node)

    for t in range(50):
        graph = random_connected_graph(rng, n)  # time-varying graph
        states, actual = step(states, graph, t, StepSchedule(a0=5.0), noisy, BOX, rng, provider)
        assert abs(sum(s.phi for s in states) - n) <= 1e-9
        assert all(s.phi > 0 for s in states)
        assert BOX.contains(actual)


def test_step_does_not_mutate_inputs():
    rng = np.random.default_rng(1)
    states = init_states(random_deployment(rng, 3))
    before = [s.copy() for s in states]
    step(states, NeighborGraph.complete(3), 0, StepSchedule(), PerturbationConfig(), BOX, rng, lambda i, p: np.ones_like(p))
    for s, b in zip(states, before):
        assert np.array_equal(s.u, b.u) and np.array_equal(s.xi, b.xi) and s.phi == b.phi


def test_step_is_seed_deterministic():
    dep = random_deployment(np.random.default_rng(2), 4)
    graph = random_connected_graph(np.random.default_rng(3), 4)

    def run():
        rng = np.random.default_rng(9)
        states = init_states(dep)
        for t in range(20):
            states, actual = step(states, graph, t, StepSchedule(a0=10.0), PerturbationConfig(), BOX, rng, zero_provider)
        return actual

    assert np.array_equal(run(), run())


def test_axis_mask_freezes_altitude():
    dep = random_deployment(np.random.default_rng(4), 3)
    rng = np.random.default_rng(0)
    states = init_states(dep)
    for t in range(10):
        states, actual = step(
            states,
            NeighborGraph.complete(3),
            t,
            StepSchedule(a0=50.0),
            PerturbationConfig(),
            BOX,
            rng,
            lambda i, p: np.ones_like(p),
            axis_mask=(1, 1, 0),
        )
    assert np.array_equal(actual[:, 2], dep[:, 2])
    assert not np.array_equal(actual[:, :2], dep[:, :2])


def test_phi_underflow_raises():
    v = np.zeros(3)
    states = [PushSumNodeState(v, v, v, 1e-310)]
    with pytest.raises(NumericalFailure):
        step(states, NeighborGraph.complete(1), 0, StepSchedule(), OFF, BOX, np.random.default_rng(0), zero_provider)


def test_actual_positions_clamped():
    states = init_states([(4990.0, 10.0, 1490.0)])
    # the share pushed in round 0 moves the UAV in round 1
    for t in range(2):
        states, actual = step(
            states, NeighborGraph.complete(1), t, StepSchedule(a0=100.0), OFF, BOX, np.random.default_rng(0),
            lambda i, p: np.ones_like(p),
        )
    assert actual[0, 0] == 5000.0 and actual[0, 2] == 1500.0
    assert actual[0, 1] == pytest.approx(10.0 + 100.0 * 2**-0.55)


def test_calibrated_first_move():
    rng = np.random.default_rng(5)
    n = 5
    dep = np.column_stack([rng.uniform(1000, 4000, (n, 2)), np.full(n, 500.0)])
    graph = random_connected_graph(rng, n)
    grads = rng.normal(size=(n, 3 * n))
    a0 = calibrate_step_size(grads, graph, 0.55, 50.0)
    states = init_states(dep)
    moves = []
    for t in range(2):
        states, actual = step(
            states, graph, t, StepSchedule(a0=a0), OFF, BOX, rng, lambda i, p: grads[i].reshape(-1, 3)
        )
        moves.append(np.abs(actual - dep).max())
    assert moves[0] <= 1e-9
    assert moves[1] == pytest.approx(50.0, rel=1e-9)


# ---------------------------------------------------------------- diagnostics


def test_diagnostics():
    dep = random_deployment(np.random.default_rng(6), 4)
    d = consensus_diagnostics(init_states(dep))
    assert d == {"disagreement": 0.0, "mass": 4.0}
    v = np.array([1.0, 2.0, 3.0])
    w = np.array([1.5, 0.0, 3.0])
    d = consensus_diagnostics([PushSumNodeState(v, v, v, 0.5), PushSumNodeState(w, w, w, 1.5)])
    assert d == {"disagreement": 2.0, "mass": 2.0}
