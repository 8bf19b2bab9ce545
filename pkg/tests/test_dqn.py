import numpy as np
import pytest
from scipy import stats

from neuromimetic import golden
from neuromimetic.alphabet import build_alphabet
from neuromimetic.dqn import (
    DqnHyper,
    QNetwork,
    ReplayCue,
    ReplayMemory,
    dqn_select,
    q_forward,
    state_transition,
    td_loss_and_grads,
    train_step,
)
from neuromimetic.errors import DivergenceError


def random_batch(r, n=2, K=5, size=16, terminal_frac=0.3):
    X = r.standard_normal((size, n))
    return (X, r.integers(0, K, size), r.standard_normal(size), r.standard_normal((size, n)),
            r.random(size) < terminal_frac)


def test_zero_network_outputs_zero():
    net = QNetwork(2, 7)
    assert np.array_equal(q_forward(net, np.array([0.3, -0.2])), np.zeros(7))


def test_target_sync_and_staleness(rng):
    net = QNetwork(2, 5, rng=rng)
    probe = rng.standard_normal((10, 2))
    assert np.array_equal(net.forward(probe), net.forward(probe, use_target=True))
    before = {k: v.copy() for k, v in net.target.items()}
    for _ in range(5):
        train_step(net, random_batch(rng), 0.9, 1e-2, "sgd")
    for k in before:
        assert np.array_equal(before[k], net.target[k])
    assert not np.array_equal(net.forward(probe), net.forward(probe, use_target=True))
    net.sync_target()
    assert np.array_equal(net.forward(probe), net.forward(probe, use_target=True))


def test_gradient_check(rng):
    net = QNetwork(2, 5, hidden=32, rng=rng)
    # bias the first layer so no rectifier sits at its kink
    net.params["b1"] += 0.05
    net.params["b2"] += 0.05
    net.sync_target()
    batch = random_batch(rng)
    _, grads = td_loss_and_grads(net, *batch, gamma=0.9)
    step = 1e-5
    for _ in range(10):
        name = net.names[int(rng.integers(len(net.names)))]
        idx = tuple(int(rng.integers(s)) for s in net.params[name].shape)
        orig = net.params[name][idx]
        net.params[name][idx] = orig + step
        lp, _ = td_loss_and_grads(net, *batch, gamma=0.9)
        net.params[name][idx] = orig - step
        lm, _ = td_loss_and_grads(net, *batch, gamma=0.9)
        net.params[name][idx] = orig
        numeric = (lp - lm) / (2 * step)
        analytic = grads[name][idx]
        denom = max(abs(numeric), abs(analytic), 1e-8)
        assert abs(numeric - analytic) / denom < 1e-4, (name, idx, numeric, analytic)


def test_regression_to_reward(rng):
    net = QNetwork(2, 3, rng=rng)
    cue = ReplayCue(np.array([0.6, 0.8]), 1, -0.7, np.array([1.0, 0.0]), False)
    for _ in range(2000):
        train_step(net, [cue], 0.0, 1e-3, "adam")
    assert q_forward(net, cue.x)[1] == pytest.approx(-0.7, abs=1e-3)


def test_terminal_cue_ignores_target(rng):
    net = QNetwork(2, 3, rng=rng)
    batch = (np.array([[0.6, 0.8]]), np.array([2]), np.array([0.5]), np.array([[1.0, 0.0]]), np.array([True]))
    loss_a, _ = td_loss_and_grads(net, *batch, gamma=0.9)
    for v in net.target.values():
        v += 100.0
    loss_b, _ = td_loss_and_grads(net, *batch, gamma=0.9)
    assert loss_a == loss_b


def test_loss_nonincreasing_on_frozen_batch(rng):
    net = QNetwork(2, 4, rng=rng)
    batch = random_batch(rng, K=4, terminal_frac=1.0)
    losses = [train_step(net, batch, 0.9, 1e-3, "sgd") for _ in range(200)]
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_divergence_detected(rng):
    net = QNetwork(2, 3, rng=rng)
    batch = (np.array([[1.0, 0.0]]), np.array([0]), np.array([1e8]), np.array([[1.0, 0.0]]), np.array([True]))
    with pytest.raises(DivergenceError):
        train_step(net, batch, 0.9, 1e-3)
    net.params["W3"][:] = np.inf
    with pytest.raises(DivergenceError):
        q_forward(net, np.array([1.0, 0.0]))


def test_replay_ring_capacity():
    mem = ReplayMemory(5, 2)
    for k in range(12):
        mem.push(ReplayCue(np.array([k, 0.0]), k % 3, float(k), np.zeros(2)))
    assert len(mem) == 5
    assert sorted(mem.x[:, 0].tolist()) == [7, 8, 9, 10, 11]


def test_replay_sampling_uniform():
    mem = ReplayMemory(50, 1)
    for k in range(50):
        mem.push(ReplayCue(np.array([float(k)]), 0, 0.0, np.zeros(1)))
    idx = mem.sample_indices(100_000, np.random.default_rng(7))
    counts = np.bincount(idx, minlength=50)
    assert stats.chisquare(counts).pvalue > 0.01


def test_state_transition_examples():
    assert np.allclose(state_transition([1.0, 0.0], [0.0, -1.0], 0.1), [0.995, -0.0995], atol=1e-3)
    x = np.array([0.6, 0.8])
    assert np.array_equal(state_transition(x, [0.0, 0.0], 0.1), x)
    assert np.allclose(state_transition(x, [1.0, -3.0], 1e-9), x, atol=1e-8)
    # a step landing on the origin is a self-transition
    assert np.array_equal(state_transition([1.0, 0.0], [-10.0, 0.0], 0.1), [1.0, 0.0])


def test_hyper_validation():
    with pytest.raises(ValueError):
        DqnHyper(gamma=1.0)
    with pytest.raises(ValueError):
        DqnHyper(batch_size=0)


def test_single_action_alphabet(example_cfg):
    alph = build_alphabet(np.array([[1.0], [0.0]]), [(1,)])
    cfg = type(example_cfg)(golden.EXAMPLE_H, np.array([[1.0], [0.0]]))
    res = dqn_select(cfg, [0.0, 1.0], alph)
    assert res.direction == (1.0, 0.0)


def test_dqn_reference_point_and_determinism(example_cfg, example_alphabet):
    a = dqn_select(example_cfg, golden.FIG2_POINT, example_alphabet, DqnHyper(seed=11))
    b = dqn_select(example_cfg, golden.FIG2_POINT, example_alphabet, DqnHyper(seed=11))
    assert a.direction == golden.FIG2_DIRECTION
    assert a.pattern == min(golden.FIG2_PATTERNS)
    assert a.direction == b.direction and a.diagnostics["loss"] == b.diagnostics["loss"]
    assert a.diagnostics["kappa"] == sorted(a.diagnostics["kappa"], reverse=True)
