import math

import numpy as np
import pytest

from advnoise.errors import ParameterError, ShapeError
from advnoise.linalg import Rng
from advnoise.net import (
    Network,
    NetworkSpec,
    backward,
    forward,
    load_checkpoint,
    loss_soft_ce,
    save_checkpoint,
    softmax_t,
)


def linear_net(w, b, activation="relu"):
    w = np.asarray(w, dtype=float)
    b = np.asarray(b, dtype=float)
    spec = NetworkSpec(input_dim=w.shape[1], hidden=(), classes=w.shape[0], activation=activation)
    return Network(spec, [w], [b])


def random_case(seed, k_max=5, force_tanh=False):
    """Random (net, x, target, T) tuple; relu cases avoid kink-adjacent inputs."""
    rng = Rng(seed)
    g = rng.gen
    input_dim = int(g.integers(2, 7))
    depth = int(g.integers(1, 3))
    hidden = tuple(int(g.integers(3, 9)) for _ in range(depth))
    k = int(g.integers(2, k_max + 1))
    activation = "tanh" if force_tanh or g.integers(2) else "relu"
    spec = NetworkSpec(input_dim, hidden, k, activation)
    net = Network.init(spec, rng.split(1))
    temperature = float(np.exp(g.uniform(np.log(0.25), np.log(4.0))))
    target = g.dirichlet(np.ones(k))
    for _ in range(100):
        x = g.normal(size=input_dim)
        if activation == "tanh":
            break
        pres = _all_preactivations(net, x)
        if min(abs(p) for p in pres) > 1e-4:  # keep finite differences off relu kinks
            break
    return net, x, target, temperature


def _all_preactivations(net, x):
    h = x
    pres = []
    for i in range(net.n_layers):
        pre = net.weights[i] @ h + net.biases[i]
        pres.extend(abs(float(v)) for v in pre)
        if i < net.n_layers - 1:
            h = np.maximum(pre, 0.0) if net.spec.activation == "relu" else np.tanh(pre)
        else:
            h = pre
    return pres


def straight_line_forward(net, x):
    """Same arithmetic as forward(), written out without the library helpers."""
    h = np.asarray(x, dtype=float)
    for i in range(net.n_layers):
        w, b = net.weights[i], net.biases[i]
        pre = np.zeros(w.shape[0])
        for r in range(w.shape[0]):
            s = 0.0
            for c in range(w.shape[1]):
                s += h[c] * w[r, c]
            pre[r] = s + b[r]
        if i < net.n_layers - 1:
            h = np.maximum(pre, 0.0) if net.spec.activation == "relu" else np.tanh(pre)
        else:
            h = pre
    return h


def total_loss(net, x, target, temperature):
    return loss_soft_ce(softmax_t(forward(net, x), temperature), target)


def fd_check(net, x, target, temperature, h=1e-5, rtol=1e-5, afloor=1e-10):
    """Central finite differences on every input and parameter coordinate."""
    bundle = backward(net, x, target, temperature)

    def relerr_ok(analytic, numeric):
        diff = abs(analytic - numeric)
        return diff <= rtol * max(abs(analytic), abs(numeric)) or diff <= afloor

    for j in range(x.shape[0]):
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        num = (total_loss(net, xp, target, temperature) - total_loss(net, xm, target, temperature)) / (2 * h)
        if not relerr_ok(bundle.input_grad[j], num):
            return False
    for layer in range(net.n_layers):
        for arrays, grads in ((net.weights, bundle.weight_grads), (net.biases, bundle.bias_grads)):
            arr = arrays[layer]
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                lp = total_loss(net, x, target, temperature)
                arr[idx] = orig - h
                lm = total_loss(net, x, target, temperature)
                arr[idx] = orig
                if not relerr_ok(grads[layer][idx], (lp - lm) / (2 * h)):
                    return False
    return True


def test_forward_zero_weights_returns_biases():
    net = linear_net(np.zeros((3, 2)), [0.5, -1.0, 2.0])
    assert np.array_equal(forward(net, np.array([7.0, -3.0])), np.array([0.5, -1.0, 2.0]))


def test_forward_single_linear_layer_matches_hand_computation():
    w = np.array([[1.0, 2.0], [-1.0, 0.5]])
    b = np.array([0.1, -0.2])
    x = np.array([3.0, -4.0])
    assert np.allclose(forward(linear_net(w, b), x), w @ x + b, rtol=0, atol=1e-15)


def test_forward_matches_straight_line_reimplementation():
    spec = NetworkSpec(4, (6, 5), 3, "relu")
    net = Network.init(spec, Rng(2024))
    x = Rng(5).gen.normal(size=4)
    assert np.array_equal(forward(net, x), straight_line_forward(net, x))


def test_forward_shape_error():
    net = linear_net(np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(ShapeError):
        forward(net, np.zeros(4))


def test_softmax_symmetry():
    assert np.allclose(softmax_t(np.array([0.0, 0.0]), 1.0), [0.5, 0.5], rtol=0, atol=0)


def test_softmax_infinite_temperature_limit():
    probs = softmax_t(np.array([3.0, -1.0, 0.5, 2.0]), 1e6)
    assert np.all(np.abs(probs - 0.25) < 1e-5)


def test_softmax_closed_form():
    probs = softmax_t(np.array([2.0, 0.0]), 2.0)
    e = math.e
    assert np.allclose(probs, [e / (e + 1), 1 / (e + 1)], rtol=1e-15, atol=0)


def test_softmax_rejects_nonpositive_temperature():
    for bad in (0.0, -1.0):
        with pytest.raises(ParameterError):
            softmax_t(np.array([1.0, 2.0]), bad)


def test_softmax_simplex_and_argmax_invariance():
    g = Rng(31).gen
    for _ in range(200):
        z = g.normal(size=int(g.integers(2, 9))) * g.uniform(0.1, 10)
        t = float(np.exp(g.uniform(np.log(1e-2), np.log(1e3))))
        p = softmax_t(z, t)
        assert np.all(p >= 0)
        assert abs(p.sum() - 1.0) < 1e-12
        assert np.argmax(p) == np.argmax(z)


def test_loss_fair_coin_entropy():
    p = np.array([0.5, 0.5])
    assert abs(loss_soft_ce(p, p) - math.log(2)) < 1e-15


def test_loss_perfect_one_hot_prediction():
    assert loss_soft_ce(np.array([0.0, 1.0]), np.array([0.0, 1.0])) == 0.0


def test_loss_minimized_at_matching_distribution():
    target = np.array([0.8, 0.2])
    uniform = np.array([0.5, 0.5])
    assert abs(loss_soft_ce(uniform, target) - math.log(2)) < 1e-15
    candidates = [np.array([p, 1 - p]) for p in np.linspace(0.01, 0.99, 99)]
    losses = [loss_soft_ce(c, target) for c in candidates]
    best = candidates[int(np.argmin(losses))]
    assert np.allclose(best, target, atol=0.011)
    assert loss_soft_ce(target, target) <= min(losses) + 1e-12


def test_loss_gibbs_inequality_random():
    g = Rng(77).gen
    for _ in range(300):
        k = int(g.integers(2, 7))
        p = g.dirichlet(np.ones(k))
        q = g.dirichlet(np.ones(k))
        assert loss_soft_ce(q, p) >= loss_soft_ce(p, p) - 1e-12


def test_backward_stationary_at_matching_probs():
    # logits chosen so softmax equals the target: parameter grads vanish
    w = np.zeros((3, 2))
    b = np.log(np.array([0.2, 0.3, 0.5]))
    net = linear_net(w, b)
    target = softmax_t(forward(net, np.array([0.4, -0.1])), 1.0)
    bundle = backward(net, np.array([0.4, -0.1]), target, 1.0)
    for gw, gb in zip(bundle.weight_grads, bundle.bias_grads):
        assert np.all(np.abs(gw) < 1e-12)
        assert np.all(np.abs(gb) < 1e-12)


def test_backward_finite_difference_spot_checks():
    for seed in range(25):
        net, x, target, temperature = random_case(1000 + seed)
        assert fd_check(net, x, target, temperature), f"seed {seed}"


def test_backward_class_permutation_equivariance():
    net, x, target, temperature = random_case(4242, force_tanh=True)
    k = net.spec.classes
    perm = Rng(8).gen.permutation(k)
    plain = backward(net, x, target, temperature)

    permuted_net = net.copy()
    permuted_net.weights[-1] = net.weights[-1][perm]
    permuted_net.biases[-1] = net.biases[-1][perm]
    permuted = backward(permuted_net, x, target[perm], temperature)

    assert np.allclose(permuted.input_grad, plain.input_grad, rtol=0, atol=1e-14)
    assert np.allclose(permuted.weight_grads[-1], plain.weight_grads[-1][perm], rtol=0, atol=1e-14)
    for layer in range(net.n_layers - 1):
        assert np.allclose(permuted.weight_grads[layer], plain.weight_grads[layer], rtol=0, atol=1e-14)


def test_checkpoint_round_trip_bit_exact(tmp_path):
    spec = NetworkSpec(3, (5,), 4, "tanh")
    net = Network.init(spec, Rng(99))
    path = tmp_path / "net.npz"
    save_checkpoint(net, path)
    loaded = load_checkpoint(path)
    assert loaded.spec == spec
    for w1, w2 in zip(net.weights, loaded.weights):
        assert np.array_equal(w1, w2)
    for b1, b2 in zip(net.biases, loaded.biases):
        assert np.array_equal(b1, b2)


def test_network_init_is_seeded():
    spec = NetworkSpec(3, (4,), 2)
    a = Network.init(spec, Rng(1))
    b = Network.init(spec, Rng(1))
    for w1, w2 in zip(a.weights, b.weights):
        assert np.array_equal(w1, w2)


def test_spec_validation():
    with pytest.raises(ParameterError):
        NetworkSpec(2, (), 1)
    with pytest.raises(ParameterError):
        NetworkSpec(2, (0,), 3)
    with pytest.raises(ParameterError):
        NetworkSpec(2, (3,), 3, activation="gelu")
