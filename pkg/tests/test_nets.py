import numpy as np
import pytest

from dealersim.nets import Mlp, RunningNorm, clip_grads, grads_global_norm


def loss_and_grads(net, x, g):
    """Scalar loss sum(g * f(x)) whose output gradient is exactly g."""
    out, cache = net.forward(x)
    loss = float(np.sum(g * out))
    grads, grad_in = net.backward(cache, g)
    return loss, grads, grad_in


def flat_grads(grads):
    return np.concatenate([a.ravel() for dw, db in grads for a in (dw, db)])


@pytest.mark.parametrize("sizes,batch", [
    ([4, 8, 5, 3], 7),
    ([2, 6, 1], 3),
    ([5, 16, 16, 2], 1),
])
def test_gradients_match_central_differences(sizes, batch):
    rng = np.random.default_rng(17)
    net = Mlp(sizes, rng)
    x = rng.normal(size=(batch, sizes[0]))
    g = rng.normal(size=(batch, sizes[-1]))

    _, grads, _ = loss_and_grads(net, x, g)
    analytic = flat_grads(grads)

    theta = net.get_flat()
    eps = 1e-6
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        for sign, slot in ((1.0, 0), (-1.0, 1)):
            t = theta.copy()
            t[i] += sign * eps
            net.set_flat(t)
            val = float(np.sum(g * net(x)))
            if slot == 0:
                up = val
            else:
                dn = val
        numeric[i] = (up - dn) / (2 * eps)
    net.set_flat(theta)

    denom = np.maximum(np.abs(numeric), 1e-4)
    rel = np.abs(analytic - numeric) / denom
    assert rel.max() < 1e-5


def test_input_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    net = Mlp([3, 7, 2], rng)
    x = rng.normal(size=(1, 3))
    g = rng.normal(size=(1, 2))
    _, _, grad_in = loss_and_grads(net, x, g)
    eps = 1e-6
    for i in range(3):
        xp, xm = x.copy(), x.copy()
        xp[0, i] += eps
        xm[0, i] -= eps
        num = (np.sum(g * net(xp)) - np.sum(g * net(xm))) / (2 * eps)
        assert grad_in[0, i] == pytest.approx(num, rel=1e-5, abs=1e-8)


def test_zero_weights_give_zero_output():
    net = Mlp([3, 4, 2], np.random.default_rng(0))
    net.set_flat(np.zeros(net.get_flat().size))
    assert np.all(net(np.ones((2, 3))) == 0.0)


def test_single_layer_is_affine():
    rng = np.random.default_rng(1)
    net = Mlp([4, 3], rng)
    x = rng.normal(size=(5, 4))
    np.testing.assert_allclose(net(x), x @ net.weights[0].T + net.biases[0], rtol=1e-12)


def test_shape_mismatch_rejected():
    net = Mlp([4, 3], np.random.default_rng(0))
    with pytest.raises(ValueError):
        net(np.zeros((2, 5)))
    with pytest.raises(ValueError):
        Mlp([4], np.random.default_rng(0))


def test_flat_round_trip_and_apply_grads():
    rng = np.random.default_rng(2)
    net = Mlp([3, 5, 2], rng)
    theta = net.get_flat()
    net.set_flat(theta * 2.0)
    np.testing.assert_allclose(net.get_flat(), theta * 2.0)
    with pytest.raises(ValueError):
        net.set_flat(theta[:-1])

    x = rng.normal(size=(4, 3))
    g = rng.normal(size=(4, 2))
    _, grads, _ = loss_and_grads(net, x, g)
    before = net.get_flat()
    net.apply_grads(grads, lr=0.1)
    np.testing.assert_allclose(net.get_flat(), before - 0.1 * flat_grads(grads))


def test_serialization_round_trip():
    net = Mlp([3, 6, 2], np.random.default_rng(4))
    back = Mlp.from_dict(net.to_dict())
    x = np.random.default_rng(5).normal(size=(3, 3))
    np.testing.assert_array_equal(back(x), net(x))


def test_clip_grads_scales_to_max_norm():
    rng = np.random.default_rng(6)
    net = Mlp([2, 4, 1], rng)
    x = rng.normal(size=(8, 2))
    g = np.full((8, 1), 10.0)
    _, grads, _ = loss_and_grads(net, x, g)
    extra = rng.normal(size=3) * 5.0

    raw = np.sqrt(grads_global_norm(grads) ** 2 + np.sum(extra**2))
    assert raw > 0.5
    returned = clip_grads(grads, 0.5, extra=extra)
    assert returned == pytest.approx(raw)
    clipped = np.sqrt(grads_global_norm(grads) ** 2 + np.sum(extra**2))
    assert clipped == pytest.approx(0.5, rel=1e-9)


def test_clip_grads_leaves_small_gradients_alone():
    grads = [(np.array([[0.01]]), np.array([0.01]))]
    clip_grads(grads, 1.0)
    assert grads[0][0][0, 0] == pytest.approx(0.01)


def test_running_norm_matches_numpy_moments():
    rng = np.random.default_rng(8)
    data = rng.normal(3.0, 2.0, size=(60, 4))
    norm = RunningNorm(4)
    norm.update(data[:25])
    norm.update(data[25:])
    np.testing.assert_allclose(norm.mean, data.mean(axis=0), rtol=1e-9)
    np.testing.assert_allclose(
        norm.std, np.sqrt(data.var(axis=0, ddof=1) + norm.eps), rtol=1e-9
    )
    z = norm.normalize(data[0])
    np.testing.assert_allclose(z, (data[0] - norm.mean) / norm.std, rtol=1e-9)


def test_running_norm_clips_and_handles_cold_start():
    norm = RunningNorm(2, clip=5.0)
    np.testing.assert_array_equal(norm.normalize(np.array([99.0, -99.0])), [5.0, -5.0])
    norm.update(np.array([[1.0, 1.0]]))
    # still count < 2: passthrough minus mean, clipped
    np.testing.assert_array_equal(norm.normalize(np.array([2.0, 1.0])), [1.0, 0.0])


def test_running_norm_round_trip():
    norm = RunningNorm(3)
    norm.update(np.random.default_rng(9).normal(size=(10, 3)))
    back = RunningNorm.from_dict(norm.to_dict())
    x = np.array([0.3, -1.2, 4.0])
    np.testing.assert_array_equal(back.normalize(x), norm.normalize(x))
