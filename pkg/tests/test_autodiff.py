import numpy as np
import pytest

from supportnav import autodiff as ad
from supportnav.autodiff import NonFiniteGradient, Tensor
from supportnav.oracles import brute_maxpool, finite_difference, naive_dense


def param(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


# --- dense ---------------------------------------------------------------------

def test_dense_identity():
    x = Tensor(np.array([1.0, -2.0, 3.0]))
    y = ad.dense(x, Tensor(np.eye(3)), Tensor(np.zeros(3)))
    assert np.array_equal(y.data, x.data)


def test_dense_zero_weight_gives_bias():
    x = Tensor(np.array([1.0, -2.0, 3.0]))
    y = ad.dense(x, Tensor(np.zeros((3, 2))), Tensor(np.array([5.0, -1.0])))
    assert np.array_equal(y.data, [5.0, -1.0])


def test_dense_matches_naive_loop():
    rng = np.random.default_rng(0)
    w = rng.normal(size=(4, 3))
    b = rng.normal(size=3)
    x = rng.normal(size=4)
    got = ad.dense(Tensor(x), Tensor(w), Tensor(b)).data
    assert np.allclose(got, naive_dense(w, b, x), atol=1e-14)


def test_dense_shape_mismatch():
    with pytest.raises(ValueError):
        ad.dense(Tensor(np.zeros(3)), Tensor(np.zeros((4, 2))))
    with pytest.raises(ValueError):
        ad.dense(Tensor(np.zeros(4)), Tensor(np.zeros((4, 2))), Tensor(np.zeros(3)))


def test_dense_batched_3d():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 5, 3))
    w = rng.normal(size=(3, 4))
    b = rng.normal(size=4)
    y = ad.dense(Tensor(x), Tensor(w), Tensor(b))
    assert y.data.shape == (2, 5, 4)
    assert np.allclose(y.data[1, 2], x[1, 2] @ w + b)


# --- activations ------------------------------------------------------------------

def test_lrelu_values():
    y = ad.lrelu(Tensor(np.array([-1.0, 2.0, 0.0])))
    assert np.array_equal(y.data, [-0.01, 2.0, 0.0])


def test_sigmoid_at_zero():
    assert ad.sigmoid(Tensor(np.array([0.0]))).data[0] == 0.5


def test_tanh_range():
    y = ad.tanh(Tensor(np.array([-50.0, 0.0, 50.0])))
    assert np.all(np.abs(y.data) <= 1.0)


@pytest.mark.parametrize("op", [ad.lrelu, ad.sigmoid, ad.tanh, ad.exp, ad.softplus, ad.square])
def test_activation_derivatives_match_finite_differences(op):
    rng = np.random.default_rng(7)
    xs = rng.normal(size=20) * 2.0
    xs = xs[np.abs(xs) > 1e-3]  # keep away from the lrelu kink
    for x0 in xs:
        x = Tensor(np.array([x0]), requires_grad=True)
        y = op(x)
        ad.backward(ad.sum_(y))
        arr = np.array([x0])
        fd = finite_difference(lambda: float(np.sum(op(Tensor(arr)).data)), arr, h=1e-6)
        assert x.grad[0] == pytest.approx(fd[0], rel=1e-6, abs=1e-9)


def test_log_derivative():
    x = Tensor(np.array([2.0]), requires_grad=True)
    ad.backward(ad.sum_(ad.log(x)))
    assert x.grad[0] == pytest.approx(0.5)


# --- structural ops ---------------------------------------------------------------

def test_maxpool_single_point():
    f = Tensor(np.array([[1.0, -2.0, 3.0]]))
    pooled, argmax = ad.maxpool_points(f)
    assert np.array_equal(pooled.data, [1.0, -2.0, 3.0])
    assert np.array_equal(argmax, [0, 0, 0])


def test_maxpool_known_argmax():
    f = np.zeros((4, 3))
    f[2, 0] = 5.0
    f[0, 1] = 1.0
    f[3, 2] = 2.0
    pooled, argmax = ad.maxpool_points(Tensor(f))
    assert np.array_equal(argmax, [2, 0, 3])
    assert np.array_equal(pooled.data, [5.0, 1.0, 2.0])


def test_maxpool_vs_bruteforce():
    rng = np.random.default_rng(3)
    f = rng.normal(size=(50, 8))
    pooled, argmax = ad.maxpool_points(Tensor(f))
    want_pool, want_arg = brute_maxpool(f)
    assert np.array_equal(pooled.data, want_pool)
    assert np.array_equal(argmax, want_arg)


def test_maxpool_tie_breaks_lowest_index():
    f = np.array([[1.0], [1.0], [0.5]])
    _, argmax = ad.maxpool_points(Tensor(f))
    assert argmax[0] == 0


def test_maxpool_gradient_is_onehot_routing():
    rng = np.random.default_rng(4)
    f = Tensor(rng.normal(size=(6, 3)), requires_grad=True)
    pooled, argmax = ad.maxpool_points(f)
    ad.backward(ad.sum_(pooled))
    # exactly one 1 per column, at the argmax row
    assert np.array_equal(f.grad.sum(axis=0), np.ones(3))
    for j in range(3):
        assert f.grad[argmax[j], j] == 1.0
        assert np.count_nonzero(f.grad[:, j]) == 1


def test_concat_and_split_gradients():
    a = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    b = Tensor(np.array([3.0]), requires_grad=True)
    out = ad.concat([a, b])
    ad.backward(ad.sum_(ad.mul(out, Tensor(np.array([1.0, 10.0, 100.0])))))
    assert np.array_equal(a.grad, [1.0, 10.0])
    assert np.array_equal(b.grad, [100.0])


def test_clip_gradient_passes_inside_only():
    x = Tensor(np.array([-30.0, 0.5, 30.0]), requires_grad=True)
    y = ad.clip(x, -20.0, 2.0)
    assert np.array_equal(y.data, [-20.0, 0.5, 2.0])
    ad.backward(ad.sum_(y))
    assert np.array_equal(x.grad, [0.0, 1.0, 0.0])


def test_minimum_routes_gradient():
    a = Tensor(np.array([1.0, 5.0]), requires_grad=True)
    b = Tensor(np.array([2.0, 3.0]), requires_grad=True)
    ad.backward(ad.sum_(ad.minimum(a, b)))
    assert np.array_equal(a.grad, [1.0, 0.0])
    assert np.array_equal(b.grad, [0.0, 1.0])


def test_mean_axis_gradient():
    x = Tensor(np.ones((4, 3)), requires_grad=True)
    ad.backward(ad.sum_(ad.mean(x, axis=0)))
    assert np.allclose(x.grad, 0.25)


def test_reshape_round_trip_gradient():
    x = Tensor(np.arange(6, dtype=float), requires_grad=True)
    y = ad.reshape(ad.reshape(x, (2, 3)), (6,))
    ad.backward(ad.sum_(ad.square(y)))
    assert np.array_equal(x.grad, 2.0 * x.data)


# --- backward engine ----------------------------------------------------------------

def test_sum_gradient_is_ones():
    x = Tensor(np.array([1.0, -4.0, 2.5]), requires_grad=True)
    ad.backward(ad.sum_(x))
    assert np.array_equal(x.grad, np.ones(3))


def test_tensor_used_twice_accumulates():
    x = Tensor(np.array([3.0]), requires_grad=True)
    ad.backward(ad.sum_(ad.add(x, x)))
    assert x.grad[0] == 2.0


def test_shared_gradient_buffers_do_not_alias():
    """Regression: pass-through gradients must not share buffers between
    two parents, or a second accumulation corrupts the sibling."""
    a = Tensor(np.array([1.0, 1.0]), requires_grad=True)
    b = Tensor(np.array([2.0, 2.0]), requires_grad=True)
    s = ad.add(a, b)  # same shapes: both sides would see the same array
    total = ad.add(ad.sum_(s), ad.sum_(ad.scale(a, 3.0)))  # extra path into a
    ad.backward(total)
    assert np.array_equal(a.grad, [4.0, 4.0])
    assert np.array_equal(b.grad, [1.0, 1.0])


def test_small_net_gradcheck():
    rng = np.random.default_rng(5)
    w = param(rng, 3, 4)
    x = rng.normal(size=3)

    def loss_fn() -> float:
        return float(np.sum((x @ w.data) ** 2))

    w.grad = None
    y = ad.dense(Tensor(x), w)
    ad.backward(ad.sum_(ad.square(y)))
    fd = finite_difference(loss_fn, w.data)
    assert np.allclose(w.grad, fd, rtol=1e-4, atol=1e-8)


def test_composition_gradcheck():
    """Gate-style composition: lrelu(dense) * sigmoid(dense), pooled."""
    rng = np.random.default_rng(6)
    w1, b1 = param(rng, 2, 5), param(rng, 5)
    w2, b2 = param(rng, 4, 5), param(rng, 5)
    pts = rng.normal(size=(7, 2))
    g = rng.normal(size=4)

    def forward():
        h = ad.mul(
            ad.lrelu(ad.dense(Tensor(pts), w1, b1)),
            ad.sigmoid(ad.dense(Tensor(g), w2, b2)),
        )
        pooled, _ = ad.maxpool_points(h)
        return ad.sum_(ad.square(pooled))

    for p in (w1, b1, w2, b2):
        p.grad = None
    ad.backward(forward())
    for p in (w1, b1, w2, b2):
        fd = finite_difference(lambda: float(forward().data), p.data)
        assert np.allclose(p.grad, fd, rtol=1e-3, atol=1e-7)


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError):
        ad.backward(ad.square(x))


def test_nonfinite_loss_raises():
    x = Tensor(np.array([0.0]), requires_grad=True)
    bad = ad.log(x)  # -inf
    with pytest.raises(NonFiniteGradient):
        ad.backward(ad.sum_(bad))


def test_nonfinite_param_grad_raises():
    # log of a subnormal is finite but its derivative 1/x overflows to inf
    x = Tensor(np.array([1e-320]), requires_grad=True)
    y = ad.log(x)
    with pytest.raises(NonFiniteGradient):
        ad.backward(ad.sum_(y), check_params=[x])


def test_no_grad_forward_records_nothing():
    x = Tensor(np.ones(4))
    y = ad.lrelu(ad.dense(x, Tensor(np.ones((4, 2)))))
    assert not y.requires_grad
    assert y._backward_fn is None


def test_forward_backward_deterministic():
    rng = np.random.default_rng(11)
    w_data = rng.normal(size=(3, 3))
    x_data = rng.normal(size=3)

    def run():
        w = Tensor(w_data.copy(), requires_grad=True)
        y = ad.sum_(ad.tanh(ad.dense(Tensor(x_data), w)))
        ad.backward(y)
        return y.data.copy(), w.grad.copy()

    y1, g1 = run()
    y2, g2 = run()
    assert np.array_equal(y1, y2)
    assert np.array_equal(g1, g2)


def test_operator_sugar():
    x = Tensor(np.array([2.0]), requires_grad=True)
    y = (x * 3.0 + 1.0) - x
    ad.backward(ad.sum_(y))
    assert y.data[0] == 5.0
    assert x.grad[0] == 2.0
