import numpy as np
import pytest

from tabsynth import grad_core as gc


def finite_diff(f, x, h=1e-5):
    """Central finite differences of a scalar function over a flat vector."""
    g = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


class TestTensorOps:
    def test_sum_of_squares_gradient(self):
        p = gc.Tensor(np.array([1.0, -2.0, 3.0]))
        loss = gc.tsum(p**2)
        loss.backward()
        assert np.allclose(p.grad, 2 * p.value)

    def test_constant_loss_zero_gradient(self):
        p = gc.Tensor(np.array([1.0, 2.0]))
        grads = gc.grad(lambda: gc.Tensor(5.0), [p])
        assert np.all(grads[0] == 0)

    def test_shared_subgraph_accumulates_once(self):
        x = gc.Tensor(3.0)
        y = x * x  # reused node
        loss = y + y
        loss.backward()
        assert float(x.grad) == pytest.approx(12.0)

    def test_broadcasting_unbroadcast(self):
        a = gc.Tensor(np.ones((3, 2)))
        b = gc.Tensor(np.array([1.0, 2.0]))
        loss = gc.tsum(a * b)
        loss.backward()
        assert b.grad.tolist() == [3.0, 3.0]

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nonfinite_loss_raises(self):
        p = gc.Tensor(0.0)
        with pytest.raises(gc.GradientError):
            gc.grad(lambda: gc.log(p), [p])

    def test_gather_scatters_gradient(self):
        t = gc.Tensor(np.arange(5.0))
        out = gc.tsum(gc.gather(t, np.array([1, 1, 3])))
        out.backward()
        assert t.grad.tolist() == [0.0, 2.0, 0.0, 1.0, 0.0]


class TestLayerForward:
    def test_zero_weights_tanh(self):
        layer = gc.DenseLayer(gc.Tensor(np.zeros((3, 2))), gc.Tensor(np.zeros(3)), "tanh")
        assert np.all(gc.layer_forward(layer, np.array([4.0, -1.0])) == 0)

    def test_identity(self):
        layer = gc.DenseLayer(gc.Tensor(np.eye(3)), gc.Tensor(np.zeros(3)), "identity")
        x = np.array([1.0, 2.0, 3.0])
        assert np.allclose(gc.layer_forward(layer, x), x)

    def test_sigmoid_at_zero(self):
        layer = gc.DenseLayer(gc.Tensor(np.ones((1, 1))), gc.Tensor(np.zeros(1)), "sigmoid")
        assert gc.layer_forward(layer, np.zeros(1))[0] == 0.5

    def test_dimension_mismatch(self):
        layer = gc.DenseLayer(gc.Tensor(np.zeros((2, 3))), gc.Tensor(np.zeros(2)))
        with pytest.raises(ValueError):
            layer(np.zeros(4))

    @pytest.mark.parametrize("activation,lo,hi", [("tanh", -1, 1), ("sigmoid", 0, 1)])
    def test_activation_ranges(self, activation, lo, hi):
        rng = np.random.default_rng(0)
        layer = gc.DenseLayer(
            gc.Tensor(rng.normal(size=(5, 5))), gc.Tensor(rng.normal(size=5)), activation
        )
        out = gc.layer_forward(layer, rng.normal(size=(20, 5)))
        assert np.all(out > lo) and np.all(out < hi)

    def test_exponential_positive(self):
        rng = np.random.default_rng(1)
        layer = gc.DenseLayer(
            gc.Tensor(rng.normal(size=(4, 4))), gc.Tensor(np.zeros(4)), "exponential"
        )
        assert np.all(gc.layer_forward(layer, rng.normal(size=(10, 4))) > 0)


class TestNetworkGradients:
    def test_three_layer_tanh_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        mlp = gc.init_params([4, 5, 5, 2], rng.integers(1 << 30), ["tanh", "tanh", "identity"])
        x = rng.normal(size=4)
        params = mlp.parameters()
        grads = gc.grad(lambda: gc.tsum(mlp(x) ** 2), params)
        for p, g in zip(params, grads):
            flat = p.value.ravel().copy()

            def f(v, p=p):
                p.value = v.reshape(p.value.shape)
                return float(gc.tsum(mlp(x) ** 2).value)

            fd = finite_diff(f, flat)
            p.value = flat.reshape(p.value.shape)
            rel = np.abs(g.ravel() - fd) / np.maximum(1e-6, np.abs(g.ravel()) + np.abs(fd))
            assert rel.max() < 1e-4

    def test_mixed_activation_graph(self):
        rng = np.random.default_rng(9)
        mlp = gc.init_params([3, 4, 3], rng.integers(1 << 30), ["sigmoid", "exponential"])
        x = rng.normal(size=3)
        params = mlp.parameters()
        grads = gc.grad(lambda: gc.tmean(gc.tanh(mlp(x))), params)
        w = params[0]
        flat = w.value.ravel().copy()

        def f(v):
            w.value = v.reshape(w.value.shape)
            return float(gc.tmean(gc.tanh(mlp(x))).value)

        fd = finite_diff(f, flat)
        w.value = flat.reshape(w.value.shape)
        rel = np.abs(grads[0].ravel() - fd) / np.maximum(
            1e-6, np.abs(grads[0].ravel()) + np.abs(fd)
        )
        assert rel.max() < 1e-4


class TestOptimizers:
    def test_sgd_step(self):
        p = gc.Tensor(1.0)
        gc.Sgd(0.1).step([p], [np.asarray(1.0)])
        assert float(p.value) == pytest.approx(0.9)

    def test_zero_gradient_keeps_params(self):
        for opt in (gc.Sgd(0.1), gc.Adam(0.1)):
            p = gc.Tensor(2.5)
            opt.step([p], [np.asarray(0.0)])
            assert float(p.value) == 2.5

    @pytest.mark.parametrize("scale", [1.0, 1e-3, 1e3])
    def test_adam_first_step_magnitude(self, scale):
        p = gc.Tensor(0.0)
        gc.Adam(0.01).step([p], [np.asarray(scale)])
        assert abs(float(p.value)) == pytest.approx(0.01, rel=1e-4)

    def test_bad_learning_rate(self):
        with pytest.raises(ValueError):
            gc.Sgd(0.0)
        with pytest.raises(ValueError):
            gc.make_optimizer("rmsprop", 0.1)


class TestInitParams:
    def test_same_seed_identical(self):
        a = gc.init_params([4, 8, 2], 123)
        b = gc.init_params([4, 8, 2], 123)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert np.array_equal(pa.value, pb.value)

    def test_biases_zero(self):
        mlp = gc.init_params([3, 7, 2], 0)
        for layer in mlp.layers:
            assert np.all(layer.biases.value == 0)

    def test_weight_mean_near_zero(self):
        mlp = gc.init_params([200, 200], 1)
        assert -0.05 < mlp.layers[0].weights.value.mean() < 0.05

    def test_glorot_bound(self):
        mlp = gc.init_params([10, 30], 2)
        limit = np.sqrt(6.0 / 40.0)
        assert np.abs(mlp.layers[0].weights.value).max() <= limit


class TestSerialization:
    def test_mlp_round_trip(self):
        mlp = gc.init_params([3, 5, 2], 11, ["sigmoid", "identity"])
        again = gc.mlp_from_dict(gc.mlp_to_dict(mlp))
        x = np.random.default_rng(0).normal(size=3)
        assert np.array_equal(mlp(x).value, again(x).value)
