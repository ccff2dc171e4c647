import numpy as np
import pytest

from thzvr.nn import (AdamOptimizer, GruRegressor, LstmClassifier, MlpNet,
                      ParameterTree, SceneCnn, SgdOptimizer, cross_entropy,
                      grad_check, mse)
from thzvr.nn import layers, recurrent


class TestDense:
    def test_identity(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        y, _ = layers.dense(x, np.eye(2), np.zeros(2))
        np.testing.assert_allclose(y, x)

    def test_zero_input_gives_bias(self):
        y, _ = layers.dense(np.zeros((3, 2)), np.ones((2, 4)), np.arange(4.0))
        np.testing.assert_allclose(y, np.tile(np.arange(4.0), (3, 1)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            layers.dense(np.zeros((2, 3)), np.zeros((4, 5)), np.zeros(5))

    def test_gradient(self):
        rng = np.random.default_rng(0)
        net = MlpNet([3, 4, 2], rng)
        x = rng.normal(size=(5, 3))
        t = rng.normal(size=(5, 2))

        def loss_fn():
            net.tree.zero_grads()
            loss, dy = mse(net.forward(x), t)
            net.backward(dy)
            return loss

        assert grad_check(loss_fn, net.tree).passed


class TestConvPool:
    def test_output_shape_same_hw(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(size=(2, 21, 21, 3))
        k = rng.normal(size=(2, 2, 3, 64))
        y, _ = layers.conv2d(x, k, np.zeros(64))
        assert y.shape == (2, 21, 21, 64)

    def test_all_ones_kernel_interior(self):
        x = np.full((1, 6, 6, 3), 2.0)
        k = np.ones((2, 2, 3, 1))
        y, _ = layers.conv2d(x, k, np.zeros(1))
        np.testing.assert_allclose(y[0, :5, :5, 0], 2.0 * 4 * 3)

    def test_pool_ceil_shape_and_values(self):
        x = np.arange(25.0).reshape(1, 5, 5, 1)
        y, _ = layers.maxpool2x2(x)
        assert y.shape == (1, 3, 3, 1)
        assert y[0, 0, 0, 0] == 6.0   # max of the top-left 2x2 block
        assert y[0, 2, 2, 0] == 24.0  # ragged corner window

    def test_conv_gradient(self):
        rng = np.random.default_rng(2)
        cnn = SceneCnn(5, 3, 4, 6, 2, rng)
        x = rng.uniform(size=(2, 5, 5, 3))
        labels = np.array([0, 1])

        def loss_fn():
            cnn.tree.zero_grads()
            loss, dp = cross_entropy(cnn.forward(x), labels)
            cnn.backward(dp)
            return loss

        report = grad_check(loss_fn, cnn.tree, max_entries_per_param=40,
                            rng=np.random.default_rng(3))
        assert report.passed, report.max_rel_error


class TestRecurrent:
    def test_zero_weight_gru_halves_state(self):
        h = np.array([[0.8, -0.4]])
        hid = 2
        wx = np.zeros((3, 3 * hid))
        wh = np.zeros((hid, 3 * hid))
        b = np.zeros(3 * hid)
        h_new, _ = recurrent.gru_step(np.zeros((1, 3)), h, wx, wh, b)
        np.testing.assert_allclose(h_new, 0.5 * h)

    def test_sequence_length_one_equals_single_step(self):
        rng = np.random.default_rng(4)
        gru = GruRegressor(2, 3, rng)
        xs = rng.normal(size=(2, 1, 2))
        h0 = np.zeros((2, 3))
        h_seq, _ = recurrent.gru_forward(xs, h0, gru.tree.value("wx"),
                                         gru.tree.value("wh"), gru.tree.value("b"))
        h_one, _ = recurrent.gru_step(xs[:, 0, :], h0, gru.tree.value("wx"),
                                      gru.tree.value("wh"), gru.tree.value("b"))
        np.testing.assert_allclose(h_seq, h_one)

    def test_gru_bptt_gradient(self):
        rng = np.random.default_rng(5)
        gru = GruRegressor(2, 4, rng)
        xs = rng.normal(size=(3, 5, 2))
        t = rng.normal(size=(3, 1))

        def loss_fn():
            gru.tree.zero_grads()
            loss, dy = mse(gru.forward(xs), t)
            gru.backward(dy)
            return loss

        assert grad_check(loss_fn, gru.tree).passed

    def test_lstm_bptt_gradient(self):
        rng = np.random.default_rng(6)
        lstm = LstmClassifier(2, 4, 4, rng)
        xs = rng.normal(size=(3, 5, 2))
        labels = np.array([0, 1, 3])

        def loss_fn():
            lstm.tree.zero_grads()
            loss, dp = cross_entropy(lstm.forward(xs), labels)
            lstm.backward(dp)
            return loss

        assert grad_check(loss_fn, lstm.tree).passed


class TestLosses:
    def test_mse_zero_at_match(self):
        loss, grad = mse(np.ones((2, 3)), np.ones((2, 3)))
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_mse_component_sum_convention(self):
        pred = np.array([[3.0, 4.0, 0.0], [0.0, 0.0, 0.0]])
        target = np.zeros((2, 3))
        loss, _ = mse(pred, target)
        assert loss == pytest.approx(12.5)

    def test_cross_entropy_uniform(self):
        probs = np.full((1, 4), 0.25)
        loss, _ = cross_entropy(probs, [2])
        assert loss == pytest.approx(np.log(4.0))

    def test_cross_entropy_clamps_zero_probability(self):
        probs = np.array([[1.0, 0.0]])
        loss, _ = cross_entropy(probs, [1])
        assert np.isfinite(loss)


class TestSoftmax:
    def test_simplex_output(self):
        rng = np.random.default_rng(8)
        probs = layers.softmax(rng.normal(scale=10.0, size=(50, 7)))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert (probs > 0).all()


class TestOptimizers:
    def test_sgd_zero_gradient_no_change(self):
        tree = ParameterTree()
        tree.add("w", np.array([1.0, 2.0]))
        SgdOptimizer(0.1).step(tree)
        np.testing.assert_array_equal(tree.value("w"), [1.0, 2.0])

    def test_sgd_scalar_step(self):
        tree = ParameterTree()
        tree.add("w", np.array([1.0]))
        tree.accumulate_grad("w", np.array([1.0]))
        SgdOptimizer(0.1).step(tree)
        assert tree.value("w")[0] == pytest.approx(0.9)

    def test_adam_first_step_magnitude_is_lr(self):
        # bias correction makes the first update ~lr for any gradient scale
        # comfortably above the epsilon floor
        for scale in (1e-3, 1.0, 1e6):
            tree = ParameterTree()
            tree.add("w", np.array([0.0]))
            tree.accumulate_grad("w", np.array([scale]))
            AdamOptimizer(0.01).step(tree)
            assert abs(tree.value("w")[0]) == pytest.approx(0.01, rel=1e-4)

    def test_xor_training_smoke(self):
        rng = np.random.default_rng(2)
        net = MlpNet([2, 8, 1], rng)
        opt = SgdOptimizer(0.5)
        x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        t = np.array([[0.0], [1.0], [1.0], [0.0]])
        loss = None
        for _ in range(5000):
            net.tree.zero_grads()
            loss, dy = mse(net.forward(x), t)
            net.backward(dy)
            opt.step(net.tree)
        assert loss < 0.05


class TestParameterTree:
    def test_roundtrip_serialization(self, tmp_path):
        rng = np.random.default_rng(10)
        tree = ParameterTree()
        tree.add("lstm/wx", rng.normal(size=(3, 8)))
        tree.add("head/b", rng.normal(size=4))
        tree.add("scale", np.array(2.5))
        path = tmp_path / "ckpt.bin"
        tree.save(path)
        loaded = ParameterTree.load(path)
        assert loaded.names() == tree.names()
        for name in tree.names():
            np.testing.assert_array_equal(loaded.value(name), tree.value(name))

    def test_copy_from_layout_check(self):
        a = ParameterTree()
        a.add("w", np.zeros(3))
        b = ParameterTree()
        b.add("v", np.zeros(3))
        with pytest.raises(ValueError):
            a.copy_from(b)

    def test_payload_bits(self):
        tree = ParameterTree()
        tree.add("w", np.zeros((10, 10)))
        assert tree.payload_bits() == 3200

    def test_forward_deterministic(self):
        rng = np.random.default_rng(11)
        net = MlpNet([4, 8, 2], rng)
        x = rng.normal(size=(3, 4))
        np.testing.assert_array_equal(net.forward(x), net.forward(x))
