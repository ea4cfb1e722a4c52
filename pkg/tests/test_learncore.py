import math

import numpy as np
import pytest

import fairpriv.learncore as lc
from fairpriv.learncore import (AdamState, ShapeError, Tape, Tensor, adam_step,
                                backward, matmul, mlp_init, relu,
                                weighted_softmax_cross_entropy)


def finite_diff(loss_fn, params, h=1e-5):
    """Central-difference gradients of loss_fn() w.r.t. each param tensor."""
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        for idx in np.ndindex(*p.data.shape):
            orig = p.data[idx]
            p.data[idx] = orig + h
            up = loss_fn()
            p.data[idx] = orig - h
            down = loss_fn()
            p.data[idx] = orig
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def rel_err(a, b):
    return np.abs(a - b) / np.maximum.reduce([np.abs(a), np.abs(b), np.full_like(a, 1e-6)])


class TestMatmul:
    def test_identity(self):
        m = matmul(Tensor(np.eye(2)), Tensor([[1, 2], [3, 4]]))
        assert np.array_equal(m.data, [[1, 2], [3, 4]])

    def test_hand_value(self):
        m = matmul(Tensor([[1, 2]]), Tensor([[3], [4]]))
        assert m.data[0, 0] == 11

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal((5, 7)), rng.standard_normal((7, 3))
        expected = np.zeros((5, 3))
        for i in range(5):
            for j in range(3):
                for k in range(7):
                    expected[i, j] += a[i, k] * b[k, j]
        assert np.allclose(matmul(Tensor(a), Tensor(b)).data, expected, atol=1e-12)

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestRelu:
    def test_values(self):
        assert np.array_equal(relu(Tensor([[-1.0, 0.0, 2.0]])).data, [[0, 0, 2]])

    def test_positive_unchanged(self):
        x = np.abs(np.random.default_rng(1).standard_normal((3, 4))) + 0.1
        assert np.array_equal(relu(Tensor(x)).data, x)

    def test_gradient_mask(self):
        x = Tensor([[-0.5, 0.5]])
        with Tape() as tape:
            out = lc.sum_all(relu(x))
        backward(tape, out)
        assert np.array_equal(x.grad, [[0.0, 1.0]])


class TestWeightedCrossEntropy:
    def test_uniform_binary(self):
        loss = weighted_softmax_cross_entropy(Tensor([[0.0, 0.0]]), [1], [1.0, 1.0])
        assert loss.data[0, 0] == pytest.approx(math.log(2), abs=1e-12)

    def test_uniform_three_class(self):
        loss = weighted_softmax_cross_entropy(Tensor(np.zeros((4, 3))), [0, 1, 2, 0],
                                              np.ones(3))
        assert loss.data[0, 0] == pytest.approx(math.log(3), abs=1e-12)

    def test_zero_total_weight(self):
        with pytest.raises(ValueError, match="weight"):
            weighted_softmax_cross_entropy(Tensor([[0.0, 0.0], [1.0, 2.0]]), [1, 1],
                                           [1.0, 0.0])

    def test_empty_batch(self):
        with pytest.raises(ValueError, match="empty"):
            weighted_softmax_cross_entropy(Tensor(np.zeros((0, 2))), [], [1.0, 1.0])

    def test_target_out_of_range(self):
        with pytest.raises(ValueError, match="range"):
            weighted_softmax_cross_entropy(Tensor([[0.0, 0.0]]), [2], [1.0, 1.0])

    def test_unit_weights_equal_unweighted_mean(self):
        rng = np.random.default_rng(2)
        logits = rng.standard_normal((10, 4))
        y = rng.integers(0, 4, 10)
        loss = weighted_softmax_cross_entropy(Tensor(logits), y, np.ones(4))
        z = logits - logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        plain = -logp[np.arange(10), y].mean()
        assert loss.data[0, 0] == pytest.approx(plain, abs=0)

    def test_shift_invariance(self):
        rng = np.random.default_rng(3)
        logits = rng.standard_normal((6, 3))
        y = rng.integers(0, 3, 6)
        w = np.array([0.2, 1.0, 3.0])
        a = weighted_softmax_cross_entropy(Tensor(logits), y, w).data[0, 0]
        b = weighted_softmax_cross_entropy(Tensor(logits + 123.0), y, w).data[0, 0]
        assert a == pytest.approx(b, abs=1e-9)


class TestBackward:
    def test_sum_of_linear_matches_fd(self):
        rng = np.random.default_rng(4)
        w = Tensor(rng.standard_normal((3, 2)))
        x = rng.standard_normal((4, 3))

        def loss_fn():
            return (x @ w.data).sum()

        with Tape() as tape:
            loss = lc.sum_all(matmul(Tensor(x), w))
        backward(tape, loss)
        (fd,) = finite_diff(loss_fn, [w])
        assert rel_err(w.grad, fd).max() < 1e-6

    def test_constant_loss_zero_grads(self):
        w = Tensor(np.random.default_rng(5).standard_normal((2, 2)))
        with Tape() as tape:
            loss = lc.sum_all(lc.scale(w, 0.0))
        backward(tape, loss)
        assert np.array_equal(w.grad, np.zeros((2, 2)))

    def test_two_layer_mlp_ce_matches_fd(self):
        rng = np.random.default_rng(6)
        mlp = mlp_init([4, 6, 3], seed=9)
        x = rng.standard_normal((5, 4))
        y = rng.integers(0, 3, 5)
        w = np.array([1.0, 0.5, 2.0])

        def loss_fn():
            z = Tensor(mlp.apply(x))
            return weighted_softmax_cross_entropy(z, y, w).data[0, 0]

        with Tape() as tape:
            loss = weighted_softmax_cross_entropy(mlp.forward(Tensor(x)), y, w)
        backward(tape, loss)
        fd = finite_diff(loss_fn, mlp.params())
        for p, g in zip(mlp.params(), fd):
            assert rel_err(p.grad, g).max() < 1e-5

    def test_non_scalar_loss_rejected(self):
        with Tape() as tape:
            out = relu(Tensor(np.ones((2, 2))))
        with pytest.raises(ShapeError):
            backward(tape, out)


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = Tensor(np.full((2, 2), 3.0))
        state = AdamState([p], lr=0.1)
        adam_step([p], [np.zeros((2, 2))], state)
        assert np.array_equal(p.data, np.full((2, 2), 3.0))
        assert state.step == 1

    def test_first_step_magnitude_near_lr(self):
        p = Tensor(np.zeros((1, 3)))
        state = AdamState([p], lr=0.01)
        adam_step([p], [np.array([[0.5, -2.0, 10.0]])], state)
        assert np.all(np.abs(np.abs(p.data) - 0.01) < 1e-7)
        assert np.sign(p.data[0, 0]) == -1  # moves against the gradient

    def test_deterministic(self):
        g = np.random.default_rng(7).standard_normal((3, 3))
        results = []
        for _ in range(2):
            p = Tensor(np.ones((3, 3)))
            state = AdamState([p], lr=0.05)
            for _ in range(5):
                adam_step([p], [g], state)
            results.append(p.data.copy())
        assert np.array_equal(results[0], results[1])

    def test_shape_mismatch(self):
        p = Tensor(np.ones((2, 2)))
        state = AdamState([p], lr=0.1)
        with pytest.raises(ShapeError):
            adam_step([p], [np.ones((2, 3))], state)


class TestMlpInit:
    def test_same_seed_identical(self):
        a, b = mlp_init([4, 8, 2], seed=13), mlp_init([4, 8, 2], seed=13)
        for pa, pb in zip(a.params(), b.params()):
            assert np.array_equal(pa.data, pb.data)

    def test_different_seeds_differ(self):
        a, b = mlp_init([4, 8, 2], seed=13), mlp_init([4, 8, 2], seed=14)
        assert not np.array_equal(a.weights[0].data, b.weights[0].data)

    def test_shapes(self):
        mlp = mlp_init([4, 8, 2], seed=0)
        assert mlp.weights[0].data.shape == (4, 8)
        assert mlp.weights[1].data.shape == (8, 2)
        assert all(np.array_equal(b.data, np.zeros_like(b.data)) for b in mlp.biases)

    def test_invalid_sizes(self):
        with pytest.raises(ValueError):
            mlp_init([4], seed=0)
        with pytest.raises(ValueError):
            mlp_init([4, 0, 2], seed=0)


class TestProperties:
    def test_gradients_match_fd_on_random_instances(self):
        # Small version of the acceptance-gate gradient oracle.
        rng = np.random.default_rng(100)
        for trial in range(10):
            n_layers = int(rng.integers(1, 4))
            sizes = [int(rng.integers(2, 17)) for _ in range(n_layers + 1)]
            mlp = mlp_init(sizes, seed=int(rng.integers(0, 1 << 31)))
            x = rng.standard_normal((int(rng.integers(1, 9)), sizes[0]))
            y = rng.integers(0, sizes[-1], x.shape[0])
            w = rng.uniform(0.2, 2.0, sizes[-1])

            def loss_fn():
                return weighted_softmax_cross_entropy(Tensor(mlp.apply(x)), y, w).data[0, 0]

            with Tape() as tape:
                loss = weighted_softmax_cross_entropy(mlp.forward(Tensor(x)), y, w)
            backward(tape, loss)
            fd = finite_diff(loss_fn, mlp.params())
            for p, g in zip(mlp.params(), fd):
                assert rel_err(p.grad, g).max() < 1e-5, f"trial {trial} sizes {sizes}"

    def test_forward_deterministic(self):
        x = np.random.default_rng(8).standard_normal((5, 6))
        outs = [mlp_init([6, 10, 3], seed=21).apply(x) for _ in range(2)]
        assert np.array_equal(outs[0], outs[1])

    def test_apply_matches_forward(self):
        rng = np.random.default_rng(9)
        mlp = mlp_init([5, 7, 4], seed=3)
        x = rng.standard_normal((6, 5))
        assert np.array_equal(mlp.apply(x), mlp.forward(Tensor(x)).data)

    def test_backward_accumulates_until_reset(self):
        w = Tensor(np.ones((2, 2)))
        for expected in (1.0, 2.0):
            with Tape() as tape:
                loss = lc.sum_all(matmul(w, Tensor(np.ones((2, 1)))))
            backward(tape, loss)
            assert w.grad[0, 0] == expected  # second pass doubles without reset
