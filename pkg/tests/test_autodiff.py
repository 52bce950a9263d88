import numpy as np
import pytest

from privsplit.autodiff import (
    Graph,
    Tensor,
    activation,
    backward,
    clamp,
    concat,
    grad_check,
    matmul,
    relu,
    sigmoid,
    slice_cols,
    softmax_cross_entropy,
    square,
    tanh,
    tmean,
    tsum,
)


def rand_tensor(rng, shape, requires_grad=True):
    return Tensor(rng.standard_normal(shape), requires_grad=requires_grad)


class TestMatmul:
    def test_identity(self):
        a = Tensor([[1.0, 2.0], [3.0, 4.0]])
        out = matmul(Tensor(np.eye(2)), a)
        assert np.array_equal(out.data, a.data)

    def test_hand_product(self):
        out = matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[5.0, 6.0], [7.0, 8.0]]))
        assert np.array_equal(out.data, [[19.0, 22.0], [43.0, 50.0]])

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ValueError, match=r"\(2, 3\).*\(2, 4\)"):
            matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4))))

    def test_nonfinite_rejected(self):
        bad = Tensor([[np.nan, 0.0]])
        with pytest.raises(ValueError, match="non-finite"):
            matmul(bad, Tensor(np.zeros((2, 1))))


class TestActivations:
    def test_sigmoid_at_zero(self):
        assert sigmoid(Tensor([0.0])).data[0] == 0.5

    def test_tanh_odd(self):
        assert tanh(Tensor([0.0])).data[0] == 0.0

    def test_relu_definition(self):
        out = relu(Tensor([-3.5, 2.25]))
        assert np.array_equal(out.data, [0.0, 2.25])

    def test_sigmoid_strictly_inside_unit_interval(self):
        out = sigmoid(Tensor([-1e6, -50.0, 0.0, 50.0, 1e6]))
        assert np.all(out.data > 0.0)
        assert np.all(out.data < 1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown activation"):
            activation(Tensor([0.0]), "softplus")

    def test_dispatch_matches_direct(self):
        x = Tensor([[-1.0, 0.5, 2.0]])
        assert np.array_equal(activation(x, "tanh").data, tanh(x).data)


class TestBackward:
    def test_sum_grad_is_ones(self):
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        backward(tsum(x))
        assert np.array_equal(x.grad, np.ones((2, 3)))

    def test_mse_at_minimum_grad_is_zero(self):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal((4, 3))
        x = Tensor(vals.copy(), requires_grad=True)
        y = Tensor(vals.copy())
        backward(tmean(square(x - y)))
        assert np.array_equal(x.grad, np.zeros((4, 3)))

    def test_nonscalar_loss_rejected(self):
        x = Tensor(np.zeros((2, 2)), requires_grad=True)
        with pytest.raises(ValueError, match="scalar"):
            backward(x + x)

    def test_two_layer_mlp_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        x = Tensor(rng.standard_normal((5, 3)))
        w1 = rand_tensor(rng, (3, 4))
        b1 = rand_tensor(rng, (4,))
        w2 = rand_tensor(rng, (4, 2))
        b2 = rand_tensor(rng, (2,))

        def loss():
            h = tanh(matmul(x, w1) + b1)
            out = matmul(h, w2) + b2
            return tmean(square(out))

        assert grad_check(loss, [w1, b1, w2, b2], eps=1e-5) < 1e-4

    def test_deterministic_gradients(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.standard_normal((4, 3)))
        w = rand_tensor(rng, (3, 3))

        def run():
            backward(tmean(square(tanh(matmul(x, w)))))
            return w.grad.copy()

        assert np.array_equal(run(), run())

    def test_grad_map_keys_are_requires_grad_leaves(self):
        rng = np.random.default_rng(5)
        x = Tensor(rng.standard_normal((2, 3)))
        w = rand_tensor(rng, (3, 2))
        grads = backward(tmean(matmul(x, w)))
        assert set(grads) == {w}
        assert grads[w].shape == (3, 2)

    def test_frozen_leaf_gets_no_grad(self):
        rng = np.random.default_rng(6)
        frozen = Tensor(rng.standard_normal((3, 2)), requires_grad=False)
        w = rand_tensor(rng, (2, 2))
        backward(tmean(matmul(matmul(Tensor(np.ones((1, 3))), frozen), w)))
        assert frozen.grad is None

    def test_reused_node_accumulates_once_per_use(self):
        x = Tensor([2.0], requires_grad=True)
        y = x * x  # dy/dx = 2x = 4
        backward(tsum(y))
        assert x.grad[0] == 4.0


class TestGraph:
    def test_topological_order(self):
        x = Tensor([1.0], requires_grad=True)
        y = x * x
        z = y + x
        g = Graph(z)
        order = {id(n): i for i, n in enumerate(g.nodes)}
        assert order[id(x)] < order[id(y)] < order[id(z)]

    def test_each_node_once(self):
        x = Tensor([1.0], requires_grad=True)
        y = x + x
        z = y * y
        g = Graph(z)
        assert len({id(n) for n in g.nodes}) == len(g.nodes)


class TestGradCheck:
    def test_quadratic_is_nearly_exact(self):
        rng = np.random.default_rng(11)
        w = rand_tensor(rng, (4,))

        def loss():
            return tsum(square(w))

        assert grad_check(loss, [w], eps=1e-5) < 1e-7

    def test_constant_function(self):
        w = Tensor(np.ones(3), requires_grad=True)

        def loss():
            return tsum(Tensor(np.zeros(1)) + Tensor(np.ones(1)))

        assert grad_check(loss, [w], eps=1e-5) == 0.0

    def test_eps_must_be_positive(self):
        w = Tensor(np.ones(1), requires_grad=True)
        with pytest.raises(ValueError):
            grad_check(lambda: tsum(w), [w], eps=0.0)


class TestOpGradientsProperty:
    """Every registered op matches central differences on random small shapes."""

    def test_random_shapes(self):
        rng = np.random.default_rng(2024)
        unary = {
            "tanh": tanh,
            "relu": relu,
            "sigmoid": sigmoid,
            "square": square,
            "clamp": lambda t: clamp(t, -0.5, 0.5),
        }
        for trial in range(20):
            rows = int(rng.integers(1, 8))
            cols = int(rng.integers(1, 64 // rows + 1))
            vals = rng.standard_normal((rows, cols))
            # keep clear of the relu/clamp kinks so central differences are valid
            for kink in (0.0, -0.5, 0.5):
                near = np.abs(vals - kink) < 1e-2
                vals[near] = kink + 0.05 * np.sign(vals[near] - kink + 1e-12)
            x = Tensor(vals, requires_grad=True)
            weights = Tensor(rng.standard_normal((rows, cols)))
            for name, op in unary.items():
                err = grad_check(lambda: tsum(op(x) * weights), [x], eps=1e-5)
                assert err < 1e-4, f"{name} failed at trial {trial}: {err}"

    def test_binary_and_structural_ops(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            a = rand_tensor(rng, (3, 4))
            b = rand_tensor(rng, (3, 4))
            w = rand_tensor(rng, (4, 2))
            bias = rand_tensor(rng, (2,))

            def loss():
                joined = concat([a * b, a - b], axis=1)
                left = slice_cols(joined, 0, 4)
                return tmean(square(matmul(left, w) + bias))

            assert grad_check(loss, [a, b, w, bias], eps=1e-5) < 1e-4

    def test_cross_entropy_gradient(self):
        rng = np.random.default_rng(17)
        logits = rand_tensor(rng, (6, 4))
        labels = rng.integers(0, 4, size=6)

        def loss():
            return softmax_cross_entropy(logits, labels)

        assert grad_check(loss, [logits], eps=1e-6) < 1e-4


class TestTensorBasics:
    def test_values_flat_row_major(self):
        t = Tensor([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(t.values, [1.0, 2.0, 3.0, 4.0])

    def test_grad_matches_length_when_present(self):
        t = Tensor(np.ones((2, 3)), requires_grad=True)
        backward(tsum(t * t))
        assert t.grad.size == t.values.size

    def test_more_than_two_dims_rejected(self):
        with pytest.raises(ValueError):
            Tensor(np.zeros((2, 2, 2)))
