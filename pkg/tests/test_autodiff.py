import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skillworld import autodiff as ad
from skillworld.autodiff import AdamState, Tensor, adam_step, backward, symexp, symlog


def finite_difference(loss_fn, leaves, h=1e-5):
    """Central-difference gradients of a scalar loss over leaf tensors."""
    grads = []
    for leaf in leaves:
        g = np.zeros_like(leaf.values)
        it = np.nditer(leaf.values, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = leaf.values[i]
            leaf.values[i] = old + h
            up = loss_fn().item()
            leaf.values[i] = old - h
            dn = loss_fn().item()
            leaf.values[i] = old
            g[i] = (up - dn) / (2 * h)
        grads.append(g)
    return grads


def check_gradients(loss_fn, leaves, tol=1e-4):
    loss = loss_fn()
    ad.zero_grads(leaves)
    backward(loss)
    fd = finite_difference(loss_fn, leaves)
    worst = 0.0
    for leaf, ref in zip(leaves, fd):
        got = leaf.grad if leaf.grad is not None else np.zeros_like(ref)
        scale = np.maximum(np.maximum(np.abs(ref), np.abs(got)), 1e-3)
        worst = max(worst, float(np.max(np.abs(got - ref) / scale)))
    assert worst < tol, f"gradient mismatch {worst:.3e}"
    return worst


class TestBackwardBasics:
    def test_sum_of_squares(self):
        x = Tensor([1.0, 2.0])
        backward(ad.sum_all(ad.square(x)))
        assert np.allclose(x.grad, [2.0, 4.0])

    def test_constant_loss_zero_grads(self):
        x = Tensor([1.0, 2.0])
        y = ad.mul_scalar(ad.sum_all(x), 0.0)
        backward(y)
        assert np.allclose(x.grad, 0.0)

    def test_non_scalar_rejected(self):
        with pytest.raises(ValueError):
            backward(Tensor([1.0, 2.0]))

    def test_repeated_backward_accumulates(self):
        x = Tensor([3.0])
        loss = ad.sum_all(ad.square(x))
        backward(loss)
        first = x.grad.copy()
        backward(loss)
        assert np.allclose(x.grad, 2 * first)

    def test_shared_node_counted_once(self):
        x = Tensor([2.0])
        y = ad.square(x)
        loss = ad.sum_all(ad.add(y, y))
        backward(loss)
        assert np.allclose(x.grad, [8.0])


class TestPrimitiveGradients:
    """Each op's vjp against central finite differences."""

    def test_elementwise_ops(self):
        rng = np.random.default_rng(0)
        a = Tensor(rng.standard_normal((3, 4)))
        b = Tensor(rng.standard_normal((3, 4)) + 2.5)
        w = rng.standard_normal((3, 4))
        cases = {
            "add": lambda: ad.add(a, b),
            "sub": lambda: ad.sub(a, b),
            "mul": lambda: ad.mul(a, b),
            "div": lambda: ad.div(a, b),
            "neg": lambda: ad.neg(a),
            "square": lambda: ad.square(a),
            "sigmoid": lambda: ad.sigmoid(a),
            "silu": lambda: ad.silu(a),
            "exp": lambda: ad.exp(a),
            "softplus": lambda: ad.softplus(a),
        }
        for name, op in cases.items():
            check_gradients(lambda op=op: ad.sum_all(ad.mul(op(), Tensor(w))), [a, b])

    def test_relu_away_from_kink(self):
        rng = np.random.default_rng(1)
        vals = rng.standard_normal((4, 5))
        vals = np.where(np.abs(vals) < 0.05, 0.1, vals)
        a = Tensor(vals)
        check_gradients(lambda: ad.sum_all(ad.relu(a)), [a])

    def test_log_positive(self):
        a = Tensor(np.random.default_rng(2).random((3, 3)) + 0.5)
        check_gradients(lambda: ad.sum_all(ad.log(a)), [a])

    def test_matmul_transpose(self):
        rng = np.random.default_rng(3)
        a = Tensor(rng.standard_normal((3, 4)))
        b = Tensor(rng.standard_normal((4, 2)))
        check_gradients(lambda: ad.sum_all(ad.matmul(a, b)), [a, b])
        check_gradients(lambda: ad.sum_all(ad.matmul(ad.transpose(b), ad.transpose(a))), [a, b])

    def test_bias_add(self):
        rng = np.random.default_rng(4)
        x = Tensor(rng.standard_normal((5, 3)))
        b = Tensor(rng.standard_normal(3))
        check_gradients(lambda: ad.sum_all(ad.square(ad.add(x, b))), [x, b])

    def test_reductions_and_shapes(self):
        rng = np.random.default_rng(5)
        a = Tensor(rng.standard_normal((3, 2, 4)))
        w2 = rng.standard_normal((3, 2))
        check_gradients(lambda: ad.sum_all(ad.mul(ad.sum_last(a), Tensor(w2))), [a])
        check_gradients(lambda: ad.mean_all(a), [a])
        check_gradients(lambda: ad.sum_all(ad.mul(ad.logsumexp_last(a), Tensor(w2))), [a])
        check_gradients(lambda: ad.sum_all(ad.square(ad.reshape(a, (6, 4)))), [a])

    def test_concat_slice(self):
        rng = np.random.default_rng(6)
        a = Tensor(rng.standard_normal((3, 2)))
        b = Tensor(rng.standard_normal((3, 3)))
        check_gradients(
            lambda: ad.sum_all(ad.square(ad.concat_last([a, b]))), [a, b])
        check_gradients(
            lambda: ad.sum_all(ad.square(ad.slice_last(b, 1, 3))), [a, b])

    def test_expand_and_gather(self):
        rng = np.random.default_rng(7)
        a = Tensor(rng.standard_normal((4, 3)))
        v = Tensor(rng.standard_normal(4))
        m = Tensor(rng.standard_normal((4, 4)))
        idx = np.array([2, 0, 1, 2])
        idx2 = np.array([1, 0, 1, 0])
        c3 = Tensor(rng.standard_normal((4, 2, 3)))
        check_gradients(lambda: ad.sum_all(ad.square(ad.expand_component(a, 3))), [a])
        check_gradients(lambda: ad.sum_all(ad.square(ad.expand_last(v, 5))), [v])
        check_gradients(lambda: ad.sum_all(ad.square(ad.diag_part(m))), [m])
        check_gradients(lambda: ad.sum_all(ad.square(ad.take_per_row(a, idx))), [a])
        check_gradients(lambda: ad.sum_all(ad.square(ad.take_component(c3, idx2))), [c3])

    def test_stop_gradient(self):
        a = Tensor([1.0, 2.0])
        loss = ad.sum_all(ad.square(ad.stop_gradient(a)))
        backward(loss)
        assert a.grad is None


class TestLogsumexp:
    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=8),
           st.floats(-100, 100))
    @settings(max_examples=50, deadline=None)
    def test_shift_invariance(self, xs, c):
        x = np.array(xs)
        a = ad.logsumexp_last(Tensor(x)).item()
        b = ad.logsumexp_last(Tensor(x + c)).item()
        assert abs((a + c) - b) < 1e-12 * max(1.0, abs(a + c))

    def test_matches_numpy(self):
        x = np.random.default_rng(0).standard_normal((4, 6))
        got = ad.logsumexp_last(Tensor(x)).values
        ref = np.log(np.exp(x).sum(axis=-1))
        assert np.allclose(got, ref, atol=1e-12)


class TestAdam:
    def test_zero_grad_no_change(self):
        p = Tensor([1.0, -2.0])
        p.grad = np.zeros(2)
        st_ = AdamState(lr=0.1)
        assert adam_step([p], st_)
        assert np.allclose(p.values, [1.0, -2.0])

    def test_first_step_hand_computed(self):
        p = Tensor([1.0])
        p.grad = np.array([0.5])
        st_ = AdamState(lr=0.01)
        adam_step([p], st_)
        # bias-corrected first step: m_hat = g, v_hat = g^2 -> delta = lr * g/(|g|+eps)
        expected = 1.0 - 0.01 * 0.5 / (0.5 + 1e-8)
        assert p.values[0] == pytest.approx(expected, abs=1e-12)

    def test_quadratic_bowl_convergence(self):
        # lr 1e-2 covers ~1e-2 distance per step, so start within reach of 500 steps
        p = Tensor([1.0, -0.6])
        st_ = AdamState(lr=1e-2)
        for _ in range(500):
            ad.zero_grads([p])
            backward(ad.sum_all(ad.square(p)))
            adam_step([p], st_)
        assert np.linalg.norm(p.values) < 1e-3

    def test_nan_grad_refused(self):
        p = Tensor([1.0])
        p.grad = np.array([np.nan])
        st_ = AdamState()
        assert not adam_step([p], st_)
        assert p.values[0] == 1.0
        assert st_.step == 0


class TestSymlog:
    @pytest.mark.parametrize("x", [-1000.0, -1.0, 0.0, 1.0, 1000.0])
    def test_inverse_pair(self, x):
        assert symexp(symlog(x)) == pytest.approx(x, abs=1e-12 * max(1, abs(x)))

    def test_zero(self):
        assert symlog(0.0) == 0.0

    @given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
    @settings(max_examples=100, deadline=None)
    def test_monotone(self, a, b):
        if a < b:
            assert symlog(a) < symlog(b)

    def test_grid_monotone(self):
        xs = np.linspace(-1e4, 1e4, 10001)
        ys = symlog(xs)
        assert (np.diff(ys) > 0).all()
