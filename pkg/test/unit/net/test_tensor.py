import numpy as np
import pytest

from crosslab.exceptions import InvalidInputError, TapeConsumedError
from crosslab.net import GradientTape
from crosslab.net import tensor as T


def numeric_grad(fn, x, eps=1e-6):
    grad = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        up, down = x.copy(), x.copy()
        up[i] += eps
        down[i] -= eps
        grad[i] = (fn(up) - fn(down)) / (2 * eps)
    return grad


@pytest.mark.parametrize('op', (
    lambda x: T.reduce_sum(T.elu(x)),
    lambda x: T.reduce_sum(T.tanh(T.mul(x, 2.0))),
    lambda x: T.reduce_sum(T.sigmoid(x)),
    lambda x: T.mean(T.exp(x)),
    lambda x: T.reduce_sum(T.log(T.add(T.square(x), 1.0))),
    lambda x: T.reduce_sum(T.div(1.0, T.add(T.square(x), 2.0))),
    lambda x: T.reduce_sum(T.minimum(x, 0.1)) + T.reduce_sum(T.maximum(x, -0.1)),
    lambda x: T.reduce_sum(T.square(T.concat([x, T.mul(x, 3.0)], axis=1))),
    lambda x: T.reduce_sum(T.mul(T.reshape(x, (6,)), np.arange(6.0))),
    lambda x: T.reduce_sum(T.square(T.transpose(x, (1, 0))[1])),
    lambda x: T.reduce_sum(T.square(T.getitem(x, (slice(None), np.array([0, 0, 2]))))),
    lambda x: T.reduce_sum(T.mean(T.square(x), axis=0)),
))
def test_gradients_match_finite_differences(op):
    x0 = np.array([[0.3, -0.7, 1.2], [-0.05, 0.4, -1.5]])
    with GradientTape() as tape:
        x = tape.watch(x0)
        loss = op(x)
    grad, = tape.gradient(loss, [x])
    expected = numeric_grad(lambda v: float(op(v)), x0)
    np.testing.assert_allclose(grad, expected, atol=1e-5)


def test_broadcast_gradients_are_reduced():
    with GradientTape() as tape:
        w = tape.watch(np.ones((3, 2)))
        b = tape.watch(np.zeros(2))
        out = T.add(T.matmul(np.ones((4, 3)), w), b)
        loss = T.reduce_sum(out)
    grads = tape.gradient(loss, {'w': w, 'b': b})
    np.testing.assert_allclose(grads['w'], np.full((3, 2), 4.0))
    np.testing.assert_allclose(grads['b'], np.full(2, 4.0))


def test_without_tape_ops_return_arrays():
    x = np.array([1.0, -2.0])
    out = T.elu(T.mul(x, 2.0))
    assert isinstance(out, np.ndarray)
    with GradientTape() as tape:
        taped = T.elu(T.mul(tape.watch(x), 2.0))
    np.testing.assert_array_equal(taped.value, out)


def test_unused_source_gets_zero_gradient():
    with GradientTape() as tape:
        x = tape.watch(np.ones(3))
        y = tape.watch(np.ones(2))
        loss = T.reduce_sum(x)
    _, gy = tape.gradient(loss, [x, y])
    assert np.all(gy == 0.0)


def test_tape_is_consumed_once():
    with GradientTape() as tape:
        x = tape.watch(np.ones(3))
        loss = T.reduce_sum(T.square(x))
    tape.gradient(loss, [x])
    with pytest.raises(TapeConsumedError):
        tape.gradient(loss, [x])


def test_loss_must_be_scalar_on_tape():
    with GradientTape() as tape:
        x = tape.watch(np.ones(3))
        loss = T.square(x)
    with pytest.raises(InvalidInputError, match='scalar'):
        tape.gradient(loss, [x])
    other = GradientTape()
    with pytest.raises(InvalidInputError, match='not recorded'):
        other.gradient(T.reduce_sum(x), [x])
