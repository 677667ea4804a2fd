import math

import numpy as np
import pytest

from nsgc.exceptions import BadConfig
from nsgc.nsgn.losses import loss_ce, loss_mae, loss_mse, softmax
from nsgc.nsgn.optim import OptimizerConfig, init_state, optimizer_step


def test_mae_examples():
    v, g = loss_mae(np.array([[1.0]]), np.array([[1.0]]))
    assert v == 0 and g[0, 0] == 0
    v, g = loss_mae(np.array([[1.5]]), np.array([[1.0]]))
    assert v == 0.5 and g[0, 0] == 1.0


def test_ce_uniform():
    v, g = loss_ce(np.zeros((1, 4)), [2])
    assert v == pytest.approx(math.log(4), abs=1e-12)
    np.testing.assert_allclose(g, [[0.25, 0.25, -0.75, 0.25]])


def test_ce_gradient_fd(rng):
    logits = rng.standard_normal((3, 5))
    y = np.array([0, 4, 2])
    _, g = loss_ce(logits, y)
    h = 1e-6
    for idx in [(0, 0), (1, 3), (2, 2)]:
        up, down = logits.copy(), logits.copy()
        up[idx] += h
        down[idx] -= h
        num = (loss_ce(up, y)[0] - loss_ce(down, y)[0]) / (2 * h)
        assert g[idx] == pytest.approx(num, abs=1e-8)


def test_mse_and_softmax():
    v, g = loss_mse(np.array([[3.0]]), np.array([[1.0]]))
    assert v == 4.0 and g[0, 0] == 4.0
    np.testing.assert_allclose(softmax(np.array([1000.0, 1000.0])), [0.5, 0.5])


def test_zero_grads_no_change():
    params = {"w": np.array([1.0, 2.0])}
    for kind in ("adam", "sgd"):
        p = {"w": params["w"].copy()}
        optimizer_step(p, {"w": np.zeros(2)}, init_state(p), OptimizerConfig(kind=kind, lr=0.1))
        np.testing.assert_array_equal(p["w"], params["w"])


def test_sgd_example():
    p = {"w": np.array(1.0)}
    optimizer_step(p, {"w": np.array(0.5)}, init_state(p), OptimizerConfig(kind="sgd", lr=0.1))
    assert float(p["w"]) == pytest.approx(0.95)


def test_adam_first_step():
    # bias correction makes step one lr * g / (|g| + eps)
    g = np.array([0.3, -2.0, 1e-3])
    p = {"w": np.zeros(3)}
    cfg = OptimizerConfig(lr=0.01)
    optimizer_step(p, {"w": g}, init_state(p), cfg)
    np.testing.assert_allclose(p["w"], -0.01 * g / (np.abs(g) + 1e-8), rtol=1e-12)


def test_weight_decay_adds_l2():
    p = {"w": np.array([2.0])}
    optimizer_step(p, {"w": np.array([0.0])}, init_state(p),
                   OptimizerConfig(kind="sgd", lr=0.1, weight_decay=0.5))
    assert p["w"][0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)


def test_optimizer_validation():
    with pytest.raises(BadConfig):
        OptimizerConfig(kind="rmsprop").validate()
    with pytest.raises(BadConfig):
        OptimizerConfig(lr=-1).validate()
