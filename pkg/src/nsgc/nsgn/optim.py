"""Adam and SGD steps over ordered parameter dictionaries."""

from dataclasses import dataclass

import numpy as np

from ..exceptions import BadConfig


@dataclass
class OptimizerConfig:
    kind: str = "adam"
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0

    def validate(self):
        if self.kind not in ("adam", "sgd"):
            raise BadConfig(f"unknown optimizer {self.kind!r}")
        if self.lr < 0 or self.weight_decay < 0:
            raise BadConfig("lr and weight_decay must be non-negative")
        return self


def init_state(params):
    return {"t": 0,
            "m": {k: np.zeros_like(v) for k, v in params.items()},
            "v": {k: np.zeros_like(v) for k, v in params.items()}}


def optimizer_step(params, grads, state, config, lr=None):
    """Update ``params`` in place and return ``(params, state)``.

    Weight decay is added to the gradient (L2 penalty). ``lr`` overrides
    ``config.lr`` for schedules.
    """
    lr = config.lr if lr is None else lr
    state["t"] += 1
    t = state["t"]
    b1, b2 = config.betas
    for name, p in params.items():
        g = grads[name]
        if config.weight_decay:
            g = g + config.weight_decay * p
        if config.kind == "sgd":
            p -= lr * g
            continue
        m = state["m"][name]
        v = state["v"][name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return params, state
