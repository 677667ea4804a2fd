"""Versioned JSON checkpoints.

Layout (``format_version`` 1)::

    {
      "format": "nsgc-checkpoint",
      "format_version": 1,
      "config": {...training config echo...},
      "model_config": {...},
      "target_shift": float, "target_scale": float,
      "best_epoch": int,
      "basis_scale": [k + 1 floats],
      "param_order": ["node.W1", "node.b1", ...],
      "params": {"node.W1": {"shape": [r, c], "data": [... row-major ...]}, ...}
    }

``param_order`` follows :func:`nsgc.nsgn.model.param_shapes`; each array is
stored flattened in C order.
"""

import json
from collections import OrderedDict

import numpy as np

from ..exceptions import BadConfig
from .model import ModelConfig, param_shapes
from .training import TrainConfig, TrainResult

FORMAT = "nsgc-checkpoint"
FORMAT_VERSION = 1


def checkpoint_dict(result):
    order = [name for name, _ in param_shapes(result.model_config)]
    return {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "config": result.config.to_dict(),
        "model_config": result.model_config.to_dict(),
        "target_shift": result.target_shift,
        "target_scale": result.target_scale,
        "best_epoch": result.best_epoch,
        "basis_scale": np.asarray(result.basis_scale if result.basis_scale is not None
                                  else np.ones(result.model_config.k + 1), dtype=float).tolist(),
        "param_order": order,
        "params": {name: {"shape": list(result.params[name].shape),
                          "data": np.asarray(result.params[name], dtype=float).ravel().tolist()}
                   for name in order},
    }


def from_checkpoint_dict(data):
    if data.get("format") != FORMAT:
        raise BadConfig("not an nsgc checkpoint")
    if data.get("format_version") != FORMAT_VERSION:
        raise BadConfig(f"unsupported checkpoint version {data.get('format_version')}")
    mcfg = ModelConfig(**data["model_config"]).validate()
    cfg = TrainConfig.from_dict(data["config"])
    expected = param_shapes(mcfg)
    if [n for n, _ in expected] != data["param_order"]:
        raise BadConfig("checkpoint parameter order does not match the model config")
    params = OrderedDict()
    for name, shape in expected:
        entry = data["params"][name]
        if tuple(entry["shape"]) != tuple(shape):
            raise BadConfig(f"parameter {name} has shape {entry['shape']}, expected {list(shape)}")
        params[name] = np.asarray(entry["data"], dtype=float).reshape(shape)
    scale = np.asarray(data.get("basis_scale", np.ones(mcfg.k + 1)), dtype=float)
    if scale.shape != (mcfg.k + 1,):
        raise BadConfig(f"basis_scale has {scale.size} entries, expected {mcfg.k + 1}")
    return TrainResult(params, mcfg, cfg, [], float(data["target_shift"]),
                       float(data["target_scale"]), int(data.get("best_epoch", 0)),
                       basis_scale=scale)


def save_checkpoint(result, path):
    with open(path, "w") as fh:
        json.dump(checkpoint_dict(result), fh)
        fh.write("\n")


def load_checkpoint(path):
    with open(path) as fh:
        return from_checkpoint_dict(json.load(fh))
