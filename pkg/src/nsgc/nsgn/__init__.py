from .model import ModelConfig, backward, forward, init_params, param_shapes
from .training import TrainConfig, TrainResult, train

__all__ = ["ModelConfig", "backward", "forward", "init_params", "param_shapes",
           "TrainConfig", "TrainResult", "train"]
