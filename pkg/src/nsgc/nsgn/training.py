"""Training loop for the non-spatial graph network.

Graphs are bucketed by node count so that a minibatch never needs
padding. With ``batch_size=None`` each epoch is one full-batch step.
"""

import copy
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..exceptions import BadConfig, EmptyDataset
from ..spectral import graph_basis_stack, graph_basis_stacks
from .losses import LOSSES
from .model import ModelConfig, backward_batch, forward_batch, init_params
from .optim import OptimizerConfig, init_state, optimizer_step

log = logging.getLogger(__name__)

BASIS_FAMILIES = ("power_eps", "raw_aug", "sym_norm", "rw_norm")
RAW_AUG_MAX_K = 5
RAW_AUG_MESSAGE = ("raw_aug basis rejected for k={k}: raw A+I powers suffer from "
                   "numerical instability when k>5")


@dataclass
class TrainConfig:
    family: str = "power_eps"
    eps: float = 1.0 / 3.0
    k: int = 6
    source: str = "raw_aug"
    channel_mode: str = "independent"
    hidden: int = 32
    n_layers: int = 2
    task: str = "regression"
    n_classes: int = 2
    loss: str = None
    epochs: int = 100
    batch_size: int = None
    optimizer: str = "adam"
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    weight_decay: float = 0.0
    lr_schedule: str = "constant"
    standardize: bool = True
    select_best: bool = True
    dtype: str = "float64"
    basis_scaling: bool = True
    seed: int = 0

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise BadConfig(f"unknown training options: {sorted(unknown)}")
        cfg = cls(**data)
        if isinstance(cfg.betas, list):
            cfg.betas = tuple(cfg.betas)
        return cfg.validate()

    def to_dict(self):
        return asdict(self)

    @property
    def loss_name(self):
        if self.loss:
            return self.loss
        return "ce" if self.task == "classification" else "mae"

    def validate(self):
        if self.family not in BASIS_FAMILIES:
            raise BadConfig(f"unknown basis family {self.family!r}; expected one of {BASIS_FAMILIES}")
        if self.family == "raw_aug" and self.k > RAW_AUG_MAX_K:
            raise BadConfig(RAW_AUG_MESSAGE.format(k=self.k))
        if self.family == "power_eps" and not 0.0 < self.eps < 1.0:
            raise BadConfig(f"power_eps requires eps in (0, 1), got {self.eps}")
        if self.task not in ("regression", "classification"):
            raise BadConfig(f"unknown task {self.task!r}")
        if self.loss_name not in LOSSES:
            raise BadConfig(f"unknown loss {self.loss_name!r}")
        if self.epochs < 0:
            raise BadConfig("epochs must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise BadConfig("batch_size must be positive")
        if self.dtype not in ("float64", "float32"):
            raise BadConfig(f"dtype must be float64 or float32, got {self.dtype!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise BadConfig(f"unknown lr_schedule {self.lr_schedule!r}")
        self.optimizer_config().validate()
        return self

    def optimizer_config(self):
        return OptimizerConfig(self.optimizer, self.lr, tuple(self.betas),
                               weight_decay=self.weight_decay)

    def model_config(self, node_dim, edge_dim):
        out_dim = self.n_classes if self.task == "classification" else 1
        return ModelConfig(node_dim=node_dim, edge_dim=edge_dim, hidden=self.hidden,
                           k=self.k, n_layers=self.n_layers, out_dim=out_dim,
                           channel_mode=self.channel_mode).validate()


def graph_stack(g, cfg):
    eps = cfg.eps if cfg.family == "power_eps" else None
    return graph_basis_stack(g, cfg.family, cfg.k, eps, source=cfg.source)


def graph_stacks(graphs, cfg):
    eps = cfg.eps if cfg.family == "power_eps" else None
    return graph_basis_stacks(graphs, cfg.family, cfg.k, eps, source=cfg.source)


def basis_scale_of(stacks):
    """Per-basis RMS over every entry of every stack; zero channels get scale 1."""
    k1 = stacks[0].k + 1
    sq = np.zeros(k1)
    count = 0
    for st in stacks:
        sq += np.einsum("kij,kij->k", st.mats, st.mats)
        count += st.n * st.n
    rms = np.sqrt(sq / count)
    return np.where(rms > 0, rms, 1.0)


class Prepared:
    """Model-ready tensors for a list of graphs, grouped by node count.

    Basis channel ``i`` is divided by ``basis_scale[i]``. The mixer's first
    layer is linear, so this is a reparametrization that keeps the function
    class but evens out optimizer step sizes across basis powers.
    """

    def __init__(self, graphs, cfg, stacks=None, basis_scale=None):
        if not graphs:
            raise EmptyDataset("no graphs to prepare")
        self.size = len(graphs)
        self.node_dim = graphs[0].node_dim
        self.edge_dim = graphs[0].edge_dim
        if stacks is None:
            stacks = graph_stacks(graphs, cfg)
        if basis_scale is None:
            basis_scale = np.ones(cfg.k + 1)
        self.basis_scale = np.asarray(basis_scale, dtype=float)
        by_n = {}
        for i, g in enumerate(graphs):
            if g.node_dim != self.node_dim or g.edge_dim != self.edge_dim:
                raise BadConfig("all graphs must share node and edge feature sizes")
            by_n.setdefault(g.num_nodes, []).append(i)
        self.buckets = []
        for n in sorted(by_n):
            idx = np.array(by_n[n])
            b = len(idx)
            x = np.empty((b, n, self.node_dim))
            adj = np.zeros((b, n, n))
            ef = np.zeros((b, n, n, self.edge_dim))
            basis = np.empty((b, n, n, cfg.k + 1))
            for row, i in enumerate(idx):
                g = graphs[i]
                x[row] = g.node_feat
                if g.edges:
                    e = np.asarray(g.edges)
                    adj[row, e[:, 0], e[:, 1]] = adj[row, e[:, 1], e[:, 0]] = 1.0
                    if self.edge_dim:
                        ef[row, e[:, 0], e[:, 1]] = g.edge_feat
                        ef[row, e[:, 1], e[:, 0]] = g.edge_feat
                basis[row] = stacks[i].tensor() / self.basis_scale
            dt = np.dtype(cfg.dtype)
            self.buckets.append({"index": idx, "x": x.astype(dt), "adj": adj.astype(dt),
                                 "ef": ef.astype(dt), "basis": basis.astype(dt)})

    def batches(self, batch_size=None, rng=None):
        """Yield ``(index, x, adj, ef, basis)`` minibatches of equal-size graphs."""
        chunks = []
        for bi, bucket in enumerate(self.buckets):
            rows = np.arange(len(bucket["index"]))
            if rng is not None:
                rows = rng.permutation(rows)
            step = batch_size or len(rows)
            chunks += [(bi, rows[s:s + step]) for s in range(0, len(rows), step)]
        if rng is not None:
            chunks = [chunks[i] for i in rng.permutation(len(chunks))]
        for bi, rows in chunks:
            b = self.buckets[bi]
            yield (b["index"][rows], b["x"][rows], b["adj"][rows], b["ef"][rows],
                   b["basis"][rows])


def prepare_splits(dataset, cfg, prepared=None):
    """Fill in missing :class:`Prepared` splits; the basis scale comes from the train split."""
    prepared = dict(prepared or {})
    if "train" not in prepared:
        stacks = graph_stacks(dataset["train"], cfg)
        scale = basis_scale_of(stacks) if cfg.basis_scaling else None
        prepared["train"] = Prepared(dataset["train"], cfg, stacks, scale)
    scale = prepared["train"].basis_scale
    for split, graphs in dataset.items():
        if graphs and split not in prepared:
            prepared[split] = Prepared(graphs, cfg, basis_scale=scale)
        elif split in prepared and not np.array_equal(prepared[split].basis_scale, scale):
            raise BadConfig(f"split {split!r} was prepared with a different basis scale")
    return prepared


def targets_of(graphs, task):
    ys = [g.target for g in graphs]
    if any(y is None for y in ys):
        raise BadConfig("every graph needs a target")
    if task == "classification":
        return np.array(ys, dtype=int)
    return np.array(ys, dtype=float).reshape(len(ys), -1)


def predict_prepared(params, mcfg, prepared):
    out = np.empty((prepared.size, mcfg.out_dim))
    for idx, x, adj, ef, basis in prepared.batches():
        out[idx] = forward_batch(params, mcfg, x, adj, ef, basis)[0]
    return out


@dataclass
class TrainResult:
    params: dict
    model_config: ModelConfig
    config: TrainConfig
    history: list
    target_shift: float = 0.0
    target_scale: float = 1.0
    best_epoch: int = 0
    diverged: bool = False
    basis_scale: np.ndarray = None

    def prepare(self, graphs, stacks=None):
        """:class:`Prepared` tensors for new graphs, scaled like the training data."""
        return Prepared(graphs, self.config, stacks, self.basis_scale)

    def predict_raw(self, prepared):
        out = predict_prepared(self.params, self.model_config, prepared)
        if self.config.task == "regression":
            out = out * self.target_scale + self.target_shift
        return out

    def evaluate(self, prepared, targets):
        pred = self.predict_raw(prepared)
        return metric(self.config, pred, targets)


def metric(cfg, pred, targets):
    """Loss in target units (MAE for regression) and accuracy for classification."""
    if cfg.task == "classification":
        value, _ = LOSSES[cfg.loss_name](pred, targets)
        acc = float(np.mean(pred.argmax(axis=1) == targets))
        return {"loss": value, "accuracy": acc}
    value, _ = LOSSES[cfg.loss_name](pred, targets)
    return {"loss": value, "mae": float(np.mean(np.abs(pred - targets)))}


def _lr_at(cfg, epoch):
    if cfg.lr_schedule == "cosine" and cfg.epochs > 0:
        return cfg.lr * 0.5 * (1.0 + math.cos(math.pi * epoch / cfg.epochs))
    return cfg.lr


def train(dataset, config, prepared=None, callback=None):
    """Train on ``dataset["train"]`` and track ``dataset["valid"]`` per epoch.

    ``dataset`` maps split names to graph lists; ``prepared`` optionally maps
    the same names to :class:`Prepared` instances built with a compatible
    config. History rows are ``{"epoch", "split", "loss"}``; epoch 0 holds
    the untrained model. Training loss for an epoch is the mean minibatch
    loss seen during that epoch.
    """
    cfg = config if isinstance(config, TrainConfig) else TrainConfig.from_dict(config)
    cfg.validate()
    if not dataset.get("train"):
        raise EmptyDataset("training split is empty")
    prepared = prepare_splits(dataset, cfg, prepared)
    targets = {s: targets_of(g, cfg.task) for s, g in dataset.items() if g}

    ptrain = prepared["train"]
    mcfg = cfg.model_config(ptrain.node_dim, ptrain.edge_dim)
    params = init_params(mcfg, cfg.seed)
    if cfg.dtype != "float64":
        for name in params:
            params[name] = params[name].astype(cfg.dtype)
    opt = cfg.optimizer_config()
    state = init_state(params)
    rng = np.random.default_rng([cfg.seed, 1])
    loss_fn = LOSSES[cfg.loss_name]

    shift, scale = 0.0, 1.0
    y_train = targets["train"]
    if cfg.task == "regression" and cfg.standardize:
        shift = float(y_train.mean())
        scale = float(y_train.std()) or 1.0
    y_fit = (y_train - shift) / scale if cfg.task == "regression" else y_train
    unit = scale if cfg.loss_name == "mae" else scale ** 2
    if cfg.task == "classification":
        unit = 1.0

    result = TrainResult(params, mcfg, cfg, [], shift, scale, basis_scale=ptrain.basis_scale)
    has_valid = "valid" in targets

    def record(epoch, train_loss=None):
        if train_loss is None:
            train_loss = result.evaluate(ptrain, y_train)["loss"]
        result.history.append({"epoch": epoch, "split": "train", "loss": train_loss})
        if has_valid:
            v = result.evaluate(prepared["valid"], targets["valid"])["loss"]
            result.history.append({"epoch": epoch, "split": "valid", "loss": v})
            return v
        return train_loss

    best = record(0)
    best_params = copy.deepcopy(params) if cfg.select_best else None
    n_train = ptrain.size
    for epoch in range(1, cfg.epochs + 1):
        lr = _lr_at(cfg, epoch - 1)
        total = 0.0
        full = cfg.batch_size is None
        acc = None
        for idx, x, adj, ef, basis in ptrain.batches(cfg.batch_size, rng):
            out, cache = forward_batch(params, mcfg, x, adj, ef, basis)
            value, dout = loss_fn(out, y_fit[idx])
            total += value * len(idx)
            if full:
                dout = dout * (len(idx) / n_train)
            grads = backward_batch(params, mcfg, cache, dout)
            if full:
                if acc is None:
                    acc = grads
                else:
                    for name in acc:
                        acc[name] += grads[name]
            else:
                optimizer_step(params, grads, state, opt, lr)
        if full:
            optimizer_step(params, acc, state, opt, lr)
        train_loss = total / n_train * unit
        if not np.isfinite(train_loss) or not all(np.all(np.isfinite(p)) for p in params.values()):
            log.warning("training diverged at epoch %d", epoch)
            result.diverged = True
            result.history.append({"epoch": epoch, "split": "train", "loss": float("nan")})
            break
        current = record(epoch, train_loss)
        if callback is not None:
            callback(epoch, result)
        if cfg.select_best and current < best:
            best = current
            best_params = copy.deepcopy(params)
            result.best_epoch = epoch
    if cfg.select_best and best_params is not None:
        result.params = best_params
    return result
