"""Non-spatial graph network: parameters, batched forward pass and manual backward pass.

A batch holds graphs with the same node count ``n``:

* ``x``     ``(B, n, d_node)`` node attributes
* ``adj``   ``(B, n, n)`` 0/1 adjacency
* ``ef``    ``(B, n, n, d_edge)`` dense edge attributes (zero off the edges)
* ``basis`` ``(B, n, n, k + 1)`` basis stack, one basis vector per node pair

Per layer, with ``E`` the pair embedding and ``S`` the mixed basis::

    Z[b, i, j] = H[b, j] + E[b, i, j]
    H'[b, i]   = MLP5( sum_j MLP4(Z[b, i, j]) * S[b, i, j] )

followed by sum pooling over nodes and a two-layer head.
"""

from collections import OrderedDict
from dataclasses import asdict, dataclass

import numpy as np

from ..exceptions import BadConfig, DimensionMismatch

CHANNEL_MODES = ("independent", "shared")


@dataclass(frozen=True)
class ModelConfig:
    node_dim: int = 1
    edge_dim: int = 0
    hidden: int = 32
    k: int = 6
    n_layers: int = 2
    out_dim: int = 1
    channel_mode: str = "independent"

    def validate(self):
        for name in ("node_dim", "hidden", "out_dim"):
            if getattr(self, name) < 1:
                raise BadConfig(f"{name} must be positive")
        if self.edge_dim < 0 or self.k < 0 or self.n_layers < 0:
            raise BadConfig("edge_dim, k and n_layers must be non-negative")
        if self.channel_mode not in CHANNEL_MODES:
            raise BadConfig(f"channel_mode must be one of {CHANNEL_MODES}")
        return self

    def to_dict(self):
        return asdict(self)


def _mlp_shapes(prefix, d_in, d_hidden, d_out):
    return [(f"{prefix}.W1", (d_in, d_hidden)), (f"{prefix}.b1", (d_hidden,)),
            (f"{prefix}.W2", (d_hidden, d_out)), (f"{prefix}.b2", (d_out,))]


def param_shapes(cfg):
    """Ordered ``(name, shape)`` list; this order is the checkpoint layout."""
    d = cfg.hidden
    shapes = _mlp_shapes("node", cfg.node_dim, d, d)
    if cfg.edge_dim:
        shapes += _mlp_shapes("edge", cfg.edge_dim, d, d)
    else:
        shapes.append(("edge.vec", (d,)))
    shapes += [("edge.none", (d,)), ("edge.self", (d,))]
    mix_out = d if cfg.channel_mode == "independent" else 1
    shapes += _mlp_shapes("mix", cfg.k + 1, d, mix_out)
    for layer in range(cfg.n_layers):
        shapes += _mlp_shapes(f"layer{layer}.pair", d, d, d)
        shapes += _mlp_shapes(f"layer{layer}.node", d, d, d)
    shapes += _mlp_shapes("head", d, d, cfg.out_dim)
    return shapes


def init_params(cfg, seed=0):
    """Glorot-uniform weights, zero biases; deterministic in ``seed``.

    Free embedding vectors are drawn like a ``(1, hidden)`` weight.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    params = OrderedDict()
    for name, shape in param_shapes(cfg):
        leaf = name.rsplit(".", 1)[1]
        if leaf.startswith("b"):
            params[name] = np.zeros(shape)
            continue
        fan_in, fan_out = shape if len(shape) == 2 else (1, shape[0])
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[name] = rng.uniform(-limit, limit, size=shape)
    return params


def count_params(params):
    return int(sum(p.size for p in params.values()))


# -- two-layer MLP ---------------------------------------------------------

def _mlp_fwd(params, prefix, x):
    pre = x @ params[f"{prefix}.W1"] + params[f"{prefix}.b1"]
    hid = np.maximum(pre, 0.0)
    out = hid @ params[f"{prefix}.W2"] + params[f"{prefix}.b2"]
    return out, (x, pre, hid)


def _accumulate(grads, name, value):
    if name in grads:
        grads[name] += value
    else:
        grads[name] = value


def _mlp_bwd(params, prefix, cache, dout, grads):
    x, pre, hid = cache
    d_in, d_hid = x.shape[-1], hid.shape[-1]
    dflat = dout.reshape(-1, dout.shape[-1])
    _accumulate(grads, f"{prefix}.W2", hid.reshape(-1, d_hid).T @ dflat)
    _accumulate(grads, f"{prefix}.b2", dflat.sum(axis=0))
    dhid = dout @ params[f"{prefix}.W2"].T
    dpre = dhid * (pre > 0)
    dpre_flat = dpre.reshape(-1, d_hid)
    _accumulate(grads, f"{prefix}.W1", x.reshape(-1, d_in).T @ dpre_flat)
    _accumulate(grads, f"{prefix}.b1", dpre_flat.sum(axis=0))
    return dpre @ params[f"{prefix}.W1"].T


# -- forward / backward ----------------------------------------------------

def _check_batch(cfg, x, adj, ef, basis):
    b, n = x.shape[:2]
    if x.shape[2] != cfg.node_dim:
        raise DimensionMismatch(f"node features have {x.shape[2]} dims, model expects {cfg.node_dim}")
    if adj.shape != (b, n, n):
        raise DimensionMismatch(f"adjacency shape {adj.shape}, expected {(b, n, n)}")
    if basis.shape != (b, n, n, cfg.k + 1):
        raise DimensionMismatch(f"basis shape {basis.shape}, expected {(b, n, n, cfg.k + 1)}")
    if cfg.edge_dim and (ef is None or ef.shape != (b, n, n, cfg.edge_dim)):
        raise DimensionMismatch(f"edge features must have shape {(b, n, n, cfg.edge_dim)}")


def forward_batch(params, cfg, x, adj, ef, basis):
    """Predictions ``(B, out_dim)`` and the cache needed by :func:`backward_batch`."""
    _check_batch(cfg, x, adj, ef, basis)
    n = x.shape[1]
    cache = {}
    h, cache["node"] = _mlp_fwd(params, "node", x)

    eye = np.eye(n, dtype=x.dtype)
    none_mask = (1.0 - adj - eye)[..., None]
    adj4 = adj[..., None]
    if cfg.edge_dim:
        e_edge, cache["edge"] = _mlp_fwd(params, "edge", ef)
    else:
        e_edge = params["edge.vec"]
    e = adj4 * e_edge + none_mask * params["edge.none"] + eye[..., None] * params["edge.self"]
    cache["masks"] = (adj4, none_mask, eye)

    s, cache["mix"] = _mlp_fwd(params, "mix", basis)

    layers = []
    for layer in range(cfg.n_layers):
        z = h[:, None, :, :] + e
        m, c_pair = _mlp_fwd(params, f"layer{layer}.pair", z)
        agg = (m * s).sum(axis=2)
        h, c_node = _mlp_fwd(params, f"layer{layer}.node", agg)
        layers.append((m, c_pair, c_node))
    cache["layers"] = layers
    cache["s"] = s

    pooled = h.sum(axis=1)
    out, cache["head"] = _mlp_fwd(params, "head", pooled)
    cache["n"] = n
    return out, cache


def backward_batch(params, cfg, cache, dout):
    """Gradients of ``sum(dout * out)`` with respect to every parameter."""
    grads = {}
    n = cache["n"]
    dpooled = _mlp_bwd(params, "head", cache["head"], dout, grads)
    dh = np.broadcast_to(dpooled[:, None, :], dpooled.shape[:1] + (n,) + dpooled.shape[1:])

    s = cache["s"]
    ds = np.zeros_like(s)
    de = 0.0
    for layer in reversed(range(cfg.n_layers)):
        m, c_pair, c_node = cache["layers"][layer]
        dagg = _mlp_bwd(params, f"layer{layer}.node", c_node, dh, grads)
        dq = dagg[:, :, None, :]
        dm = dq * s
        ds_full = dq * m
        ds += ds_full if s.shape[-1] == m.shape[-1] else ds_full.sum(axis=-1, keepdims=True)
        dz = _mlp_bwd(params, f"layer{layer}.pair", c_pair, dm, grads)
        dh = dz.sum(axis=1)
        de = de + dz

    _mlp_bwd(params, "mix", cache["mix"], ds, grads)

    adj4, none_mask, eye = cache["masks"]
    d = cfg.hidden
    if cfg.n_layers:
        grads["edge.none"] = (de * none_mask).reshape(-1, d).sum(axis=0)
        grads["edge.self"] = (de * eye[..., None]).reshape(-1, d).sum(axis=0)
        de_edge = de * adj4
        if cfg.edge_dim:
            _mlp_bwd(params, "edge", cache["edge"], de_edge, grads)
        else:
            grads["edge.vec"] = de_edge.reshape(-1, d).sum(axis=0)

    _mlp_bwd(params, "node", cache["node"], dh, grads)
    return OrderedDict((name, grads.get(name, np.zeros_like(p))) for name, p in params.items())


# -- single-graph helpers --------------------------------------------------

def graph_tensors(g, stack):
    """Batch-of-one tensors for a graph and its basis stack."""
    n = g.num_nodes
    if stack.n != n:
        raise DimensionMismatch(f"basis stack of size {stack.n} for a {n}-node graph")
    adj = np.zeros((n, n))
    ef = np.zeros((n, n, g.edge_dim))
    if g.edges:
        idx = np.asarray(g.edges)
        adj[idx[:, 0], idx[:, 1]] = adj[idx[:, 1], idx[:, 0]] = 1.0
        if g.edge_dim:
            ef[idx[:, 0], idx[:, 1]] = g.edge_feat
            ef[idx[:, 1], idx[:, 0]] = g.edge_feat
    return g.node_feat[None], adj[None], ef[None], stack.tensor()[None]


def forward(params, cfg, g, stack):
    """Prediction for one graph (``(out_dim,)``) and its forward cache."""
    out, cache = forward_batch(params, cfg, *graph_tensors(g, stack))
    return out[0], cache


def backward(params, cfg, cache, upstream):
    return backward_batch(params, cfg, cache, np.asarray(upstream, dtype=float).reshape(1, -1))
