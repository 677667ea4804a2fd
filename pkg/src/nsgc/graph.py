"""Graph container, canonical matrix representations and relabelling.

Matrices are plain ``numpy.ndarray`` objects. Functions that need a
symmetric input validate it with :func:`check_symmetric`.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionMismatch,
    DuplicateEdge,
    IndexOutOfRange,
    NotSymmetric,
    RaggedFeatures,
    SelfLoop,
    TooLarge,
)

MAX_NODES = 256

BASIS_FAMILIES = ("raw_aug", "sym_norm", "rw_norm", "laplacian")
SYMMETRIC_FAMILIES = ("raw_aug", "sym_norm", "laplacian")


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with dense node features.

    ``edges`` holds canonical ``(u, v)`` pairs with ``u < v``; row ``e`` of
    ``edge_feat`` belongs to ``edges[e]``. Graphs without edge features carry
    an ``(m, 0)`` array.
    """

    num_nodes: int
    edges: tuple
    node_feat: np.ndarray
    edge_feat: np.ndarray = field(default=None)
    target: object = None

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def node_dim(self):
        return self.node_feat.shape[1]

    @property
    def edge_dim(self):
        return self.edge_feat.shape[1]

    def to_dict(self):
        out = {
            "num_nodes": self.num_nodes,
            "edges": [list(e) for e in self.edges],
            "node_feat": self.node_feat.tolist(),
        }
        if self.edge_dim:
            out["edge_feat"] = self.edge_feat.tolist()
        if self.target is not None:
            t = self.target
            out["target"] = t.tolist() if isinstance(t, np.ndarray) else t
        return out


def build_graph(spec=None, **kwargs):
    """Validate a graph record and return a :class:`Graph`.

    ``spec`` is a mapping with the JSON keys ``num_nodes``, ``edges``,
    ``node_feat`` and optionally ``edge_feat`` and ``target``; keyword
    arguments override it. ``node_feat`` defaults to a single constant
    feature per node.
    """
    rec = dict(spec or {})
    rec.update(kwargs)
    n = int(rec["num_nodes"])
    if n < 1:
        raise IndexOutOfRange(f"num_nodes must be positive, got {n}")
    if n > MAX_NODES:
        raise TooLarge(f"num_nodes={n} exceeds the dense limit of {MAX_NODES}")

    edges = []
    seen = set()
    for pair in rec.get("edges", ()):
        if len(pair) != 2:
            raise IndexOutOfRange(f"edge {pair!r} is not a pair")
        u, v = int(pair[0]), int(pair[1])
        if not (0 <= u < n and 0 <= v < n):
            raise IndexOutOfRange(f"edge ({u}, {v}) out of range for {n} nodes")
        if u == v:
            raise SelfLoop(f"self-loop at node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DuplicateEdge(f"duplicate edge {key}")
        seen.add(key)
        edges.append(key)

    node_feat = rec.get("node_feat")
    if node_feat is None:
        node_feat = np.ones((n, 1))
    node_feat = _as_rows(node_feat, "node_feat")
    if node_feat.shape[0] != n:
        raise RaggedFeatures(
            f"node_feat has {node_feat.shape[0]} rows, expected {n}")

    edge_feat = rec.get("edge_feat")
    if edge_feat is None or len(edge_feat) == 0:
        edge_feat = np.zeros((len(edges), 0))
    else:
        edge_feat = _as_rows(edge_feat, "edge_feat")
        if edge_feat.shape[0] != len(edges):
            raise RaggedFeatures(
                f"edge_feat has {edge_feat.shape[0]} rows for {len(edges)} edges")

    target = rec.get("target")
    if isinstance(target, (list, tuple)):
        target = np.asarray(target, dtype=float)
    node_feat.setflags(write=False)
    edge_feat.setflags(write=False)
    return Graph(n, tuple(edges), node_feat, edge_feat, target)


def _as_rows(rows, name):
    try:
        arr = np.array(rows, dtype=float)
    except ValueError as exc:
        raise RaggedFeatures(f"{name} rows have unequal lengths") from exc
    if arr.ndim == 1:
        arr = arr[:, None] if len(arr) else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise RaggedFeatures(f"{name} must be a matrix, got shape {arr.shape}")
    return arr


def adjacency(g):
    a = np.zeros((g.num_nodes, g.num_nodes))
    if g.edges:
        idx = np.asarray(g.edges)
        a[idx[:, 0], idx[:, 1]] = 1.0
        a[idx[:, 1], idx[:, 0]] = 1.0
    return a


def augmented_adjacency(g):
    return adjacency(g) + np.eye(g.num_nodes)


def basis_matrix(g, family):
    """Dense matrix of one basis family.

    ``rw_norm`` is the row-stochastic ``D~^-1 A~`` and is not symmetric;
    pass it to :func:`check_symmetric` and you get ``NotSymmetric``.
    """
    if family == "laplacian":
        a = adjacency(g)
        return np.diag(a.sum(axis=1)) - a
    a_aug = augmented_adjacency(g)
    if family == "raw_aug":
        return a_aug
    deg = a_aug.sum(axis=1)
    if family == "sym_norm":
        r = 1.0 / np.sqrt(deg)
        return r[:, None] * a_aug * r[None, :]
    if family == "rw_norm":
        return a_aug / deg[:, None]
    raise ValueError(f"unknown basis family {family!r}; expected one of {BASIS_FAMILIES}")


def sym_similar(g):
    """Symmetric matrix similar to the ``rw_norm`` basis (same spectrum)."""
    return basis_matrix(g, "sym_norm")


def check_symmetric(s, name="matrix"):
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {s.shape}")
    scale = max(1.0, float(np.linalg.norm(s)))
    if s.size and np.max(np.abs(s - s.T)) > 1e-12 * scale:
        raise NotSymmetric(f"{name} is not symmetric")
    return s


def check_permutation(m, n=None):
    m = np.asarray(m)
    if m.ndim != 1 or not np.issubdtype(m.dtype, np.integer):
        raise ValueError("permutation must be a 1-D integer sequence")
    if n is not None and len(m) != n:
        raise DimensionMismatch(f"permutation of length {len(m)} for size {n}")
    if not np.array_equal(np.sort(m), np.arange(len(m))):
        raise ValueError("permutation is not a bijection on [0, n)")
    return m


def permutation_matrix(m):
    m = check_permutation(m)
    out = np.zeros((len(m), len(m)))
    out[m, np.arange(len(m))] = 1.0
    return out


def permute_matrix(s, m):
    """Return ``M s M^T``: node ``i`` moves to position ``m[i]``."""
    s = np.asarray(s)
    m = check_permutation(m, s.shape[0])
    out = np.empty_like(s)
    out[np.ix_(m, m)] = s
    return out


def permute_graph(g, m):
    """Relabel node ``i`` as ``m[i]``; edge order and features are kept."""
    m = check_permutation(m, g.num_nodes)
    node_feat = np.empty_like(g.node_feat)
    node_feat[m] = g.node_feat
    edges = [(int(m[u]), int(m[v])) for u, v in g.edges]
    return build_graph(
        num_nodes=g.num_nodes,
        edges=edges,
        node_feat=node_feat,
        edge_feat=g.edge_feat if g.edge_dim else None,
        target=g.target,
    )


def load_graphs(path):
    """Read a graph JSON file; a single object or an array of objects."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    return [build_graph(rec) for rec in data]


def dump_graphs(graphs, path):
    with open(path, "w") as fh:
        json.dump([g.to_dict() for g in graphs], fh, separators=(",", ":"))
        fh.write("\n")
