"""Input checks shared by the estimators and the command line."""

import numbers
from dataclasses import replace

import numpy as np

from .exceptions import BadConfig, EmptyDataset
from .graph import Graph, build_graph


def check_graphs(X, allow_empty=False):
    """Return ``X`` as a list of :class:`Graph`; dict records are built and validated."""
    if isinstance(X, (Graph, dict)):
        X = [X]
    try:
        items = list(X)
    except TypeError:
        raise BadConfig(f"expected a sequence of graphs, got {type(X).__name__}") from None
    graphs = [g if isinstance(g, Graph) else build_graph(g) for g in items]
    if not graphs and not allow_empty:
        raise EmptyDataset("no graphs given")
    if graphs:
        dims = {(g.node_dim, g.edge_dim) for g in graphs}
        if len(dims) > 1:
            raise BadConfig(f"graphs disagree on (node_dim, edge_dim): {sorted(dims)}")
    return graphs


def check_targets(graphs, y=None, task="regression"):
    """Targets as an array aligned with ``graphs``; ``y=None`` reads ``Graph.target``."""
    if y is None:
        y = [g.target for g in graphs]
        if any(v is None for v in y):
            raise BadConfig("y not given and some graphs have no target")
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != len(graphs):
        raise BadConfig(f"y must be 1-d with {len(graphs)} entries, got shape {y.shape}")
    if task == "regression":
        y = y.astype(float)
        if not np.all(np.isfinite(y)):
            raise BadConfig("regression targets must be finite")
    return y


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < minimum:
        raise BadConfig(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def with_targets(graphs, y):
    """Copies of ``graphs`` carrying the targets ``y``."""
    return [replace(g, target=_scalar(t)) for g, t in zip(graphs, y)]


def _scalar(v):
    return v.item() if isinstance(v, np.generic) else v
