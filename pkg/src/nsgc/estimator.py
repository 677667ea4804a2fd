"""scikit-learn compatible wrappers.

``X`` is always a sequence of graphs (:class:`~nsgc.graph.Graph` objects or
JSON-style dicts), never a feature matrix.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .nsgn.training import TrainConfig, train
from .spectral import graph_basis_stacks
from .validation import check_graphs, check_positive_int, check_targets, with_targets


class SpectralBasisTransformer(TransformerMixin, BaseEstimator):
    """Map each graph to its ``(n, n, k + 1)`` basis tensor.

    Stateless apart from parameter validation; ``transform`` returns a list
    because graphs differ in size.
    """

    def __init__(self, family="power_eps", eps=1 / 3, k=6, source="raw_aug"):
        self.family = family
        self.eps = eps
        self.k = k
        self.source = source

    def fit(self, X, y=None):
        TrainConfig(family=self.family, eps=self.eps, k=self.k, source=self.source).validate()
        check_positive_int(self.k, "k", minimum=0)
        graphs = check_graphs(X)
        self.node_dim_ = graphs[0].node_dim
        return self

    def transform(self, X):
        check_is_fitted(self, "node_dim_")
        graphs = check_graphs(X)
        eps = self.eps if self.family == "power_eps" else None
        return [st.tensor() for st in graph_basis_stacks(graphs, self.family, self.k, eps,
                                                         source=self.source)]


class _NSGNBase(BaseEstimator):
    _task = "regression"

    def __init__(self, family="power_eps", eps=1 / 3, k=6, channel_mode="independent",
                 hidden=32, n_layers=2, epochs=100, batch_size=None, lr=1e-3,
                 weight_decay=0.0, lr_schedule="constant", loss=None, random_state=0):
        self.family = family
        self.eps = eps
        self.k = k
        self.channel_mode = channel_mode
        self.hidden = hidden
        self.n_layers = n_layers
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.weight_decay = weight_decay
        self.lr_schedule = lr_schedule
        self.loss = loss
        self.random_state = random_state

    def _train_config(self, n_classes=2):
        return TrainConfig(
            family=self.family, eps=self.eps, k=self.k, channel_mode=self.channel_mode,
            hidden=check_positive_int(self.hidden, "hidden"),
            n_layers=check_positive_int(self.n_layers, "n_layers", minimum=0),
            task=self._task, n_classes=n_classes, loss=self.loss,
            epochs=check_positive_int(self.epochs, "epochs", minimum=0),
            batch_size=self.batch_size, lr=self.lr, weight_decay=self.weight_decay,
            lr_schedule=self.lr_schedule, seed=int(self.random_state or 0)).validate()

    def _fit(self, graphs, y, n_classes=2):
        cfg = self._train_config(n_classes)
        self.result_ = train({"train": with_targets(graphs, y)}, cfg)
        self.history_ = self.result_.history
        self.n_features_in_ = graphs[0].node_dim
        return self

    def _raw_output(self, X):
        check_is_fitted(self, "result_")
        graphs = check_graphs(X)
        return self.result_.predict_raw(self.result_.prepare(graphs))


class NonSpatialGNRegressor(RegressorMixin, _NSGNBase):
    """Graph-level regressor; ``score`` is R^2 as for any sklearn regressor."""

    _task = "regression"

    def fit(self, X, y=None):
        graphs = check_graphs(X)
        return self._fit(graphs, check_targets(graphs, y, "regression"))

    def predict(self, X):
        return self._raw_output(X)[:, 0]


class NonSpatialGNClassifier(ClassifierMixin, _NSGNBase):
    """Graph-level classifier over arbitrary hashable labels."""

    _task = "classification"

    def fit(self, X, y=None):
        graphs = check_graphs(X)
        y = check_targets(graphs, y, "classification")
        self.classes_, codes = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("classification needs at least two classes")
        return self._fit(graphs, codes, n_classes=len(self.classes_))

    def predict_proba(self, X):
        logits = self._raw_output(X)
        z = np.exp(logits - logits.max(axis=1, keepdims=True))
        return z / z.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[self.predict_proba(X).argmax(axis=1)]
