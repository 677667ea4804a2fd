"""Synthetic graph-level regression tasks with exactly computed targets."""

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from ..exceptions import BadConfig
from ..graph import adjacency, basis_matrix, build_graph, dump_graphs
from ..linalg import eig_sym

GENERATORS = ("erdos_renyi", "cycle", "star", "barbell", "mixed")
TARGETS = ("triangle_count", "spectral_radius", "algebraic_connectivity")


@dataclass
class SyntheticTaskSpec:
    generator: str = "erdos_renyi"
    size_range: tuple = (8, 16)
    n_graphs: int = 2000
    target: str = "triangle_count"
    p: float = 0.3
    seed: int = 0

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        if set(data) - known:
            raise BadConfig(f"unknown task options: {sorted(set(data) - known)}")
        spec = cls(**data)
        spec.size_range = tuple(spec.size_range)
        return spec.validate()

    def to_dict(self):
        out = asdict(self)
        out["size_range"] = list(self.size_range)
        return out

    def validate(self):
        if self.generator not in GENERATORS:
            raise BadConfig(f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        if self.target not in TARGETS:
            raise BadConfig(f"unknown target {self.target!r}; expected one of {TARGETS}")
        lo, hi = self.size_range
        if lo < 2 or hi > 64 or lo > hi:
            raise BadConfig(f"size_range must satisfy 2 <= n_min <= n_max <= 64, got {self.size_range}")
        if self.n_graphs < 10:
            raise BadConfig("n_graphs must be at least 10")
        if not 0.0 <= self.p <= 1.0:
            raise BadConfig("p must lie in [0, 1]")
        return self


def erdos_renyi_edges(n, p, rng):
    upper = np.triu(rng.random((n, n)) < p, 1)
    return [(int(u), int(v)) for u, v in zip(*np.nonzero(upper))]


def cycle_edges(n):
    return [(i, (i + 1) % n) for i in range(n)] if n > 2 else [(0, 1)]


def star_edges(n):
    return [(0, i) for i in range(1, n)]


def barbell_edges(n):
    """Two cliques of sizes ``n // 2`` and ``n - n // 2`` joined by one edge."""
    a = n // 2
    left = list(combinations(range(a), 2))
    right = list(combinations(range(a, n), 2))
    return left + right + [(a - 1, a)]


def triangle_count(g):
    """Triangles by enumerating every node triple."""
    a = adjacency(g)
    return sum(1 for i, j, k in combinations(range(g.num_nodes), 3)
               if a[i, j] and a[j, k] and a[i, k])


def spectral_radius(g):
    return float(np.max(np.abs(eig_sym(adjacency(g)).eigvals)))


def algebraic_connectivity(g):
    """Second-smallest Laplacian eigenvalue (0 for disconnected graphs)."""
    if g.num_nodes < 2:
        return 0.0
    vals = np.sort(eig_sym(basis_matrix(g, "laplacian")).eigvals)
    return float(max(vals[1], 0.0))


TARGET_FUNCTIONS = {
    "triangle_count": triangle_count,
    "spectral_radius": spectral_radius,
    "algebraic_connectivity": algebraic_connectivity,
}


def make_graph(generator, n, rng, p=0.3, target=None):
    if generator == "mixed":
        generator = ("erdos_renyi", "cycle", "star", "barbell")[rng.integers(4)]
    if generator == "erdos_renyi":
        edges = erdos_renyi_edges(n, p, rng)
    elif generator == "cycle":
        edges = cycle_edges(n)
    elif generator == "star":
        edges = star_edges(n)
    elif generator == "barbell":
        edges = barbell_edges(n)
    else:
        raise BadConfig(f"unknown generator {generator!r}")
    g = build_graph(num_nodes=n, edges=edges)
    if target is not None:
        value = TARGET_FUNCTIONS[target](g)
        g = build_graph(num_nodes=n, edges=edges, target=value)
    return g


@dataclass
class Dataset:
    train: list
    valid: list
    test: list
    spec: SyntheticTaskSpec = field(default=None)

    def splits(self):
        return {"train": self.train, "valid": self.valid, "test": self.test}

    def save(self, directory):
        """Write ``train.json``, ``valid.json``, ``test.json`` and ``spec.json``."""
        for name, graphs in self.splits().items():
            dump_graphs(graphs, f"{directory}/{name}.json")
        if self.spec is not None:
            with open(f"{directory}/spec.json", "w") as fh:
                json.dump(self.spec.to_dict(), fh, indent=2, sort_keys=True)
                fh.write("\n")


def split_8_1_1(graphs):
    n = len(graphs)
    n_train = int(round(0.8 * n))
    n_valid = int(round(0.1 * n))
    return graphs[:n_train], graphs[n_train:n_train + n_valid], graphs[n_train + n_valid:]


def generate_dataset(spec):
    """Deterministic dataset for ``spec``, split 8:1:1 in generation order.

    Disconnected graphs are kept.
    """
    if isinstance(spec, dict):
        spec = SyntheticTaskSpec.from_dict(spec)
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.size_range
    graphs = [make_graph(spec.generator, int(rng.integers(lo, hi + 1)), rng, spec.p, spec.target)
              for _ in range(spec.n_graphs)]
    train, valid, test = split_8_1_1(graphs)
    return Dataset(train, valid, test, spec)
