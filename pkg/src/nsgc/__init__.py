"""Non-spatial spectral graph bases, polynomial filters and a graph network built on them."""

from .exceptions import NSGCError
from .graph import Graph, adjacency, augmented_adjacency, basis_matrix, build_graph, load_graphs
from .linalg import EigenDecomposition, eig_sym, reconstruct, spectrum_stats
from .spectral import basis_stack, graph_basis_stack, non_spatial_basis, power_eps, transform

__version__ = "0.1.0"

__all__ = [
    "NSGCError", "Graph", "adjacency", "augmented_adjacency", "basis_matrix", "build_graph",
    "load_graphs", "EigenDecomposition", "eig_sym", "reconstruct", "spectrum_stats",
    "basis_stack", "graph_basis_stack", "non_spatial_basis", "power_eps", "transform",
]
