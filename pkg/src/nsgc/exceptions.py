"""Exception hierarchy shared by every nsgc module."""


class NSGCError(Exception):
    """Base class; ``kind`` is the short machine-readable error name."""

    @property
    def kind(self):
        return type(self).__name__


class GraphError(NSGCError, ValueError):
    pass


class IndexOutOfRange(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class RaggedFeatures(GraphError):
    pass


class TooLarge(GraphError):
    pass


class DimensionMismatch(NSGCError, ValueError):
    pass


class NotSymmetric(NSGCError, ValueError):
    pass


class NoConvergence(NSGCError, ArithmeticError):
    pass


class DomainError(NSGCError, ValueError):
    pass


class DegenerateSignal(NSGCError, ArithmeticError):
    pass


class DivergentSeries(NSGCError, ArithmeticError):
    pass


class BadConfig(NSGCError, ValueError):
    pass


class EmptyDataset(NSGCError, ValueError):
    pass


class DegenerateGraph(NSGCError, ValueError):
    pass
