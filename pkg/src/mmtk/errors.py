"""Exception hierarchy shared by every mmtk module."""


class MMError(Exception):
    """Base class for all mmtk errors."""


class ValidationError(MMError, ValueError):
    """Input data does not describe a finite mm-space (or a valid auxiliary object)."""


class MalformedSpace(ValidationError):
    pass


class AsymmetricMatrix(ValidationError):
    def __init__(self, i, j, a, b):
        super().__init__(f"dist[{i},{j}]={a!r} differs from dist[{j},{i}]={b!r}")
        self.i, self.j = i, j


class TriangleViolation(ValidationError):
    def __init__(self, i, j, k, excess):
        super().__init__(
            f"triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k}) by {excess:.3g}")
        self.i, self.j, self.k = i, j, k
        self.excess = excess


class NonProbabilityWeights(ValidationError):
    pass


class ZeroDistanceDistinctPoints(ValidationError):
    def __init__(self, i, j):
        super().__init__(
            f"points {i} and {j} are at distance 0; use quotient_support to identify them")
        self.i, self.j = i, j


class InconsistentCluster(ValidationError):
    def __init__(self, i, j, k):
        super().__init__(
            f"points {i} and {j} are at distance 0 but differ in distance to point {k}")
        self.i, self.j, self.k = i, j, k


class NegativeScale(ValidationError):
    pass


class InvalidWitness(ValidationError):
    pass


class RelationTooDistorted(ValidationError):
    pass


class MetricPreservationViolated(ValidationError):
    pass


class SizeOverflow(MMError):
    """A construction would exceed the configured point-count cap."""


class SearchBudgetExceeded(MMError):
    """An exact search ran out of its node budget."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class MidpointCheckFailed(MMError):
    def __init__(self, values):
        super().__init__(f"midpoint re-check exceeded tolerance: {values}")
        self.values = values


class MalformedDocument(ValidationError):
    """A JSON input could not be parsed; carries the 1-based line and column."""

    def __init__(self, message, source=None, line=None, column=None):
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{source or '<input>'}: {message}{where}")
        self.source, self.line, self.column = source, line, column
