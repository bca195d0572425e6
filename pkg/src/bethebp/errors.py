"""Exception types raised across the package."""


class BetheBPError(Exception):
    """Base class; ``code`` is the machine-readable tag used by the CLI."""

    code = "error"


class GraphError(BetheBPError, ValueError):
    code = "invalid_graph"


class GraphMismatchError(BetheBPError, ValueError):
    code = "graph_mismatch"


class CapacityError(BetheBPError, ValueError):
    code = "capacity"


class InconsistentError(BetheBPError, ValueError):
    code = "inconsistent_pseudomarginals"


class BoundaryError(BetheBPError, ValueError):
    """A reconstructed probability sits at or below the clamp floor."""

    code = "boundary"


class NotSymmetricError(BetheBPError, ValueError):
    code = "not_symmetric"


class BPOverflowError(BetheBPError, FloatingPointError):
    code = "bp_overflow"


class NoConvergedError(BetheBPError, RuntimeError):
    code = "no_converged"
