"""Exception types raised by groupcons."""


class GroupConsensusError(Exception):
    """Base class for all library errors."""


class GraphError(GroupConsensusError, ValueError):
    """Invalid graph or clustering input."""


class AssumptionError(GroupConsensusError):
    """The clustering is not an external equitable partition of the graph."""


class InfeasibleTopologyError(GroupConsensusError):
    """Group consensus cannot be reached on this topology."""


class SpectrumSplitError(GroupConsensusError):
    """Eigenvalues of L failed to pair with those of L_G and the reduced matrix."""


class DecompositionError(GroupConsensusError):
    """The constructive similarity transform disagrees with the reduced matrix."""


class RiccatiError(GroupConsensusError):
    """The algebraic Riccati equation could not be solved to tolerance."""


class EigenvalueError(GroupConsensusError):
    """Dense eigenvalue computation failed to converge."""
