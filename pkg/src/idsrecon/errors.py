"""Exception hierarchy shared by all modules."""


class ReconError(Exception):
    """Base class for all library errors."""


class ContractError(ReconError, ValueError):
    """An argument violates a documented precondition."""


class ZeroMassError(ReconError, ValueError):
    """A probability vector has no positive mass left to normalize."""


class UnreachableTerminal(ReconError):
    """The trace length cannot be reached under the drift bound."""


class DecodeCollapse(ReconError):
    """Forward or backward metrics underflowed to zero for a whole stage."""


class InstanceTooLarge(ReconError):
    """An exact oracle was asked to solve an instance beyond its budget."""


class DatasetError(ReconError):
    """Malformed or inconsistent cluster dataset files."""


class MismatchedCounts(DatasetError):
    pass


class EmptyCluster(DatasetError):
    pass
