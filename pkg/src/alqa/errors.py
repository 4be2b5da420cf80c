"""Exception hierarchy shared across the package.

ContractError covers violated preconditions and invalid domain state; the
CLI maps it to exit code 1. Subclasses exist where callers need to react
differently (HTTP status codes, resumable runs).
"""


class ContractError(Exception):
    """A precondition or invariant of a documented operation was violated."""


class SizingError(ContractError):
    """Not enough records to satisfy the requested split sizes."""


class InvalidImageError(ContractError):
    """Raster is empty or has an unusable shape."""


class CatalogMismatchError(ContractError):
    """A configuration references a part name unknown to the catalog."""


class ConfigurationError(ContractError):
    """A config object is internally inconsistent or incomplete."""


class ShapeError(ContractError):
    """An array input does not have the required shape."""


class SampleSizeError(ContractError):
    """A statistical test received fewer observations than it supports."""


class DegenerateSampleError(ContractError):
    """A statistical test received a sample with no variation."""


class UndefinedMetricError(ContractError):
    """A metric is undefined for the given confusion counts."""


class EmptyPoolError(ContractError):
    """An acquisition operation was asked to score or draw from an empty pool."""


class NotFoundError(ContractError):
    """A referenced run, task, image, or ticket does not exist."""


class ConflictError(ContractError):
    """A state transition was attempted on an already-terminal entity."""


class LeakageError(ContractError):
    """An id from the validation or test split reached the labeling queue."""


class OracleTimeoutError(ContractError):
    """A blocking oracle call did not resolve within its configured timeout."""
