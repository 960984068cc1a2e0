"""Exception and warning types raised across the package."""


class RandNNError(Exception):
    """Base class for all package errors."""


class DimensionError(RandNNError, ValueError):
    """Array shapes do not line up."""


class RankDeficiencyError(RandNNError, ArithmeticError):
    """Unregularized least-squares system is singular."""


class ScalingError(RandNNError, ValueError):
    """A recurrent matrix cannot be rescaled to the requested target."""


class StructureError(RandNNError, ValueError):
    """Malformed tree or graph (cycles, dangling references, multiple roots)."""


class ConfigError(RandNNError, ValueError):
    """Invalid or unknown experiment configuration."""


class DataFormatError(RandNNError, ValueError):
    """Malformed dataset file."""


class ArtifactError(RandNNError):
    """Model artifact could not be read."""


class ArtifactVersionError(ArtifactError):
    pass


class ChecksumError(ArtifactError):
    pass


class ConvergenceWarning(UserWarning):
    """An iterative routine stopped at max_iter; the best iterate is returned."""


class ContractionWarning(UserWarning):
    """A structural reservoir does not satisfy the contraction precondition."""
