"""Exception hierarchy shared by all covercorr modules.

The CLI maps these onto process exit codes, so raising the right class
matters: ConfigError -> 1, ModelError -> 2, SpectralError -> 3,
ResourceError -> 4, NumericalError -> 5.
"""


class CovercorrError(Exception):
    """Base class for all covercorr errors."""


class ConfigError(CovercorrError):
    """Malformed configuration, file format, or argument."""


class ModelError(CovercorrError):
    """A model-level precondition failed (non-stochastic, non-centered, ...)."""


class SpectralError(CovercorrError):
    """A spectral precondition failed (degenerate gap, branch crossing, ...)."""


class ResourceError(CovercorrError):
    """A computation was refused by a memory or size guard."""


class NumericalError(CovercorrError):
    """An internal numerical procedure failed to converge or lost accuracy."""
