"""Exception types shared across the package."""


class BfauditError(Exception):
    """Base class for all package-specific errors."""


class DomainError(BfauditError, ValueError):
    """Argument outside the mathematical domain of a function."""


class OutOfRange(BfauditError, ValueError):
    """Parameter outside its admissible range (e.g. non-PSD correlation)."""


class SingularTransform(BfauditError):
    """Reparametrization transform is numerically singular."""


class RankDeficient(BfauditError):
    """Could not find enough independent rows for the nuisance block."""


class InvalidData(BfauditError):
    """Data degenerate for the requested computation (e.g. zero residual
    sum with an improper variance prior)."""


class IntegrationFailure(BfauditError):
    """Quadrature failed to reach the target tolerance."""


class Divergent(BfauditError):
    """A quantity required to be finite was detected as non-finite."""


class MCFailure(BfauditError):
    """Monte Carlo estimate failed to reach the requested precision."""


class Inconclusive(BfauditError):
    """Numeric divergence test could not classify the integral."""


class Unsupported(BfauditError):
    """Requested combination is outside the supported test/prior matrix."""


class ConfigError(BfauditError, ValueError):
    """Malformed run configuration."""


class DataError(BfauditError, ValueError):
    """Malformed input dataset."""
