"""Exception and warning types shared across the package."""


class SkewbandError(Exception):
    """Base class for all package errors."""


class InvalidPotential(SkewbandError):
    """Potential fails the admissibility checks (odd degree, u_2d <= 0, ...)."""


class NonConvergent(SkewbandError):
    """Adaptive quadrature or tail estimation exceeded its budget."""


class PrecisionLoss(SkewbandError):
    """A consistency residual exceeded tolerance; raise working precision."""


class Degenerate(SkewbandError):
    """A skew-normalization constant vanished; the family does not exist there."""


class Singular(SkewbandError):
    """A cell or matrix that must be invertible is numerically singular."""


class DomainError(SkewbandError):
    """Evaluation point outside the tabulated grid or admissible region."""


class OnRealAxis(SkewbandError):
    """Cauchy-type transform requested on the real axis (unsupported)."""


class ConfigError(SkewbandError):
    """Run configuration failed validation."""


class TruncationWarning(UserWarning):
    """Requested rows reach into the polluted edge of a truncated operator."""


class MixingWarning(UserWarning):
    """Markov chain acceptance rate outside the healthy window."""
