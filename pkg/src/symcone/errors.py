"""Exception hierarchy shared by all symcone modules.

Infeasibility (a point outside an operator's cone) is kept distinct from
numeric failure (nonconvergence, stalls) and from bad parameters, because
callers react differently: infeasible configs are user errors, stalls are
solver diagnostics carrying the last iterate.
"""


class SymconeError(Exception):
    """Base class for all symcone errors."""


class DomainError(SymconeError, ValueError):
    """Invalid parameter (k out of range, rho >= n, bad dimensions, ...)."""


class InfeasiblePointError(SymconeError):
    """Eigenvalue tuple lies outside the operator's domain cone."""


class RangeError(SymconeError):
    """Requested level or datum is outside the attainable range."""


class EstimateUnavailableError(RangeError):
    """The boundary fit window contains inadmissible nodes."""


class InternalConsistencyError(SymconeError):
    """A cone predicate violated an invariant it is required to satisfy."""


class SamplerStarvedError(SymconeError):
    """Too many directions were rejected while sampling a level set."""


class NonconvergenceError(SymconeError):
    """Newton iteration exhausted its budget; carries the last iterate."""

    def __init__(self, message, last_solution=None):
        super().__init__(message)
        self.last_solution = last_solution


class StallError(NonconvergenceError):
    """Consecutive full backtracks without an acceptable step."""


class InvariantBreachError(SymconeError):
    """A solver invariant (e.g. exhaustion monotonicity) was violated."""


class ConfigError(SymconeError):
    """Malformed configuration file or CLI arguments."""
