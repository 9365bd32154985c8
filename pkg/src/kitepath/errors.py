"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
1 for configuration problems, 2 for physically or geometrically infeasible
input, 3 for solver failures.
"""


class KitepathError(Exception):
    exit_code = 1


class ConfigError(KitepathError):
    exit_code = 1


class ParseError(ConfigError):
    """Malformed configuration document."""

    def __init__(self, msg, field=""):
        self.field = field
        super().__init__(f"{field}: {msg}" if field else msg)


class ValidationError(ConfigError):
    """Configuration that parses but violates an invariant.

    ``field`` is the dotted path of the offending entry, e.g.
    ``"environment.wind_speed"``.
    """

    def __init__(self, field, msg=""):
        self.field = field
        super().__init__(f"{field}: {msg}" if msg else field)


class DomainError(KitepathError, ValueError):
    exit_code = 2


class InvalidPath(DomainError):
    pass


class DegeneratePath(DomainError):
    pass


class InvalidRadius(DomainError):
    pass


class CurvatureInfeasible(DomainError):
    """The kite cannot generate enough turning lift for the requested curvature."""

    def __init__(self, msg, kappa=None, s=None):
        self.kappa = kappa
        self.s = s
        super().__init__(msg)


class RadialOverrun(DomainError):
    pass


class PositionInfeasible(DomainError):
    pass


class NoFeasibleElevation(DomainError):
    pass


class InconsistentBounds(DomainError):
    pass


class OutOfDomain(DomainError):
    pass


class TooFewKnots(DomainError):
    pass


class SolverError(KitepathError):
    exit_code = 3


class NoConvergedSolution(SolverError):
    pass


class SweepAborted(SolverError):
    """A tether length could not be solved; ``partial`` holds the results so far."""

    def __init__(self, r, partial=None):
        self.r = r
        self.partial = partial
        super().__init__(f"sweep aborted at r={r:g} m: no converged solution")
