"""Exception hierarchy shared by all modules."""


class VolterraError(Exception):
    """Base class for every error raised by :mod:`pwvolterra`."""


# linalg
class SingularMatrix(VolterraError):
    pass


class Inconsistent(VolterraError):
    """A singular system whose right-hand side violates a solvability condition."""


# problem / expressions
class InputError(VolterraError):
    """Malformed problem data (bad file, bad expression, unknown name)."""


class ExprSyntaxError(InputError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DomainError(VolterraError):
    """Expression evaluated outside the domain of an elementary function."""


class OutOfDomain(VolterraError):
    pass


class OutOfRange(VolterraError):
    pass


class DegenerateData(VolterraError):
    pass


class UnknownName(InputError):
    pass


# logpower
class DimensionMismatch(VolterraError):
    pass


class DegenerateCurve(VolterraError):
    pass


class UnboundParameter(VolterraError):
    pass


# characteristic / asymptotic
class UnclassifiablePoint(VolterraError):
    """The point is neither regular nor singular of any finite multiplicity."""


class DegreeMismatch(VolterraError):
    pass


class SolvabilityFailure(VolterraError):
    pass


# solvers
class SolverError(VolterraError):
    """Base for failures of the numerical solvers (CLI exit code 2)."""


class NoContraction(SolverError):
    pass


class Diverged(SolverError):
    pass


class PreconditionResidual(SolverError):
    pass


class Infeasible(SolverError):
    pass


class NonlinearCurves(SolverError):
    pass


class DegenerateFit(VolterraError):
    pass
