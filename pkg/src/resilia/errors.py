"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
2 for malformed input, 3 when the system cannot be steered to the origin,
4 when a numerical solver fails to converge, 1 otherwise.
"""


class ResiliaError(Exception):
    exit_code = 1


# -- linear algebra ---------------------------------------------------------

class NotHurwitz(ResiliaError):
    exit_code = 3


class NotSPD(ResiliaError):
    pass


# -- geometry ---------------------------------------------------------------

class DimensionMismatch(ResiliaError, ValueError):
    exit_code = 2


class DegenerateZonotope(ResiliaError):
    pass


class DegenerateSet(ResiliaError):
    pass


class UnboundedSet(ResiliaError):
    pass


class OriginNotInterior(ResiliaError):
    pass


# -- verdicts and bounds ----------------------------------------------------

class HypothesisUnavailable(ResiliaError):
    pass


class InvalidPair(ResiliaError):
    pass


class RankDeficient(ResiliaError):
    pass


class EmptyPairList(ResiliaError):
    pass


# -- minimum time -----------------------------------------------------------

class NotReachableWithinHorizon(ResiliaError):
    exit_code = 4


class NotStabilizable(ResiliaError):
    exit_code = 3


class NotResilientlyStabilizable(NotStabilizable):
    pass


class ControlOutOfRange(ResiliaError):
    exit_code = 4

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


# -- input files ------------------------------------------------------------

class ParseError(ResiliaError):
    exit_code = 2


class SchemaError(ResiliaError):
    exit_code = 2

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class DimensionError(SchemaError):
    pass
