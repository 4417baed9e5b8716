"""Exception hierarchy.

Every error carries the process exit code the command-line front end uses
for it, so the mapping from failure cause to exit status lives in one place.
"""


class LatentIdError(Exception):
    exit_code = 1


class ParseError(LatentIdError):
    exit_code = 2


class RankDeficient(LatentIdError):
    exit_code = 3


class EigenvalueCollision(LatentIdError):
    exit_code = 4


class ModeAmbiguity(LatentIdError):
    exit_code = 5


class NotAProbability(LatentIdError):
    exit_code = 6


class AmbiguousAssignment(LatentIdError):
    exit_code = 7

    def __init__(self, message, tuples=()):
        super().__init__(message)
        self.tuples = list(tuples)


class VanishingCF(LatentIdError):
    exit_code = 8


class GridTooCoarse(LatentIdError):
    exit_code = 9


class ComplexEigenvalues(LatentIdError):
    exit_code = 10


class NoFactorization(LatentIdError):
    exit_code = 11


class LeavesViolation(LatentIdError):
    exit_code = 12


class ModelMisfit(LatentIdError):
    exit_code = 13


class SingularDesign(LatentIdError):
    exit_code = 14


class GenerationExhausted(LatentIdError):
    exit_code = 15


class BadDistribution(LatentIdError):
    exit_code = 16


class EmptySample(BadDistribution):
    pass


class LeavesViolationWarning(UserWarning):
    """Issued when a generated population maps one observed tuple to several latent values."""
