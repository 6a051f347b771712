"""Exception hierarchy.

Errors split into two families so the CLI can map them onto exit codes:
invalid input (2) and numerical degeneracy (3).
"""


class QuadGeoError(Exception):
    exit_code = 1


class InvalidInput(QuadGeoError):
    exit_code = 2


class NumericalError(QuadGeoError):
    exit_code = 3


class InvalidDiscriminant(InvalidInput, ValueError):
    pass


class NotReduced(InvalidInput, ValueError):
    pass


class MixedDiscriminants(InvalidInput, ValueError):
    pass


class ParityViolation(NumericalError, ArithmeticError):
    pass


class StepTooCoarse(InvalidInput, ValueError):
    pass


class RadiusTooLarge(InvalidInput, ValueError):
    pass


class EmptySubcollection(InvalidInput, ValueError):
    pass


class NumericalDegeneracy(NumericalError, FloatingPointError):
    pass


class DegenerateFit(NumericalError, ValueError):
    pass
