"""Closed geodesics of real quadratic discriminants on the modular surface.

Exact arithmetic of indefinite binary quadratic forms, the lift of their
reduction cycles to periodic orbits of the geodesic flow on
SL2(Z)\\SL2(R), and numerical experiments on how those orbits distribute.
"""

from .errors import (
    DegenerateFit,
    EmptySubcollection,
    InvalidDiscriminant,
    InvalidInput,
    MixedDiscriminants,
    NotReduced,
    NumericalDegeneracy,
    NumericalError,
    ParityViolation,
    QuadGeoError,
    RadiusTooLarge,
    StepTooCoarse,
)
from .forms import (
    ClassGroup,
    Discriminant,
    QuadForm,
    ReductionCycle,
    class_group,
    compose,
    enumerate_reduced,
    generated_order,
    make_discriminant,
    principal_form,
    reduce,
    reduced_cycle,
    rho,
)
from .units import PellSolution, RegulatorData, automorph, fundamental_pell, regulator
from .surface import (
    ClosedGeodesic,
    OrbitTube,
    SurfacePoint,
    distance,
    flow,
    fold,
    haar_integral,
    haar_sample,
    integrate_along,
    lift_geodesic,
)
from .observables import TestFunction, constant, cusp_indicator, smoothness_estimate, tube_bump
from .subcollections import GeodesicCollection, SubcollectionSpec, build_full, measure, ratios, subcollection

__version__ = "0.1.0"
