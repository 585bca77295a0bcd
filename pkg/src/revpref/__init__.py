"""Learning predictive utility models from revealed preferences."""

from revpref.all_pairs import AllPairsLearner
from revpref.oracle import feedback, make_observation, solve_linear, solve_separable
from revpref.polytope import Polytope
from revpref.ratio_bounds import InconsistentBoundsError, RatioBoundMatrix
from revpref.separable import DerivativeGrid
from revpref.types import (
    Example,
    ExampleDistribution,
    LinearValuation,
    Observation,
    SeparableConcaveValuation,
)

__all__ = [
    "AllPairsLearner",
    "DerivativeGrid",
    "Example",
    "ExampleDistribution",
    "InconsistentBoundsError",
    "LinearValuation",
    "Observation",
    "Polytope",
    "RatioBoundMatrix",
    "SeparableConcaveValuation",
    "feedback",
    "make_observation",
    "solve_linear",
    "solve_separable",
]
