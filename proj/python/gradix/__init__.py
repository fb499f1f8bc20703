"""Physics-informed neural network solver for the radiative transfer equation."""

from ._core import (
    Case,
    Run,
    TrainingAbort,
    case_names,
    forward_bound,
    gauss_legendre,
    sobol,
    steady_forward_bound,
    train,
    verify,
)

__all__ = [
    "Case",
    "Run",
    "TrainingAbort",
    "case_names",
    "forward_bound",
    "gauss_legendre",
    "sobol",
    "steady_forward_bound",
    "train",
    "verify",
]
