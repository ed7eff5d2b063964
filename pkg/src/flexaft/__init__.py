"""Flexible parametric accelerated failure time models on spline log
cumulative hazards, with comparator families, simulation tools, and a
Monte Carlo study harness."""

from ._backend import backend_name
from .data import (SurvivalDataset, kaplan_meier, nelson_aalen, read_csv,
                   write_csv)
from .errors import (ConfigError, DataValidationError, FlexAftError,
                     GenerationError, IdentifiabilityError, KnotError,
                     ModelFileError, ParameterError, UndefinedScoreError)
from .estimation import (FitOptions, FittedModel, SurvivalPrediction,
                         compare, covariance, fit, initialize,
                         predict_survival)
from .models import (ExponentialPhModel, FpaftModel, GenGammaAftModel,
                     ModelSpec, WeibullAftModel, acceleration_factor,
                     build_model)
from .splines import KnotVector, make_knots

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataValidationError",
    "ExponentialPhModel",
    "FitOptions",
    "FittedModel",
    "FlexAftError",
    "FpaftModel",
    "GenGammaAftModel",
    "GenerationError",
    "IdentifiabilityError",
    "KnotError",
    "KnotVector",
    "ModelFileError",
    "ModelSpec",
    "ParameterError",
    "SurvivalDataset",
    "SurvivalPrediction",
    "UndefinedScoreError",
    "WeibullAftModel",
    "acceleration_factor",
    "backend_name",
    "build_model",
    "compare",
    "covariance",
    "fit",
    "initialize",
    "kaplan_meier",
    "make_knots",
    "nelson_aalen",
    "predict_survival",
    "read_csv",
    "write_csv",
    "__version__",
]
