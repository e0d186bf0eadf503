"""Independent component analysis with nonparametric log-concave marginals."""

from .exceptions import (
    DegenerateData,
    DegenerateSample,
    LogconIcaError,
    NonFinite,
    NotGeneralPosition,
    ParseError,
    RankDeficient,
    SingularMatrix,
    StallAtStationary,
)
from .ica import FitConfig, FitResult, IcaModel, fit, log_likelihood, unmix
from .lcmle import LogConcaveDensity, WeightedSample, fit_log_concave
from .metrics import align, amari, tv_distance
from .whiten import WhiteningTransform, fit_whitener, whiten

__version__ = "0.1.0"

__all__ = [
    "DegenerateData",
    "DegenerateSample",
    "FitConfig",
    "FitResult",
    "IcaModel",
    "LogConcaveDensity",
    "LogconIcaError",
    "NonFinite",
    "NotGeneralPosition",
    "ParseError",
    "RankDeficient",
    "SingularMatrix",
    "StallAtStationary",
    "WeightedSample",
    "WhiteningTransform",
    "align",
    "amari",
    "fit",
    "fit_log_concave",
    "fit_whitener",
    "log_likelihood",
    "tv_distance",
    "unmix",
    "whiten",
]
