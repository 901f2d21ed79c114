"""Stint-level regularized adjusted plus-minus (RAPM).

Parse mirrored stint files, build the separated offense/defense design,
solve the possession-weighted ridge regression with a Gaussian posterior,
and audit the inputs along the way.
"""
from .design import RidgeSystem, StintEncoder, build_system
from .exceptions import ConfigError, EstimationError, IntegrityError, ParameterError, ParseError, RapmError
from .lambdas import compare_lambdas, coverage_scaled_lambda, cross_validated_lambda
from .pooling import PlayerSeasonKey, aggregate_rapm, pool_seasons
from .ridge import RidgeRAPM, extract_rapm, fit_ridge, posterior_covariance, residual_variance, solve
from .stint_io import SeasonDataset, StintRecord, parse_stint_file, write_stint_file

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "EstimationError", "IntegrityError", "ParameterError", "ParseError", "RapmError",
    "PlayerSeasonKey", "RidgeRAPM", "RidgeSystem", "SeasonDataset", "StintEncoder", "StintRecord",
    "aggregate_rapm", "build_system", "compare_lambdas", "coverage_scaled_lambda",
    "cross_validated_lambda", "extract_rapm", "fit_ridge", "parse_stint_file", "pool_seasons",
    "posterior_covariance", "residual_variance", "solve", "write_stint_file",
]
