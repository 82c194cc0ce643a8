from .field import (
    FieldEnsemble,
    InterpolatedField,
    ModelParams,
    gradient_increments,
    interpolate,
    pair,
    pairing_variance,
    pairings_table,
    sample,
)
from .rw1d import (
    ConditionalGaussian,
    PrecisionFit,
    RWParams,
    bridge_coefficient_arrays,
    bridge_coefficients,
    bridge_covariance,
    conditional_covariance,
    cov_SU,
    fit_precision,
    gamma_sigma,
    membrane_det_D,
    membrane_explained_diagonal,
    membrane_increment_bound,
    regime_table,
    simulate_bridge,
    simulate_W,
    var_S,
    var_U,
    var_W,
    var_W_asymptote,
    var_W_series,
)
from .testfunctions import SmoothFunction, function_dict, function_names, get_function

__all__ = [
    "ModelParams",
    "FieldEnsemble",
    "InterpolatedField",
    "sample",
    "interpolate",
    "pair",
    "pairing_variance",
    "pairings_table",
    "gradient_increments",
    "RWParams",
    "ConditionalGaussian",
    "PrecisionFit",
    "gamma_sigma",
    "simulate_W",
    "simulate_bridge",
    "var_W",
    "var_W_series",
    "var_W_asymptote",
    "var_S",
    "var_U",
    "cov_SU",
    "bridge_coefficients",
    "bridge_coefficient_arrays",
    "bridge_covariance",
    "conditional_covariance",
    "membrane_det_D",
    "membrane_explained_diagonal",
    "membrane_increment_bound",
    "fit_precision",
    "regime_table",
    "SmoothFunction",
    "function_dict",
    "function_names",
    "get_function",
]
