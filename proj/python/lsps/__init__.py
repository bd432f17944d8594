"""Large-scale propensity score estimation (C++ core)."""

from ._core import (
    ConfigError,
    DataError,
    NumericalError,
    aggregate,
    analyze,
    estimate_ate,
    fit_cox,
    fit_logistic_l1,
    generate_sim1,
    heldout_r2,
    kkt_residual,
    lambda_max,
    preference,
    stratify,
    weighted_smd,
)

__version__ = "0.1.0"
