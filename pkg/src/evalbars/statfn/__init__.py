"""Special functions, distributions and seeded sampling."""

from evalbars.statfn.bivariate import GaussianParams2D, bivariate_normal_cdf
from evalbars.statfn.sampling import (
    RngStream,
    as_generator,
    sample_beta,
    sample_binary,
    sample_dirichlet,
    sample_gamma,
)
from evalbars.statfn.special import (
    beta_quantile,
    betabinom_logpmf,
    log_beta,
    log_gamma,
    reg_inc_beta,
    std_normal_cdf,
    std_normal_quantile,
    student_t_quantile,
)

__all__ = [
    "GaussianParams2D",
    "RngStream",
    "as_generator",
    "beta_quantile",
    "betabinom_logpmf",
    "bivariate_normal_cdf",
    "log_beta",
    "log_gamma",
    "reg_inc_beta",
    "sample_beta",
    "sample_binary",
    "sample_dirichlet",
    "sample_gamma",
    "std_normal_cdf",
    "std_normal_quantile",
    "student_t_quantile",
]
