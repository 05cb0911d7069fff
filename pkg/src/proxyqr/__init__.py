"""Bayesian nonparametric quantile regression with proxy-observed covariates."""

__version__ = "0.1.0"
