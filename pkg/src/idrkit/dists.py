"""Probability primitives used throughout the package.

All functions accept scalars or numpy arrays and are vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "BivariateGaussianParams",
    "normal_cdf",
    "normal_quantile",
    "normal_log_pdf",
    "bivariate_normal_density",
    "bivariate_normal_log_density",
    "chisq_survival_even_df",
    "t5_cdf",
    "t5_quantile",
    "bh_adjust",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BivariateGaussianParams:
    """Exchangeable bivariate normal: shared mean/variance, correlation rho."""

    mean: float
    variance: float
    rho: float

    def __post_init__(self):
        if not (self.variance > 0.0):
            raise DomainError(f"variance must be > 0, got {self.variance}")
        if not (abs(self.rho) < 1.0):
            raise DomainError(f"|rho| must be < 1, got {self.rho}")


def normal_cdf(z):
    """Standard normal CDF, accurate to better than 1e-15 in absolute error."""
    return special.ndtr(z)


def normal_quantile(p):
    """Inverse of the standard normal CDF.

    Raises DomainError for p outside the open interval (0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p_arr)) or np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError("normal_quantile requires 0 < p < 1")
    out = special.ndtri(p_arr)
    return out if out.ndim else float(out)


def normal_log_pdf(z):
    z = np.asarray(z, dtype=float)
    return -0.5 * (z * z + _LOG_2PI)


def bivariate_normal_log_density(z1, z2, params: BivariateGaussianParams):
    """Log density of the exchangeable bivariate normal at (z1, z2)."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    s2 = params.variance
    rho = params.rho
    d1 = (z1 - params.mean)
    d2 = (z2 - params.mean)
    one_m_r2 = 1.0 - rho * rho
    quad = (d1 * d1 - 2.0 * rho * d1 * d2 + d2 * d2) / (s2 * one_m_r2)
    return -0.5 * quad - 0.5 * math.log(one_m_r2) - math.log(s2) - _LOG_2PI


def bivariate_normal_density(z1, z2, params: BivariateGaussianParams):
    """Density of the exchangeable bivariate normal at (z1, z2)."""
    out = np.exp(bivariate_normal_log_density(z1, z2, params))
    return out if np.ndim(out) else float(out)


def chisq_survival_even_df(x, df: int):
    """Upper tail probability of a chi-square with even degrees of freedom.

    Uses the closed form exp(-x/2) * sum_{k<df/2} (x/2)^k / k!.
    """
    if df <= 0 or df % 2 != 0:
        raise DomainError(f"df must be a positive even integer, got {df}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0):
        raise DomainError("chisq_survival_even_df requires x >= 0")
    half = x_arr / 2.0
    term = np.ones_like(half)
    total = np.ones_like(half)
    for k in range(1, df // 2):
        term = term * half / k
        total = total + term
    out = np.exp(-half) * total
    return out if out.ndim else float(out)


def t5_cdf(x):
    """CDF of Student's t distribution with 5 degrees of freedom."""
    out = special.stdtr(5, np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def t5_quantile(p):
    """Inverse CDF of Student's t with 5 degrees of freedom."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p_arr)) or np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError("t5_quantile requires 0 < p < 1")
    out = special.stdtrit(5, p_arr)
    return out if out.ndim else float(out)


def bh_adjust(pvalues):
    """Benjamini-Hochberg step-up adjusted p-values.

    Returns values aligned with the input order, each in [0, 1] and monotone
    nondecreasing when re-sorted by raw p-value.
    """
    p = np.asarray(pvalues, dtype=float)
    if p.ndim != 1:
        raise DomainError("bh_adjust expects a 1-D sequence")
    if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise DomainError("p-values must lie in [0, 1]")
    n = p.size
    if n == 0:
        return p.copy()
    order = np.argsort(p, kind="stable")
    ranked = p[order] * n / np.arange(1, n + 1)
    adj = np.minimum.accumulate(ranked[::-1])[::-1]
    adj = np.clip(adj, 0.0, 1.0)
    out = np.empty(n)
    out[order] = adj
    return out
