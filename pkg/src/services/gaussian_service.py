"""Gaussian Service - Standard normal special functions and the Bonferroni cutoff.

This module handles:
- Standard normal density, CDF, upper tail and quantiles
- The Bonferroni cutoff c = Phi^{-1}(1 - alpha/n)

Interface Contract:
- std_normal_pdf / std_normal_cdf / std_normal_sf(x) -> float
- std_normal_quantile(p) / std_normal_isf(q) -> float
- bonferroni_cutoff(n, alpha) -> TestConfig
- Domain violations raise DomainError
"""

from __future__ import annotations

import math

from scipy import special

from config import DEFAULT_K, MAX_K, MIN_K
from src.models import TestConfig

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_NEWTON_STEPS = 2


class GaussianError(Exception):
    """Raised when a normal special function cannot be evaluated."""
    pass


class DomainError(GaussianError, ValueError):
    """Raised when an argument lies outside the function's domain."""
    pass


def std_normal_pdf(x: float) -> float:
    """Standard normal density."""
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def std_normal_cdf(x: float) -> float:
    """Phi(x); the lower tail is evaluated through erfc so it keeps relative accuracy."""
    return float(special.ndtr(x))


def std_normal_sf(x: float) -> float:
    """Upper tail Phi(-x) without cancellation."""
    return float(special.ndtr(-x))


def _check_probability(p: float, name: str) -> None:
    if not (0.0 < p < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {p!r}")


def _refine(x: float, target: float, tail: float) -> float:
    """Newton steps on the lower tail (x <= 0) where the CDF has full relative accuracy."""
    for _ in range(_NEWTON_STEPS):
        density = std_normal_pdf(x)
        if density == 0.0 or not math.isfinite(x):
            break
        x -= (tail - target) / density
        tail = std_normal_cdf(x)
    return x


def std_normal_quantile(p: float) -> float:
    """Phi^{-1}(p) for p in (0, 1).

    For p close to 1 the argument itself carries only absolute precision;
    use std_normal_isf on the upper-tail probability instead.
    """
    _check_probability(p, "p")
    if p <= 0.5:
        x = float(special.ndtri(p))
        return _refine(x, p, std_normal_cdf(x))
    # upper half: solve Phi(-x) = 1 - p by symmetry
    q = 1.0 - p
    x = float(special.ndtri(q))
    return -_refine(x, q, std_normal_cdf(x))


def std_normal_isf(q: float) -> float:
    """Upper-tail quantile: the x with Phi(-x) = q."""
    return -std_normal_quantile(q)


def validate_truncation_order(K: int) -> int:
    """K must be an integer in [MIN_K, MAX_K]."""
    if isinstance(K, bool) or int(K) != K or not (MIN_K <= K <= MAX_K):
        raise DomainError(f"K must be an integer in [{MIN_K}, {MAX_K}], got {K!r}")
    return int(K)


def bonferroni_cutoff(n: int, alpha: float, *, K: int = DEFAULT_K) -> TestConfig:
    """Per-test level alpha/n and cutoff c with Phi(-c) = alpha/n.

    Raises:
        DomainError: if alpha is outside (0, 1), n < 1 or K is out of range
    """
    _check_probability(alpha, "alpha")
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    alpha_n = alpha / n
    # alpha_n may underflow to zero for absurdly small alpha; the cutoff is then +inf
    c = std_normal_isf(alpha_n) if alpha_n > 0.0 else math.inf
    return TestConfig(alpha=alpha, n=n, alpha_n=alpha_n, c=c, K=validate_truncation_order(K))


def asymptotic_dimension(alpha: float, c: float) -> float:
    """alpha * sqrt(2 pi) * c * exp(c^2 / 2), the n implied by phi(c) ~ c Phi(-c)."""
    return alpha * _SQRT_2PI * c * math.exp(0.5 * c * c)
