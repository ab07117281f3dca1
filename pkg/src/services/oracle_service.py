"""Oracle Service - High-accuracy Gaussian orthant probabilities for k <= 3.

This module handles:
- Bivariate upper-orthant probabilities by one-dimensional adaptive quadrature
- Trivariate upper-orthant probabilities by conditioning on one coordinate
- Exact FWER for n <= 3 by full inclusion-exclusion

It is the independent reference used to validate the Mill's ratio bounds
and the FWER approximations.

Interface Contract:
- bivariate_upper_orthant(c1, c2, rho, spec) -> float
- trivariate_upper_orthant(c, V, spec) -> float
- upper_orthant(c, V, spec) / lower_orthant(c, V, spec) -> float  (k <= 3)
- exact_fwer_small(model, config, spec) -> float
- All methods raise OracleError subclasses on failure
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from config import INTEGRATION_LIMIT
from src.models import CorrelationModel, TestConfig
from src.services.correlation_service import to_dense
from src.services.gaussian_service import std_normal_pdf, std_normal_sf
from src.services.sampler_service import cholesky

logger = logging.getLogger(__name__)

# Target for the outer integral of the trivariate rule
_TRIVARIATE_ABS_TOL = 1e-10


class OracleError(Exception):
    """Raised when an oracle probability cannot be computed."""
    pass


class DegenerateCorrelationError(OracleError, ValueError):
    """Raised when |rho| = 1."""
    pass


class QuadratureError(OracleError):
    """Raised when adaptive quadrature does not reach its tolerance."""

    def __init__(self, achieved: float, target: float, message: str = ""):
        self.achieved = achieved
        self.target = target
        super().__init__(
            f"quadrature did not converge: achieved error {achieved:.3g}, "
            f"target {target:.3g}. {message}".strip()
        )


class OracleDimensionError(OracleError):
    """Raised for dimensions the oracle does not cover."""
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature tolerances.

    The absolute target is tightened to rel_tol times the independent tail
    product so that deep-tail probabilities keep relative accuracy.
    """
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise OracleError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise OracleError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_subdivisions < 1:
            raise OracleError(f"max_subdivisions must be positive, got {self.max_subdivisions}")


DEFAULT_SPEC = QuadratureSpec()


def _integrate(func, lo: float, hi: float, tail_scale: float, spec: QuadratureSpec,
               points: list[float], abs_tol: float | None = None) -> float:
    """Adaptive quadrature of a non-negative integrand on [lo, hi]."""
    if lo >= hi:
        return 0.0
    limit_abs = spec.abs_tol if abs_tol is None else abs_tol
    epsabs = min(limit_abs, spec.rel_tol * tail_scale)
    breaks = sorted(p for p in points if lo < p < hi) or None
    result = quad(
        func,
        lo,
        hi,
        epsabs=epsabs,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        points=breaks,
        full_output=1,
    )
    value, error = result[0], result[1]
    if len(result) > 3 and error > max(limit_abs, spec.rel_tol * abs(value)):
        logger.warning("[Oracle] Quadrature stopped early: %s", result[3])
        raise QuadratureError(error, epsabs, str(result[3]))
    return max(value, 0.0)


def bivariate_upper_orthant(
    c1: float,
    c2: float,
    rho: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """P(X1 > c1, X2 > c2) for a standard bivariate normal with correlation rho.

    Integrates phi(x) * Phi(-(c2 - rho x) / sqrt(1 - rho^2)) over x > c1,
    always along the coordinate with the larger threshold.

    Raises:
        DegenerateCorrelationError: if |rho| >= 1
        QuadratureError: if the tolerance is not reached
    """
    if not abs(rho) < 1.0:
        raise DegenerateCorrelationError(f"|rho| must be below 1, got {rho}")
    if rho == 0.0:
        return std_normal_sf(c1) * std_normal_sf(c2)
    if c2 > c1:
        c1, c2 = c2, c1
    s = math.sqrt((1.0 - rho) * (1.0 + rho))

    def integrand(x: float) -> float:
        return std_normal_pdf(x) * std_normal_sf((c2 - rho * x) / s)

    lo = max(c1, -INTEGRATION_LIMIT)
    points = [0.0, c2 / rho, c2 * rho]
    return _integrate(integrand, lo, INTEGRATION_LIMIT, std_normal_sf(c1) * std_normal_sf(c2), spec, points)


def _as_correlation(V, k: int) -> np.ndarray:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape != (k, k):
        raise OracleDimensionError(f"expected a {k}x{k} correlation matrix, got {V.shape}")
    return V


def trivariate_upper_orthant(c, V, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """P(X > c) for X ~ N_3(0, V) by conditioning on the coordinate with the largest threshold.

    Raises:
        FactorizationError: if V is not positive definite
        DegenerateCorrelationError: if a conditional law is degenerate
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape != (3,):
        raise OracleDimensionError(f"expected 3 thresholds, got {c.shape}")
    V = _as_correlation(V, 3)
    cholesky(V)
    order = [int(i) for i in np.argsort(-c, kind="stable")]
    c = c[order]
    V = V[np.ix_(order, order)]
    r12, r13, r23 = V[0, 1], V[0, 2], V[1, 2]
    if not (abs(r12) < 1.0 and abs(r13) < 1.0):
        raise DegenerateCorrelationError("conditional law is degenerate")
    s2 = math.sqrt(1.0 - r12 * r12)
    s3 = math.sqrt(1.0 - r13 * r13)
    r_cond = (r23 - r12 * r13) / (s2 * s3)

    def integrand(x: float) -> float:
        return std_normal_pdf(x) * bivariate_upper_orthant(
            (c[1] - r12 * x) / s2,
            (c[2] - r13 * x) / s3,
            r_cond,
            spec,
        )

    lo = max(c[0], -INTEGRATION_LIMIT)
    points = [0.0]
    if r12 != 0.0:
        points.append(c[1] / r12)
    if r13 != 0.0:
        points.append(c[2] / r13)
    tail_scale = std_normal_sf(c[0]) * std_normal_sf(c[1]) * std_normal_sf(c[2])
    return _integrate(
        integrand,
        lo,
        INTEGRATION_LIMIT,
        tail_scale,
        spec,
        points,
        abs_tol=max(spec.abs_tol, _TRIVARIATE_ABS_TOL),
    )


def upper_orthant(c, V, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """P(X > c) for X ~ N_k(0, V), k <= 3."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    k = c.shape[0]
    V = _as_correlation(V, k)
    if k == 1:
        return std_normal_sf(float(c[0]))
    if k == 2:
        return bivariate_upper_orthant(float(c[0]), float(c[1]), float(V[0, 1]), spec)
    if k == 3:
        return trivariate_upper_orthant(c, V, spec)
    raise OracleDimensionError(f"orthant oracle covers k <= 3, got k={k}")


def lower_orthant(c, V, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """P(X <= c) = P(-X >= -c); -X has the same correlation matrix."""
    return upper_orthant(-np.atleast_1d(np.asarray(c, dtype=float)), V, spec)


def exact_fwer_small(
    model: CorrelationModel,
    config: TestConfig,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Exact FWER for n <= 3 by full inclusion-exclusion over all 2^n - 1 subsets.

    Raises:
        OracleDimensionError: if n > 3 (use Monte Carlo estimation instead)
    """
    n = model.n
    if n > 3:
        raise OracleDimensionError(
            f"exact FWER covers n <= 3, got n={n}; use estimate_fwer_mc for larger n"
        )
    if n != config.n:
        raise OracleDimensionError(f"model dimension {n} does not match config n={config.n}")
    sigma = to_dense(model)
    total = 0.0
    for size in range(1, n + 1):
        sign = 1.0 if size % 2 == 1 else -1.0
        for subset in itertools.combinations(range(n), size):
            idx = list(subset)
            total += sign * upper_orthant(np.full(size, config.c), sigma[np.ix_(idx, idx)], spec)
    logger.debug("[Oracle] Exact FWER for n=%d, c=%.6g: %.17g", n, config.c, total)
    return total
