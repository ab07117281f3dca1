"""Mills Service - Multivariate Mill's ratio bounds on upper-orthant probabilities.

This module handles:
- Orthant problems P(X > a) for X ~ N_k(0, V) with precision M = V^{-1}
- Savage's bounds leading * (1 - correction) < F(a, M) < leading
- The joint upper-tail approximation used under near independence,
  (alpha/n)^k * (1 + (c^2/2) * S) with S the ordered-pair correlation sum

Interface Contract:
- make_orthant_problem(a, V) -> OrthantProblem
- mills_bounds(problem) -> MillsBounds
- joint_tail_approx(k, config, W) -> float
- All methods raise MillsError subclasses or sampler FactorizationError/ShapeError
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.linalg import cho_solve

from config import APPLICABILITY_RHO
from src.models import TestConfig
from src.services.sampler_service import ShapeError, cholesky

logger = logging.getLogger(__name__)


class MillsError(Exception):
    """Raised when a Mill's ratio computation fails."""
    pass


class BoundInapplicableError(MillsError):
    """Raised when some Delta_i <= 0 and Savage's bounds do not apply."""
    pass


class ApproximationRegimeWarning(RuntimeWarning):
    """Emitted when inputs leave the regime an asymptotic approximation assumes."""
    pass


@dataclass(frozen=True)
class OrthantProblem:
    """Threshold a, correlation V, precision M = V^{-1}, Delta = a^T M."""
    a: np.ndarray
    V: np.ndarray
    M: np.ndarray
    Delta: np.ndarray
    log_det_V: float

    @property
    def k(self) -> int:
        return int(self.a.shape[0])


@dataclass(frozen=True)
class MillsBounds:
    """Savage's bounds; lower = leading * (1 - correction), upper = leading."""
    lower: float
    upper: float
    leading: float
    correction: float
    Delta: tuple[float, ...]
    vacuous: bool = False

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return {
            "lower": self.lower,
            "upper": self.upper,
            "leading": self.leading,
            "correction": self.correction,
            "Delta": list(self.Delta),
            "vacuous": self.vacuous,
        }


def make_orthant_problem(a, V) -> OrthantProblem:
    """Precompute the precision matrix and Delta for P(X > a), X ~ N(0, V).

    Raises:
        ShapeError: if a and V disagree in dimension
        FactorizationError: if V is not positive definite
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if a.ndim != 1 or V.shape != (a.shape[0], a.shape[0]):
        raise ShapeError(f"threshold of shape {a.shape} does not match matrix of shape {V.shape}")
    factor = cholesky(V)
    M = cho_solve((factor, True), np.eye(a.shape[0]))
    M = 0.5 * (M + M.T)
    Delta = a @ M
    log_det_V = 2.0 * float(np.sum(np.log(np.diag(factor))))
    return OrthantProblem(a=a, V=V, M=M, Delta=Delta, log_det_V=log_det_V)


def mills_bounds(problem: OrthantProblem) -> MillsBounds:
    """Savage's multivariate Mill's ratio bounds.

    f(a, M) = |M|^(1/2) (2 pi)^(-k/2) exp(-a^T M a / 2) and
    correction = (1/2) sum_ij m_ij (1 + delta_ij) / (Delta_i Delta_j).

    Raises:
        BoundInapplicableError: if some Delta_i <= 0
    """
    Delta = problem.Delta
    if np.any(Delta <= 0.0):
        raise BoundInapplicableError(
            f"Savage's bound needs every Delta_i > 0, got Delta={Delta.tolist()}"
        )
    k = problem.k
    quad = float(problem.a @ problem.M @ problem.a)
    log_leading = (
        -0.5 * problem.log_det_V
        - 0.5 * k * math.log(2.0 * math.pi)
        - 0.5 * quad
        - float(np.sum(np.log(Delta)))
    )
    leading = math.exp(log_leading)
    weights = problem.M * (1.0 + np.eye(k))
    correction = 0.5 * float(np.sum(weights / np.outer(Delta, Delta)))
    vacuous = correction >= 1.0
    if vacuous:
        logger.info("[Mills] Lower bound is vacuous (correction=%.4g)", correction)
        warnings.warn(
            f"Savage lower bound is vacuous: correction {correction:.4g} >= 1",
            ApproximationRegimeWarning,
            stacklevel=2,
        )
    return MillsBounds(
        lower=leading * (1.0 - correction),
        upper=leading,
        leading=leading,
        correction=correction,
        Delta=tuple(float(d) for d in Delta),
        vacuous=vacuous,
    )


def _correlation_block(k: int, W) -> np.ndarray:
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape != (k, k):
        raise ShapeError(f"expected a {k}x{k} correlation matrix, got shape {W.shape}")
    return W


def _check_small_correlations(W: np.ndarray) -> None:
    off = W - np.diag(np.diag(W))
    largest = float(np.max(np.abs(off))) if off.size else 0.0
    if largest > APPLICABILITY_RHO:
        logger.info("[Mills] max |rho| = %.4g exceeds %.2g", largest, APPLICABILITY_RHO)
        warnings.warn(
            f"max |rho| = {largest:.4g} exceeds {APPLICABILITY_RHO}; the first-order "
            "(I - R) expansion may be inaccurate",
            ApproximationRegimeWarning,
            stacklevel=3,
        )


def ordered_pair_sum(W) -> float:
    """Sum of rho_lm over ordered pairs l != m, i.e. 2 * sum_{l<m} rho_lm."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    return float(np.sum(W) - np.trace(W))


def joint_tail_approx(k: int, config: TestConfig, W) -> float:
    """First-order joint tail P(X_i1 > c, ..., X_ik > c) ~ (alpha/n)^k (1 + (c^2/2) S)."""
    if k < 1:
        raise MillsError(f"k must be at least 1, got {k}")
    W = _correlation_block(k, W)
    _check_small_correlations(W)
    S = ordered_pair_sum(W)
    return config.alpha_n**k * (1.0 + 0.5 * config.c**2 * S)


def first_order_delta(c: float, W) -> np.ndarray:
    """Delta_i ~ c (1 - sum_{j != i} rho_ji), from (I + R)^{-1} ~ I - R."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    return c * (1.0 - (W.sum(axis=0) - np.diag(W)))


def joint_tail_leading_term(k: int, config: TestConfig, W) -> float:
    """Exact f(c 1_k, W^{-1}) / prod(Delta) before the first-order expansion."""
    W = _correlation_block(k, W)
    problem = make_orthant_problem(np.full(k, config.c), W)
    return mills_bounds(problem).leading
