"""FWER Service - Family-wise error rate of Bonferroni's procedure.

This module handles:
- Monte Carlo FWER estimation under the global null (parallel, seed-reproducible)
- The independence baseline 1 - (1 - alpha_n)^n
- The truncated inclusion-exclusion approximation with its mean-correlation
  correction term, in the limiting and the finite-n form
- The upper bound on FWER for the block-equicorrelated construction
- An indicative size for the first dropped series term

Interface Contract:
- FwerService(sampler=None, threads=None).estimate_fwer_mc(model, config, replications, seed)
  -> EstimateWithCI, identical for every thread count
- fwer_independence(n, alpha_n) -> float
- fwer_corrected(config, rho_bar) -> CorrectedFwer
- block_lower_bound(n_block, alpha, rho) -> float
- All methods raise FwerError or gaussian DomainError on failure
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from config import CHUNK_SIZE, CORRECTION_REGIME_LIMIT, resolve_threads
from src.models import CorrectedFwer, CorrelationModel, EstimateWithCI, TestConfig
from src.services.gaussian_service import DomainError, validate_truncation_order
from src.services.mills_service import ApproximationRegimeWarning

logger = logging.getLogger(__name__)


class FwerError(Exception):
    """Raised when an FWER computation fails."""
    pass


class DimensionMismatchError(FwerError, ValueError):
    """Raised when the model dimension differs from the configured n."""
    pass


# ============================================================================
# Closed forms
# ============================================================================

def fwer_independence(n: int, alpha_n: float) -> float:
    """1 - (1 - alpha_n)^n, evaluated as -expm1(n * log1p(-alpha_n))."""
    if not (0.0 <= alpha_n <= 1.0):
        raise DomainError(f"alpha_n must lie in [0, 1], got {alpha_n}")
    if alpha_n == 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-alpha_n))


def _series_alpha(config: TestConfig) -> float:
    # finite-n evaluation: alpha = n * alpha_n
    return config.n * config.alpha_n


def independence_terms(alpha: float, K: int) -> list[float]:
    """(-1)^(i-1) alpha^i / i! for i = 1..K."""
    return [(-1.0) ** (i - 1) * alpha**i / math.factorial(i) for i in range(1, K + 1)]


def independence_partial_sums(alpha: float, K: int) -> list[float]:
    """Partial sums of the independence series; consecutive ones bracket 1 - e^(-alpha)."""
    sums, running = [], []
    for term in independence_terms(alpha, K):
        running.append(term)
        sums.append(math.fsum(running))
    return sums


def _correction_series(alpha: float, K: int) -> float:
    """sum_{i=2}^{K} (-1)^(i-1) alpha^i / (i-2)!"""
    return math.fsum(
        (-1.0) ** (i - 1) * alpha**i / math.factorial(i - 2) for i in range(2, K + 1)
    )


def _check_regime(config: TestConfig, rho_bar: float) -> None:
    strength = 0.5 * config.c**2 * abs(rho_bar)
    if strength > CORRECTION_REGIME_LIMIT:
        logger.info("[FWER] c^2 |rho_bar| / 2 = %.4g outside the small-correlation regime", strength)
        warnings.warn(
            f"c^2 |rho_bar| / 2 = {strength:.4g} exceeds {CORRECTION_REGIME_LIMIT}; "
            "the first-order correction may be unreliable",
            ApproximationRegimeWarning,
            stacklevel=3,
        )


def correction_term(config: TestConfig, rho_bar: float) -> float:
    """(c^2 rho_bar / 2) * sum_{i=2}^{K} (-1)^(i-1) alpha^i / (i-2)!

    Tends to -(c^2 rho_bar / 2) alpha^2 e^(-alpha) as K grows, so it is
    negative whenever rho_bar > 0.
    """
    K = validate_truncation_order(config.K)
    _check_regime(config, rho_bar)
    return 0.5 * config.c**2 * rho_bar * _correction_series(_series_alpha(config), K)


def fwer_corrected(config: TestConfig, rho_bar: float) -> CorrectedFwer:
    """Truncated inclusion-exclusion approximation with mean-correlation correction."""
    K = validate_truncation_order(config.K)
    independence = math.fsum(independence_terms(_series_alpha(config), K))
    correction = correction_term(config, rho_bar)
    return CorrectedFwer(
        independence_series=independence,
        correction_term=correction,
        total=independence + correction,
        K=K,
        rho_bar=rho_bar,
        c=config.c,
    )


def fwer_corrected_finite_n(config: TestConfig, rho_bar: float) -> CorrectedFwer:
    """Finite-n form before the binomials are replaced by their limits.

    sum_{i=1}^{K} (-1)^(i-1) C(n, i) alpha_n^i
      + (c^2 / 2) n (n - 1) rho_bar sum_{i=2}^{K} (-1)^(i-1) alpha_n^i C(n - 2, i - 2)
    """
    K = validate_truncation_order(config.K)
    _check_regime(config, rho_bar)
    n, p = config.n, config.alpha_n
    independence = math.fsum(
        (-1.0) ** (i - 1) * math.comb(n, i) * p**i for i in range(1, min(K, n) + 1)
    )
    pair_series = math.fsum(
        (-1.0) ** (i - 1) * math.comb(n - 2, i - 2) * p**i for i in range(2, min(K, n) + 1)
    )
    correction = 0.5 * config.c**2 * n * (n - 1) * rho_bar * pair_series
    return CorrectedFwer(
        independence_series=independence,
        correction_term=correction,
        total=independence + correction,
        K=K,
        rho_bar=rho_bar,
        c=config.c,
    )


def tail_remainder_estimate(config: TestConfig) -> float:
    """alpha^(K+1) / (K+1)!, the first independence-series term left out.

    Indicative only: the dropped joint-probability tail is not bounded.
    """
    K = validate_truncation_order(config.K)
    return _series_alpha(config) ** (K + 1) / math.factorial(K + 1)


def block_lower_bound(n_block: int, alpha: float, rho: float) -> float:
    """Upper bound on FWER for n_block blocks of M_n_block(rho) at alpha_n = alpha / n_block^2.

    Returns 1 - (1 - a)^n [1 - (1 - rho)(1 - (1 - a)^(n-1))]^n with a = alpha / n^2,
    the complement of the lower bound on 1 - FWER.
    """
    if isinstance(n_block, bool) or int(n_block) != n_block or n_block < 1:
        raise DomainError(f"n_block must be a positive integer, got {n_block!r}")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not (0.0 <= rho <= 1.0):
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    n = int(n_block)
    log_q = math.log1p(-alpha / n**2)
    # 1 - (1 - a)^(n-1)
    spread = -math.expm1((n - 1) * log_q)
    log_survival = n * log_q + n * math.log1p(-(1.0 - rho) * spread)
    return -math.expm1(log_survival)


def block_bound_limit(alpha: float, rho: float) -> float:
    """n -> infinity limit of block_lower_bound: 1 - e^(-alpha (1 - rho))."""
    return -math.expm1(-alpha * (1.0 - rho))


# ============================================================================
# Monte Carlo
# ============================================================================

class FwerService:
    """Service for Monte Carlo FWER estimation."""

    def __init__(self, sampler=None, *, threads: int | str | None = None, chunk_size: int | None = None):
        """Initialize with optional sampler dependency.

        Args:
            sampler: Sampler service. If None, uses the shared default.
            threads: Worker threads or "auto". If None, uses the THREADS setting.
            chunk_size: Replications per work unit. If None, uses FWER_CHUNK_SIZE.
        """
        self._sampler = sampler
        try:
            self.threads = resolve_threads(threads)
        except ValueError as exc:
            raise FwerError(f"invalid thread setting: {exc}") from exc
        self.chunk_size = CHUNK_SIZE if chunk_size is None else int(chunk_size)
        if self.chunk_size < 1:
            raise FwerError(f"chunk_size must be positive, got {self.chunk_size}")

    @property
    def sampler(self):
        """Lazy load sampler service."""
        if self._sampler is None:
            from src.services.sampler_service import default_sampler
            self._sampler = default_sampler()
        return self._sampler

    def _chunks(self, replications: int) -> list[tuple[int, int]]:
        return [
            (start, min(self.chunk_size, replications - start))
            for start in range(0, replications, self.chunk_size)
        ]

    def _count_exceedances(
        self,
        model: CorrelationModel,
        cutoff: float,
        seed: int,
        chunk: tuple[int, int],
    ) -> int:
        start, count = chunk
        x = self.sampler.sample_mvn_batch(model, seed, start, count)
        # one-sided: reject H_0i when X_i > c
        return int(np.count_nonzero(x.max(axis=1) > cutoff))

    def estimate_fwer_mc(
        self,
        model: CorrelationModel,
        config: TestConfig,
        replications: int,
        seed: int,
    ) -> EstimateWithCI:
        """Share of replications in which some X_i exceeds the cutoff.

        Raises:
            DimensionMismatchError: if model.n differs from config.n
            FwerError: if replications is not positive
        """
        if model.n != config.n:
            raise DimensionMismatchError(
                f"model dimension {model.n} does not match config n={config.n}"
            )
        if isinstance(replications, bool) or int(replications) != replications or replications < 1:
            raise FwerError(f"replications must be a positive integer, got {replications!r}")
        replications = int(replications)
        chunks = self._chunks(replications)
        logger.info(
            "[FWER] Estimating %s n=%d c=%.6g: %d replications in %d chunks on %d threads",
            model.kind.value, model.n, config.c, replications, len(chunks), self.threads,
        )

        def work(chunk: tuple[int, int]) -> int:
            return self._count_exceedances(model, config.c, seed, chunk)

        if self.threads == 1 or len(chunks) == 1:
            hits = sum(work(chunk) for chunk in chunks)
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                hits = sum(pool.map(work, chunks))

        estimate = hits / replications
        std_error = math.sqrt(estimate * (1.0 - estimate) / replications)
        return EstimateWithCI(
            estimate=estimate,
            std_error=std_error,
            replications=replications,
            seed=seed,
        )


def estimate_fwer_mc(
    model: CorrelationModel,
    config: TestConfig,
    replications: int,
    seed: int,
    *,
    threads: int | str | None = None,
) -> EstimateWithCI:
    """Estimate with a default FwerService."""
    return FwerService(threads=threads).estimate_fwer_mc(model, config, replications, seed)
