"""Sampler Service - Reproducible correlated normal vectors.

This module handles:
- Counter-based uniform streams keyed by (seed, stream_id)
- Inverse-CDF standard normal variates
- Structure-aware N(0, Sigma) sampling: one-factor decomposition for
  non-negative equicorrelation, per-block Cholesky factors otherwise
- Cholesky factorization with the failing pivot reported

Interface Contract:
- sample_mvn(model, stream) -> np.ndarray of shape (n,)
- sample_mvn_batch(model, seed, start, count) -> np.ndarray of shape (count, n)
- cholesky(matrix) -> lower-triangular np.ndarray
- Replication r of a batch equals sample_mvn(model, SeededStream(seed, r)) bit for bit
- All methods raise SamplerError subclasses on failure
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from threading import Lock

import numpy as np
from scipy import special
from scipy.linalg import lapack

from config import DENSE_LIMIT
from src.models import CorrelationModel, ModelKind
from src.services.correlation_service import (
    DenseTooLargeError,
    equicorrelation_block,
)

logger = logging.getLogger(__name__)

_UINT64_LIMIT = 2**64
# Philox4x64 emits four 64-bit words per counter increment
_WORDS_PER_COUNTER = 4
_UNIT = 2.0**-53


class SamplerError(Exception):
    """Raised when sampling fails."""
    pass


class FactorizationError(SamplerError):
    """Raised when a matrix is not positive definite."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(
            message or f"matrix is not positive definite: factorization failed at pivot {pivot}"
        )


class ShapeError(SamplerError, ValueError):
    """Raised for non-square or non-symmetric input."""
    pass


@dataclass(frozen=True)
class SeededStream:
    """Identifies one replication's variate stream."""
    seed: int
    stream_id: int

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not (0 <= value < _UINT64_LIMIT):
                raise SamplerError(f"{name} must be a 64-bit unsigned integer, got {value}")


def cholesky(matrix: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T == matrix.

    Raises:
        ShapeError: if the input is not a symmetric square matrix
        FactorizationError: if a pivot is not positive (0-based index reported)
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12):
        raise ShapeError("matrix is not symmetric")
    factor, info = lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise FactorizationError(info - 1)
    if info < 0:
        raise SamplerError(f"dpotrf rejected argument {-info}")
    return factor


@lru_cache(maxsize=64)
def _philox_key(seed: int) -> tuple[int, int]:
    words = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return int(words[0]), int(words[1])


def _key_array(seed: int) -> np.ndarray:
    return np.array(_philox_key(seed), dtype=np.uint64)


def counters_per_replication(draws: int) -> int:
    """Philox counter increments reserved for one replication."""
    return -(-draws // _WORDS_PER_COUNTER)


def standard_normals(seed: int, start: int, count: int, draws: int) -> np.ndarray:
    """Underlying N(0, 1) variates for replications [start, start + count).

    Replication r owns counters [r * S, (r + 1) * S), so any partition of the
    replication range produces the same rows.
    """
    stride = counters_per_replication(draws)
    bitgen = np.random.Philox(key=_key_array(seed), counter=start * stride)
    raw = bitgen.random_raw(count * stride * _WORDS_PER_COUNTER)
    raw = raw.reshape(count, stride * _WORDS_PER_COUNTER)[:, :draws]
    # 53-bit uniforms on the open interval (0, 1)
    uniforms = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _UNIT
    return special.ndtri(uniforms)


class SamplerService:
    """Service for structure-aware multivariate normal sampling."""

    def __init__(self, dense_limit: int | None = None):
        """Initialize with an optional dense limit.

        Args:
            dense_limit: Largest block factorized densely. If None, uses FWER_DENSE_LIMIT.
        """
        self.dense_limit = DENSE_LIMIT if dense_limit is None else dense_limit
        self._factors: dict[tuple[int, float], np.ndarray] = {}
        self._lock = Lock()

    @staticmethod
    def uses_factor_form(model: CorrelationModel) -> bool:
        """Whether the one-factor decomposition applies (it needs sqrt(rho))."""
        return model.kind is not ModelKind.IDENTITY and model.rho >= 0.0

    def draws_per_replication(self, model: CorrelationModel) -> int:
        """Underlying variates consumed by one replication."""
        if self.uses_factor_form(model):
            return model.n + model.num_blocks
        return model.n

    def block_factor(self, size: int, rho: float) -> np.ndarray:
        """Cached Cholesky factor of M_size(rho)."""
        key = (size, rho)
        with self._lock:
            factor = self._factors.get(key)
        if factor is not None:
            return factor
        if size > self.dense_limit:
            raise DenseTooLargeError(
                f"block of size {size} with rho={rho} needs a dense factor "
                f"above the limit {self.dense_limit}"
            )
        logger.debug("[Sampler] Factorizing %dx%d block, rho=%s", size, size, rho)
        factor = cholesky(equicorrelation_block(size, rho))
        with self._lock:
            self._factors[key] = factor
        return factor

    def sample_mvn_batch(
        self,
        model: CorrelationModel,
        seed: int,
        start: int,
        count: int,
    ) -> np.ndarray:
        """Draw replications [start, start + count) as rows of a (count, n) array."""
        if count < 0 or start < 0:
            raise SamplerError(f"invalid replication range start={start}, count={count}")
        SeededStream(seed, start)
        n = model.n
        variates = standard_normals(seed, start, count, self.draws_per_replication(model))
        if model.kind is ModelKind.IDENTITY:
            return variates

        size, blocks = model.group_size, model.num_blocks
        z = variates[:, :n].reshape(count, blocks, size)
        if self.uses_factor_form(model):
            common = variates[:, n:n + blocks]
            x = np.sqrt(1.0 - model.rho) * z + np.sqrt(model.rho) * common[:, :, None]
        else:
            x = z @ self.block_factor(size, model.rho).T
        return x.reshape(count, n)

    def sample_mvn(self, model: CorrelationModel, stream: SeededStream) -> np.ndarray:
        """One N(0, Sigma) vector for the given stream."""
        return self.sample_mvn_batch(model, stream.seed, stream.stream_id, 1)[0]


_default_sampler: SamplerService | None = None


def default_sampler() -> SamplerService:
    """Shared sampler instance."""
    global _default_sampler
    if _default_sampler is None:
        _default_sampler = SamplerService()
    return _default_sampler


def sample_mvn(model: CorrelationModel, stream: SeededStream) -> np.ndarray:
    """Sample with the shared sampler."""
    return default_sampler().sample_mvn(model, stream)
