"""Correlation Service - Structured correlation matrices.

This module handles:
- Building identity, equicorrelated, block-equicorrelated and nearly
  independent correlation models
- Positive-definiteness checks from closed-form eigenvalues
- Off-diagonal summary statistics (mean, RMS, mean absolute, max absolute)
  computed from structure without dense storage
- Dense materialization for small dimensions

Interface Contract:
- build_*(...) -> CorrelationModel
- model_from_dict(data) -> CorrelationModel (validated like the builders)
- mean_offdiag / rms_offdiag / mean_abs_offdiag / max_abs_offdiag(model) -> float
- to_dense(model) -> np.ndarray
- All methods raise CorrelationModelError subclasses on failure
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from config import DENSE_LIMIT
from src.models import CorrelationModel, ModelKind


class CorrelationModelError(Exception):
    """Raised when a correlation model cannot be built or queried."""
    pass


class InvalidDimensionError(CorrelationModelError, ValueError):
    """Raised for a non-positive dimension or block size."""
    pass


class NotPositiveDefiniteError(CorrelationModelError, ValueError):
    """Raised when the implied matrix would not be positive definite."""
    pass


class UndefinedStatisticError(CorrelationModelError):
    """Raised when an off-diagonal statistic is requested for n < 2."""
    pass


class DenseTooLargeError(CorrelationModelError):
    """Raised when a dense matrix above the configured limit is requested."""
    pass


def _check_dimension(value: int, name: str) -> int:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise InvalidDimensionError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _check_equicorrelation(size: int, rho: float) -> float:
    """Eigenvalues of M_size(rho) are 1 - rho and 1 + (size - 1) rho."""
    if not math.isfinite(rho):
        raise NotPositiveDefiniteError(f"correlation must be finite, got {rho!r}")
    if size == 1:
        return float(rho)
    if not (1.0 - rho > 0.0 and 1.0 + (size - 1) * rho > 0.0):
        raise NotPositiveDefiniteError(
            f"rho={rho} outside the positive-definite range "
            f"(-1/{size - 1}, 1) for blocks of size {size}"
        )
    return float(rho)


def build_identity(n: int) -> CorrelationModel:
    """Identity correlation of dimension n."""
    return CorrelationModel(kind=ModelKind.IDENTITY, n=_check_dimension(n, "n"))


def build_equicorrelated(n: int, rho: float) -> CorrelationModel:
    """Equicorrelation matrix M_n(rho)."""
    n = _check_dimension(n, "n")
    rho = _check_equicorrelation(n, rho)
    return CorrelationModel(kind=ModelKind.EQUICORRELATED, n=n, rho=rho, block_size=n)


def build_block_equicorrelated(block_size: int, num_blocks: int, rho: float) -> CorrelationModel:
    """Block-diagonal matrix with ``num_blocks`` copies of M_block_size(rho).

    Blocks of size 1 carry no correlation and collapse to the identity;
    a single block is the plain equicorrelated model.
    """
    block_size = _check_dimension(block_size, "block_size")
    num_blocks = _check_dimension(num_blocks, "num_blocks")
    if block_size == 1:
        return build_identity(num_blocks)
    if num_blocks == 1:
        return build_equicorrelated(block_size, rho)
    rho = _check_equicorrelation(block_size, rho)
    return CorrelationModel(
        kind=ModelKind.BLOCK_EQUICORRELATED,
        n=block_size * num_blocks,
        rho=rho,
        block_size=block_size,
    )


def nearly_independent_delta(n: int, beta: float, scale: float = 1.0) -> float:
    """Off-diagonal magnitude scale * n^(-beta)."""
    return float(scale) * float(n) ** (-float(beta))


def build_nearly_independent(n: int, beta: float, scale: float = 1.0) -> CorrelationModel:
    """Nearly independent model realized as equicorrelation with delta = scale * n^(-beta)."""
    n = _check_dimension(n, "n")
    if not (math.isfinite(beta) and beta > 0):
        raise InvalidDimensionError(f"beta must be a positive real, got {beta!r}")
    if not (math.isfinite(scale) and scale > 0):
        raise InvalidDimensionError(f"scale must be a positive real, got {scale!r}")
    delta = nearly_independent_delta(n, beta, scale)
    if delta >= 1.0:
        raise NotPositiveDefiniteError(
            f"delta = {scale} * {n}^(-{beta}) = {delta} is not below 1"
        )
    return CorrelationModel(
        kind=ModelKind.NEARLY_INDEPENDENT,
        n=n,
        rho=delta,
        block_size=n,
        beta=float(beta),
        scale=float(scale),
    )


def model_from_dict(data: dict[str, Any]) -> CorrelationModel:
    """Rebuild a model from its to_dict() form, re-validated by the builders.

    Raises:
        CorrelationModelError: if the record is malformed or describes an invalid matrix
    """
    try:
        record = CorrelationModel.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidDimensionError(f"malformed correlation model record: {exc}") from exc
    if record.kind is ModelKind.IDENTITY:
        return build_identity(record.n)
    if record.kind is ModelKind.EQUICORRELATED:
        return build_equicorrelated(record.n, record.rho)
    if record.kind is ModelKind.BLOCK_EQUICORRELATED:
        if "block_size" not in data:
            raise InvalidDimensionError("block record needs block_size")
        if record.block_size < 1 or record.n % record.block_size:
            raise InvalidDimensionError(
                f"n={record.n} is not a multiple of block_size={record.block_size}"
            )
        return build_block_equicorrelated(record.block_size, record.n // record.block_size, record.rho)
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (record.beta, record.scale)):
        raise InvalidDimensionError("nearly independent record needs numeric beta and scale")
    return build_nearly_independent(record.n, float(record.beta), float(record.scale))


def offdiag(model: CorrelationModel) -> float:
    """The structural off-diagonal value (rho, or delta for nearly independent)."""
    return 0.0 if model.kind is ModelKind.IDENTITY else model.rho


def _correlated_fraction(model: CorrelationModel) -> float:
    """Share of the n(n-1) ordered off-diagonal pairs that lie inside a block."""
    if model.n < 2:
        raise UndefinedStatisticError(
            f"off-diagonal statistics need n >= 2, got n={model.n}"
        )
    if model.kind is ModelKind.IDENTITY:
        return 0.0
    return (model.group_size - 1) / (model.n - 1)


def mean_offdiag(model: CorrelationModel) -> float:
    """Mean of the n(n-1) off-diagonal entries."""
    return _correlated_fraction(model) * offdiag(model)


def mean_abs_offdiag(model: CorrelationModel) -> float:
    """Mean of the absolute off-diagonal entries."""
    return _correlated_fraction(model) * abs(offdiag(model))


def rms_offdiag(model: CorrelationModel) -> float:
    """Root of the mean squared off-diagonal entry."""
    return math.sqrt(_correlated_fraction(model) * offdiag(model) ** 2)


def max_abs_offdiag(model: CorrelationModel) -> float:
    """Largest absolute off-diagonal entry."""
    _correlated_fraction(model)
    return abs(offdiag(model)) if model.group_size > 1 else 0.0


def equicorrelation_block(size: int, rho: float) -> np.ndarray:
    """Dense M_size(rho)."""
    return np.full((size, size), rho, dtype=float) + (1.0 - rho) * np.eye(size)


def to_dense(model: CorrelationModel, *, dense_limit: int | None = None) -> np.ndarray:
    """Materialize the n x n correlation matrix.

    Raises:
        DenseTooLargeError: if n exceeds ``dense_limit`` (default FWER_DENSE_LIMIT)
    """
    limit = DENSE_LIMIT if dense_limit is None else dense_limit
    if model.n > limit:
        raise DenseTooLargeError(
            f"dense matrix of dimension {model.n} exceeds the limit {limit}"
        )
    if model.kind is ModelKind.IDENTITY:
        return np.eye(model.n)
    block = equicorrelation_block(model.group_size, model.rho)
    return np.kron(np.eye(model.num_blocks), block)
