"""Correlation structure data models.

Pure data structures with no business logic.
Construction and validation live in ``src.services.correlation_service``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any


class ModelKind(Enum):
    """Supported correlation structures."""
    IDENTITY = "identity"
    EQUICORRELATED = "equicorrelated"
    BLOCK_EQUICORRELATED = "block"
    NEARLY_INDEPENDENT = "nearly-independent"


@dataclass(frozen=True)
class CorrelationModel:
    """Structured description of a correlation matrix.

    ``rho`` holds the off-diagonal value of an equicorrelated matrix or of
    each diagonal block; for the nearly independent kind it holds the realized
    delta = scale * n^(-beta).
    """
    kind: ModelKind
    n: int
    rho: float = 0.0
    block_size: int = 1
    beta: float | None = None
    scale: float | None = None

    @property
    def num_blocks(self) -> int:
        """Number of diagonal blocks (1 for a single equicorrelated block)."""
        if self.kind is ModelKind.BLOCK_EQUICORRELATED:
            return self.n // self.block_size
        if self.kind is ModelKind.IDENTITY:
            return self.n
        return 1

    @property
    def group_size(self) -> int:
        """Size of each block of mutually correlated coordinates."""
        if self.kind is ModelKind.IDENTITY:
            return 1
        if self.kind is ModelKind.BLOCK_EQUICORRELATED:
            return self.block_size
        return self.n

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        data: dict[str, Any] = {"kind": self.kind.value, "n": self.n, "rho": self.rho}
        if self.kind is ModelKind.BLOCK_EQUICORRELATED:
            data["block_size"] = self.block_size
            data["num_blocks"] = self.num_blocks
        if self.kind is ModelKind.NEARLY_INDEPENDENT:
            data["beta"] = self.beta
            data["scale"] = self.scale
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CorrelationModel":
        """Create from dictionary (no validation; use the service builders for that)."""
        return cls(
            kind=ModelKind(data.get("kind", ModelKind.IDENTITY.value)),
            n=int(data["n"]),
            rho=float(data.get("rho", 0.0)),
            block_size=int(data.get("block_size", 1)),
            beta=data.get("beta"),
            scale=data.get("scale"),
        )
