"""Simulation table data models.

Pure data structures for the (beta, alpha) table reproduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Any, Literal

from config import DEFAULT_K, DEFAULT_SCALE, DEFAULT_SEED

CSV_COLUMNS = (
    "beta",
    "alpha",
    "fwer_mc",
    "fwer_independence",
    "fwer_corrected",
    "std_error",
    "replications",
    "seed",
)


@dataclass(frozen=True)
class TableRow:
    """One (beta, alpha) cell of the simulation table."""
    beta: float
    alpha: float
    fwer_mc: float
    fwer_independence: float
    fwer_corrected: float
    std_error: float
    replications: int
    seed: int

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary (column order of the CSV header)."""
        return {name: getattr(self, name) for name in CSV_COLUMNS}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TableRow":
        """Create from dictionary; accepts the string values of a parsed CSV row."""
        return cls(
            beta=float(data["beta"]),
            alpha=float(data["alpha"]),
            fwer_mc=float(data["fwer_mc"]),
            fwer_independence=float(data["fwer_independence"]),
            fwer_corrected=float(data["fwer_corrected"]),
            std_error=float(data["std_error"]),
            replications=int(data["replications"]),
            seed=int(data["seed"]),
        )


@dataclass
class RunConfig:
    """Settings of a table run. Defaults reproduce the published simulation grid."""
    n: int = 5000
    betas: list[float] = dataclass_field(default_factory=lambda: [0.4, 0.6, 0.8, 1.0])
    alphas: list[float] = dataclass_field(default_factory=lambda: [0.01, 0.05, 0.1, 0.2])
    replications: int = 10_000
    K: int = DEFAULT_K
    seed: int = DEFAULT_SEED
    scale: float = DEFAULT_SCALE
    output_format: Literal["csv", "json"] = "csv"
    # None defers to the THREADS setting
    threads: int | str | None = None

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return {
            "n": self.n,
            "betas": list(self.betas),
            "alphas": list(self.alphas),
            "replications": self.replications,
            "K": self.K,
            "seed": self.seed,
            "scale": self.scale,
            "output_format": self.output_format,
            "threads": self.threads,
        }
