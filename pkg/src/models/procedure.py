"""Bonferroni procedure data models.

Pure data structures for the testing configuration and its results.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any


@dataclass(frozen=True)
class TestConfig:
    """Bonferroni configuration for n one-sided tests at target level alpha."""
    __test__ = False  # not a pytest class

    alpha: float
    n: int
    alpha_n: float
    c: float
    K: int = 15

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)


@dataclass(frozen=True)
class EstimateWithCI:
    """Monte Carlo FWER estimate with its binomial standard error."""
    estimate: float
    std_error: float
    replications: int
    seed: int

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)


@dataclass(frozen=True)
class CorrectedFwer:
    """Independence series plus the mean-correlation correction term."""
    independence_series: float
    correction_term: float
    total: float
    K: int
    rho_bar: float
    c: float

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)
