"""Data models - Pure data structures with no business logic."""

from .correlation import CorrelationModel, ModelKind
from .procedure import CorrectedFwer, EstimateWithCI, TestConfig
from .table import CSV_COLUMNS, RunConfig, TableRow

__all__ = [
    "CorrelationModel",
    "ModelKind",
    "TestConfig",
    "EstimateWithCI",
    "CorrectedFwer",
    "TableRow",
    "RunConfig",
    "CSV_COLUMNS",
]
