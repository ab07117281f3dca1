"""Table Service - The (beta, alpha) simulation grid.

This module handles:
- Building one TableRow per (beta, alpha) cell: Monte Carlo FWER under the
  nearly independent model, the independence baseline, and the corrected value
- CSV / JSON serialization of the rows

Interface Contract:
- TableService(fwer_service=None).build(run_config) -> list[TableRow]
- rows_to_csv(rows) / rows_to_json(rows) -> str
- Rows are identical for every thread count given the same seed
"""

from __future__ import annotations

import csv
import io
import json
import logging

from src.models import CSV_COLUMNS, RunConfig, TableRow
from src.services.correlation_service import build_nearly_independent, mean_offdiag
from src.services.fwer_service import FwerService, fwer_corrected, fwer_independence
from src.services.gaussian_service import bonferroni_cutoff

logger = logging.getLogger(__name__)


class TableServiceError(Exception):
    """Raised when the table cannot be built."""
    pass


def format_value(value: float | int) -> str:
    """Full-precision text: 17 significant digits for floats."""
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


class TableService:
    """Service for reproducing the simulation table."""

    def __init__(self, fwer_service: FwerService | None = None):
        """Initialize with optional FWER service dependency.

        Args:
            fwer_service: Monte Carlo estimator. If None, one is created per run
                with the run's thread setting.
        """
        self._fwer = fwer_service

    def build(self, run: RunConfig) -> list[TableRow]:
        """One row per (beta, alpha), betas outermost."""
        if run.replications < 1:
            raise TableServiceError(f"replications must be positive, got {run.replications}")
        fwer = self._fwer or FwerService(threads=run.threads)
        rows: list[TableRow] = []
        for beta in run.betas:
            model = build_nearly_independent(run.n, beta, run.scale)
            rho_bar = mean_offdiag(model)
            for alpha in run.alphas:
                config = bonferroni_cutoff(run.n, alpha, K=run.K)
                estimate = fwer.estimate_fwer_mc(model, config, run.replications, run.seed)
                corrected = fwer_corrected(config, rho_bar)
                row = TableRow(
                    beta=beta,
                    alpha=alpha,
                    fwer_mc=estimate.estimate,
                    fwer_independence=fwer_independence(config.n, config.alpha_n),
                    fwer_corrected=corrected.total,
                    std_error=estimate.std_error,
                    replications=estimate.replications,
                    seed=estimate.seed,
                )
                logger.info("[Table] beta=%s alpha=%s -> %s", beta, alpha, row.fwer_mc)
                rows.append(row)
        return rows


def rows_to_csv(rows: list[TableRow]) -> str:
    """CSV with the fixed header and full-precision values."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([format_value(v) for v in row.to_dict().values()])
    return buffer.getvalue()


def rows_from_csv(text: str) -> list[TableRow]:
    """Parse CSV produced by rows_to_csv."""
    return [TableRow.from_dict(record) for record in csv.DictReader(io.StringIO(text))]


def rows_to_json(rows: list[TableRow]) -> str:
    """JSON array of row objects."""
    return json.dumps([row.to_dict() for row in rows], indent=2) + "\n"


def rows_to_preview(rows: list[TableRow], digits: int = 4) -> str:
    """Human-readable table rounded to ``digits`` significant digits."""
    header = ("beta", "alpha", "FWER", "FWER under independence", "FWER with correction")
    lines = [" | ".join(header)]
    for row in rows:
        lines.append(" | ".join(
            format(v, f".{digits}g")
            for v in (row.beta, row.alpha, row.fwer_mc, row.fwer_independence, row.fwer_corrected)
        ))
    return "\n".join(lines) + "\n"
