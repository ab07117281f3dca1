"""FWER of Bonferroni's procedure under nearly independent normal statistics."""

from .models import CorrectedFwer, CorrelationModel, EstimateWithCI, ModelKind, TestConfig
from .services.correlation_service import (
    build_block_equicorrelated,
    build_equicorrelated,
    build_identity,
    build_nearly_independent,
    mean_offdiag,
    model_from_dict,
    rms_offdiag,
    to_dense,
)
from .services.fwer_service import (
    block_lower_bound,
    estimate_fwer_mc,
    fwer_corrected,
    fwer_independence,
)
from .services.gaussian_service import bonferroni_cutoff
from .services.mills_service import joint_tail_approx, make_orthant_problem, mills_bounds
from .services.oracle_service import exact_fwer_small

__all__ = [
    "CorrelationModel",
    "ModelKind",
    "TestConfig",
    "EstimateWithCI",
    "CorrectedFwer",
    "build_identity",
    "build_equicorrelated",
    "build_block_equicorrelated",
    "build_nearly_independent",
    "mean_offdiag",
    "model_from_dict",
    "rms_offdiag",
    "to_dense",
    "bonferroni_cutoff",
    "make_orthant_problem",
    "mills_bounds",
    "joint_tail_approx",
    "estimate_fwer_mc",
    "fwer_independence",
    "fwer_corrected",
    "block_lower_bound",
    "exact_fwer_small",
]
