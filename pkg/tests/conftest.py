"""测试配置和共享 Fixtures。"""

import numpy as np
import pytest

from src.services.correlation_service import (
    build_block_equicorrelated,
    build_equicorrelated,
    build_identity,
    build_nearly_independent,
)
from src.services.fwer_service import FwerService
from src.services.gaussian_service import bonferroni_cutoff
from src.services.sampler_service import SamplerService


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "slow: large Monte Carlo runs (n = 5000 tables, 10^6+ replications)",
    )


# ============================================================================
# Correlation Models
# ============================================================================

@pytest.fixture
def identity_model():
    """创建 5 维单位相关模型。"""
    return build_identity(5)


@pytest.fixture
def equicorrelated_model():
    """创建 5 维等相关模型 (rho = 0.3)。"""
    return build_equicorrelated(5, 0.3)


@pytest.fixture
def block_model():
    """创建 2 x 3 分块等相关模型 (rho = 0.4)。"""
    return build_block_equicorrelated(2, 3, 0.4)


@pytest.fixture
def negative_model():
    """创建负相关模型（走稠密分解路径）。"""
    return build_equicorrelated(3, -0.3)


@pytest.fixture
def small_models():
    """覆盖所有结构的小维度模型（用于与稠密矩阵对照）。"""
    return [
        build_identity(4),
        build_equicorrelated(7, 0.25),
        build_equicorrelated(6, -0.15),
        build_block_equicorrelated(5, 5, 0.5),
        build_block_equicorrelated(3, 4, -0.2),
        build_nearly_independent(50, 0.6),
    ]


# ============================================================================
# Configurations
# ============================================================================

@pytest.fixture
def config_5000():
    """论文模拟规模: n = 5000, alpha = 0.05。"""
    return bonferroni_cutoff(5000, 0.05)


@pytest.fixture
def config_pair():
    """n = 2, alpha = 0.05 (alpha_n = 0.025)。"""
    return bonferroni_cutoff(2, 0.05)


# ============================================================================
# Service Fixtures
# ============================================================================

@pytest.fixture
def sampler():
    """独立的 SamplerService 实例。"""
    return SamplerService()


@pytest.fixture
def fwer_service(sampler):
    """单线程、大块的 FwerService（适合大量重复）。"""
    return FwerService(sampler, threads=1, chunk_size=50_000)


@pytest.fixture
def simulation_service(sampler):
    """n = 5000 规模的 FwerService（小块、多线程）。"""
    return FwerService(sampler, threads="auto", chunk_size=256)


# ============================================================================
# Test Utilities
# ============================================================================

def within_standard_errors(estimate, expected, replications, k=4.0):
    """判断 MC 估计是否落在 expected 的 k 个标准误以内。"""
    se = np.sqrt(expected * (1.0 - expected) / replications)
    return abs(estimate - expected) <= k * se


def within_pooled_standard_errors(estimate, reference, replications, reference_replications, k=4.0):
    """判断两个独立 MC 估计之差是否落在差值的 k 个标准误以内。"""
    se = np.sqrt(
        estimate * (1.0 - estimate) / replications
        + reference * (1.0 - reference) / reference_replications
    )
    return abs(estimate - reference) <= k * se
