"""fwer_service 单元测试。

测试覆盖:
- 独立情形基准值
- 截断容斥近似与平均相关修正项（与模拟表格对照）
- 分块等相关构造的上界
- Monte Carlo 估计（可复现性、线程不变性、与精确值对照）
"""

import math
import warnings

import pytest

import config as config_module

from src.models import EstimateWithCI, TestConfig
from src.services.correlation_service import (
    build_block_equicorrelated,
    build_equicorrelated,
    build_identity,
    build_nearly_independent,
    nearly_independent_delta,
)
from src.services.fwer_service import (
    DimensionMismatchError,
    FwerError,
    FwerService,
    block_bound_limit,
    block_lower_bound,
    correction_term,
    estimate_fwer_mc,
    fwer_corrected,
    fwer_corrected_finite_n,
    fwer_independence,
    independence_partial_sums,
    tail_remainder_estimate,
)
from src.services.gaussian_service import DomainError, bonferroni_cutoff
from src.services.mills_service import ApproximationRegimeWarning
from src.services.oracle_service import exact_fwer_small

from .conftest import within_pooled_standard_errors, within_standard_errors

# (alpha, beta) -> "FWER with correction" as printed for n = 5000, K = 15
PUBLISHED_CORRECTED = {
    (0.01, 0.4): 0.00993, (0.01, 0.6): 0.00995, (0.01, 0.8): 0.00995, (0.01, 1.0): 0.00995,
    (0.05, 0.4): 0.0484, (0.05, 0.6): 0.0487, (0.05, 0.8): 0.0488, (0.05, 1.0): 0.0488,
    (0.1, 0.4): 0.0934, (0.1, 0.6): 0.095, (0.1, 0.8): 0.0951, (0.1, 1.0): 0.0952,
}

# cells the unit magnitude constant misses by more than the printed precision
SCALE_SENSITIVE = {(0.05, 0.4), (0.1, 0.4), (0.1, 0.6)}

# (alpha, beta) -> Monte Carlo "FWER" as printed (10,000 replications each)
PUBLISHED_MC = {
    (0.01, 0.4): 0.0121, (0.01, 0.6): 0.011, (0.01, 0.8): 0.0108, (0.01, 1.0): 0.0089,
    (0.05, 0.4): 0.0543, (0.05, 0.6): 0.0475, (0.05, 0.8): 0.0422, (0.05, 1.0): 0.0495,
    (0.1, 0.4): 0.1077, (0.1, 0.6): 0.0901, (0.1, 0.8): 0.0967, (0.1, 1.0): 0.0983,
}

# positive equicorrelation keeps FWER below independence (0.0952 at alpha = 0.1), and 0.1077
# lies 4 standard errors above that; seed 42 lands (0.05, 0.8) at +4.97 standard errors
PUBLISHED_MC_OUTLIERS = {(0.1, 0.4), (0.05, 0.8)}


class TestFwerIndependence:
    """测试 fwer_independence()。"""

    @pytest.mark.parametrize("alpha, printed, tol", [
        (0.01, 0.00995, 5e-6),
        (0.05, 0.0487, 1e-4),
        (0.1, 0.0952, 1e-4),
    ])
    def test_published_baselines(self, alpha, printed, tol):
        """测试 n = 5000 时的独立基准值。"""
        assert fwer_independence(5000, alpha / 5000) == pytest.approx(printed, abs=tol)

    def test_fourth_level(self):
        """测试 alpha = 0.2 时为 0.1813（而非印刷的 0.0181）。"""
        assert fwer_independence(5000, 0.2 / 5000) == pytest.approx(0.1813, abs=5e-5)

    def test_single_hypothesis(self):
        """测试 n = 1 时等于 alpha_n。"""
        assert fwer_independence(1, 0.3) == pytest.approx(0.3, rel=1e-15)

    def test_boundaries(self):
        """测试 alpha_n = 0 与 1。"""
        assert fwer_independence(100, 0.0) == 0.0
        assert fwer_independence(100, 1.0) == 1.0

    @pytest.mark.parametrize("alpha_n", [-0.1, 1.2])
    def test_domain(self, alpha_n):
        """测试 alpha_n 超出 [0, 1] 时报错。"""
        with pytest.raises(DomainError):
            fwer_independence(10, alpha_n)


class TestCorrectedFwer:
    """测试截断容斥近似与修正项。"""

    def test_zero_correlation(self, config_5000):
        """测试 rho_bar = 0 时为 1 - e^{-alpha}。"""
        result = fwer_corrected(config_5000, 0.0)

        assert result.correction_term == 0.0
        assert result.total == pytest.approx(-math.expm1(-0.05), abs=1e-12)
        assert result.total == pytest.approx(0.0487706, abs=1e-7)
        assert result.K == 15

    @pytest.mark.parametrize("alpha, beta", sorted(PUBLISHED_CORRECTED))
    def test_published_cells_fitted_scale(self, alpha, beta):
        """测试 scale = 0.7 时 12 个格子都在 2e-4 以内。"""
        config = bonferroni_cutoff(5000, alpha)
        rho_bar = nearly_independent_delta(5000, beta, 0.7)

        total = fwer_corrected(config, rho_bar).total

        assert total == pytest.approx(PUBLISHED_CORRECTED[(alpha, beta)], abs=2e-4)

    @pytest.mark.parametrize("alpha, beta", sorted(set(PUBLISHED_CORRECTED) - SCALE_SENSITIVE))
    def test_published_cells_unit_scale(self, alpha, beta):
        """测试 scale = 1 时其余 9 个格子在 2e-4 以内。"""
        config = bonferroni_cutoff(5000, alpha)
        rho_bar = nearly_independent_delta(5000, beta)

        total = fwer_corrected(config, rho_bar).total

        assert total == pytest.approx(PUBLISHED_CORRECTED[(alpha, beta)], abs=2e-4)

    def test_unit_scale_misses_strongest_cell(self):
        """测试 scale = 1 时 (alpha=0.1, beta=0.4) 偏离超过 2e-4。"""
        config = bonferroni_cutoff(5000, 0.1)

        total = fwer_corrected(config, nearly_independent_delta(5000, 0.4)).total

        assert abs(total - 0.0934) > 2e-4

    def test_correction_example(self):
        """测试 c = 4.6114, rho_bar = 0.006034, alpha = 0.01 时修正项约 -6.35e-6。"""
        config = TestConfig(alpha=0.01, n=5000, alpha_n=2e-6, c=4.6114, K=15)

        assert correction_term(config, 0.006034) == pytest.approx(-6.35e-6, abs=2e-8)

    @pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1, 0.2])
    def test_series_limits(self, alpha):
        """测试 K = 30 时两个级数与闭式极限一致。"""
        config = bonferroni_cutoff(5000, alpha, K=30)
        a = config.n * config.alpha_n
        rho_bar = 1e-3

        result = fwer_corrected(config, rho_bar)
        limit = -(config.c**2 * rho_bar / 2.0) * a**2 * math.exp(-a)

        assert result.independence_series == pytest.approx(-math.expm1(-a), rel=1e-13)
        assert result.correction_term == pytest.approx(limit, rel=1e-13)

    @pytest.mark.parametrize("alpha", [0.01, 0.2, 0.5, 0.9])
    @pytest.mark.parametrize("K", [2, 3, 15])
    def test_correction_negative(self, alpha, K):
        """测试 rho_bar > 0 时修正项为负。"""
        config = TestConfig(alpha=alpha, n=1000, alpha_n=alpha / 1000, c=3.0, K=K)

        assert correction_term(config, 1e-3) < 0.0

    @pytest.mark.parametrize("alpha", [0.1, 0.2, 0.5])
    def test_partial_sums_bracket_limit(self, alpha):
        """测试相邻部分和夹住 1 - e^{-alpha}。"""
        limit = -math.expm1(-alpha)
        sums = independence_partial_sums(alpha, 5)

        for lower_k in range(3):
            assert (sums[lower_k] - limit) * (sums[lower_k + 1] - limit) < 0.0

    def test_regime_warning(self):
        """测试 c^2 |rho_bar| / 2 > 0.5 时告警。"""
        config = TestConfig(alpha=0.01, n=5000, alpha_n=2e-6, c=4.6114, K=15)

        with pytest.warns(ApproximationRegimeWarning):
            fwer_corrected(config, 0.1)

    def test_no_warning_in_regime(self, config_5000):
        """测试小相关时不告警。"""
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            fwer_corrected(config_5000, 2e-4)

    def test_invalid_truncation(self):
        """测试 K 超出范围时报错。"""
        config = TestConfig(alpha=0.05, n=10, alpha_n=0.005, c=2.5758, K=1)

        with pytest.raises(DomainError):
            fwer_corrected(config, 0.0)

    def test_finite_n_independence(self, config_5000):
        """测试有限 n 形式在 rho_bar = 0 时接近 1 - (1 - alpha_n)^n。"""
        result = fwer_corrected_finite_n(config_5000, 0.0)

        assert result.independence_series == pytest.approx(
            fwer_independence(config_5000.n, config_5000.alpha_n), abs=1e-14
        )

    def test_finite_n_correction_close_to_limit(self, config_5000):
        """测试 n = 5000 时有限 n 修正项与极限形式相对差 < 1e-3。"""
        finite = fwer_corrected_finite_n(config_5000, 2e-4).correction_term
        limit = fwer_corrected(config_5000, 2e-4).correction_term

        assert finite == pytest.approx(limit, rel=1e-3)

    def test_finite_n_small_dimension(self):
        """测试 n < K 时级数在 n 处截止。"""
        config = bonferroni_cutoff(3, 0.05)

        result = fwer_corrected_finite_n(config, 0.0)

        assert result.independence_series == pytest.approx(1.0 - (1.0 - config.alpha_n) ** 3, abs=1e-15)


class TestTailRemainder:
    """测试 tail_remainder_estimate()。"""

    def test_simulation_setting(self, config_5000):
        """测试 alpha = 0.05, K = 15。"""
        a = config_5000.n * config_5000.alpha_n

        assert tail_remainder_estimate(config_5000) == pytest.approx(a**16 / math.factorial(16), rel=1e-12)

    def test_unit_alpha(self):
        """测试 alpha = 1 时为 1/16!。"""
        config = TestConfig(alpha=1.0, n=1, alpha_n=1.0, c=-math.inf, K=15)

        assert tail_remainder_estimate(config) == pytest.approx(4.779e-14, rel=1e-3)

    def test_low_order(self):
        """测试 K = 2, alpha = 0.1 时为 alpha^3 / 6。"""
        config = bonferroni_cutoff(10, 0.1, K=2)

        assert tail_remainder_estimate(config) == pytest.approx(1.6667e-4, rel=1e-4)


class TestBlockBound:
    """测试分块等相关构造的 FWER 上界。"""

    def test_reference_value(self):
        """测试 n = 50, alpha = 0.05, rho = 0.5。"""
        assert block_lower_bound(50, 0.05, 0.5) == pytest.approx(0.02517, abs=2e-5)

    def test_independent_blocks(self):
        """测试 rho = 0 时等于 n^2 个独立检验的 FWER。"""
        for n in (10, 50, 200):
            assert block_lower_bound(n, 0.05, 0.0) == pytest.approx(
                fwer_independence(n * n, 0.05 / n**2), rel=1e-12
            )

    def test_perfect_correlation(self):
        """测试 rho = 1 时只剩 n 个完全相关的块。"""
        a = 0.05 / 50**2

        assert block_lower_bound(50, 0.05, 1.0) == pytest.approx(1.0 - (1.0 - a) ** 50, rel=1e-12)

    @pytest.mark.parametrize("rho", [0.25, 0.5, 0.75])
    def test_monotone_decrease(self, rho):
        """测试随块数增加单调下降并趋于 1 - e^{-alpha(1-rho)}。"""
        values = [block_lower_bound(n, 0.05, rho) for n in (10, 50, 200, 1000)]

        assert values == sorted(values, reverse=True)
        assert block_lower_bound(10_000, 0.05, rho) == pytest.approx(block_bound_limit(0.05, rho), abs=1e-4)

    @pytest.mark.parametrize("rho", [0.25, 0.5, 0.75])
    @pytest.mark.parametrize("n_block", [50, 200])
    def test_near_asymptote(self, n_block, rho):
        """测试 n_block >= 50 时不超过 alpha(1 - rho) + 0.002。"""
        assert block_lower_bound(n_block, 0.05, rho) <= 0.05 * (1.0 - rho) + 0.002

    @pytest.mark.parametrize("args", [(0, 0.05, 0.5), (10, 0.0, 0.5), (10, 0.05, 1.2), (10, 0.05, -0.1)])
    def test_domain(self, args):
        """测试非法参数报错。"""
        with pytest.raises(DomainError):
            block_lower_bound(*args)

    def test_limit_value(self):
        """测试极限 1 - e^{-0.025}。"""
        assert block_bound_limit(0.05, 0.5) == pytest.approx(0.02469, abs=1e-5)


class TestMonteCarlo:
    """测试 Monte Carlo 估计。"""

    def test_result_type(self, fwer_service, identity_model):
        """测试返回 EstimateWithCI 并记录重复次数与种子。"""
        config = bonferroni_cutoff(5, 0.5)

        result = fwer_service.estimate_fwer_mc(identity_model, config, 1000, 7)

        assert isinstance(result, EstimateWithCI)
        assert result.replications == 1000
        assert result.seed == 7
        assert 0.0 <= result.estimate <= 1.0
        assert result.std_error == pytest.approx(
            math.sqrt(result.estimate * (1 - result.estimate) / 1000), rel=1e-15
        )

    def test_dimension_mismatch(self, fwer_service, identity_model):
        """测试模型维度与配置不一致时报错。"""
        with pytest.raises(DimensionMismatchError):
            fwer_service.estimate_fwer_mc(identity_model, bonferroni_cutoff(6, 0.05), 100, 1)

    @pytest.mark.parametrize("replications", [0, -5, True, 2.5])
    def test_invalid_replications(self, fwer_service, identity_model, replications):
        """测试重复次数必须为正整数。"""
        with pytest.raises(FwerError):
            fwer_service.estimate_fwer_mc(identity_model, bonferroni_cutoff(5, 0.05), replications, 1)

    def test_invalid_chunk_size(self):
        """测试 chunk_size 必须为正。"""
        with pytest.raises(FwerError):
            FwerService(chunk_size=0)

    def test_thread_and_chunk_invariance(self, sampler):
        """测试不同线程数与分块大小得到完全相同的结果。"""
        model = build_block_equicorrelated(5, 4, 0.3)
        config = bonferroni_cutoff(20, 0.5)

        results = [
            FwerService(sampler, threads=threads, chunk_size=chunk).estimate_fwer_mc(model, config, 2000, 99)
            for threads, chunk in ((1, 2000), (1, 7), (4, 100), (3, 333))
        ]

        assert all(result == results[0] for result in results)

    def test_module_level_estimate(self, sampler):
        """测试模块级函数与服务一致。"""
        model = build_equicorrelated(4, 0.2)
        config = bonferroni_cutoff(4, 0.2)

        expected = FwerService(sampler, threads=1).estimate_fwer_mc(model, config, 500, 3)

        assert estimate_fwer_mc(model, config, 500, 3, threads=2) == expected

    def test_vanishing_level(self, fwer_service):
        """测试 alpha 极小时估计为 0 且标准误为 0。"""
        config = bonferroni_cutoff(10, 1e-300)

        result = fwer_service.estimate_fwer_mc(build_identity(10), config, 1000, 1)

        assert result.estimate == 0.0
        assert result.std_error == 0.0

    def test_zero_cutoff_pair(self, fwer_service):
        """测试 n = 2, alpha = 0.999 (c ~ 0) 时约为 1 - (1 - 0.4995)^2。"""
        config = bonferroni_cutoff(2, 0.999)
        expected = 1.0 - (1.0 - config.alpha_n) ** 2

        result = fwer_service.estimate_fwer_mc(build_equicorrelated(2, 0.0), config, 100_000, 42)

        assert expected == pytest.approx(0.7495, abs=1e-4)
        assert within_standard_errors(result.estimate, expected, 100_000)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_independence_matches_closed_form(self, fwer_service, n):
        """测试独立时 10^6 次 MC 与 1 - (1 - alpha_n)^n 一致。"""
        config = bonferroni_cutoff(n, 0.05)

        result = fwer_service.estimate_fwer_mc(build_identity(n), config, 1_000_000, 2024)

        assert within_standard_errors(result.estimate, fwer_independence(n, config.alpha_n), 1_000_000)

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("rho", [0.0, 0.05, 0.1])
    def test_matches_exact_small(self, fwer_service, n, rho):
        """测试小维度时 MC 与数值积分的精确 FWER 一致。"""
        config = bonferroni_cutoff(n, 0.05)
        model = build_equicorrelated(n, rho)

        result = fwer_service.estimate_fwer_mc(model, config, 1_000_000, 7)

        assert within_standard_errors(result.estimate, exact_fwer_small(model, config), 1_000_000)

    @pytest.mark.parametrize("rho", [0.01, 0.05])
    def test_corrected_close_to_exact_pair(self, config_pair, rho):
        """测试 n = 2 时修正近似与精确值相对差 < 10%。"""
        exact = exact_fwer_small(build_equicorrelated(2, rho), config_pair)

        assert fwer_corrected(config_pair, rho).total == pytest.approx(exact, rel=0.1)

    @pytest.mark.slow
    def test_identity_simulation_scale(self, simulation_service, config_5000):
        """测试 n = 5000 独立时估计接近 0.0487。"""
        result = simulation_service.estimate_fwer_mc(build_identity(5000), config_5000, 10_000, 42)

        assert within_standard_errors(result.estimate, fwer_independence(5000, config_5000.alpha_n), 10_000)

    @pytest.mark.slow
    def test_fourth_level_cell(self, simulation_service):
        """测试 beta = 1, alpha = 0.2 的格子在 0.1813 的 4 个标准误以内。"""
        config = bonferroni_cutoff(5000, 0.2)

        result = simulation_service.estimate_fwer_mc(build_nearly_independent(5000, 1.0), config, 10_000, 42)

        assert within_standard_errors(result.estimate, 0.1813, 10_000)

    @pytest.mark.slow
    def test_nearly_independent_cell_matches_corrected(self, simulation_service):
        """测试 beta = 0.6, alpha = 0.05 的 MC 与修正近似一致。"""
        config = bonferroni_cutoff(5000, 0.05)
        model = build_nearly_independent(5000, 0.6)

        result = simulation_service.estimate_fwer_mc(model, config, 10_000, 42)

        assert within_standard_errors(result.estimate, fwer_corrected(config, model.rho).total, 10_000)

    @pytest.mark.slow
    @pytest.mark.parametrize("n_block, rho", [
        (10, 0.25), (10, 0.5), (10, 0.75),
        (50, 0.25), (50, 0.5), (50, 0.75),
        (200, 0.5),
    ])
    def test_block_model_below_bound(self, sampler, n_block, rho):
        """测试分块模型的 MC 估计不超过上界 + 4 个标准误。"""
        model = build_block_equicorrelated(n_block, n_block, rho)
        config = bonferroni_cutoff(n_block**2, 0.05)
        bound = block_lower_bound(n_block, 0.05, rho)
        service = FwerService(sampler, threads=1, chunk_size=64)

        result = service.estimate_fwer_mc(model, config, 10_000, 42)

        assert result.estimate <= bound + 4.0 * math.sqrt(bound * (1.0 - bound) / 10_000)

    @pytest.mark.slow
    @pytest.mark.parametrize("alpha, beta", sorted(set(PUBLISHED_MC) - PUBLISHED_MC_OUTLIERS))
    def test_published_mc_cells(self, simulation_service, alpha, beta):
        """测试 n = 5000 的 MC 估计落在已发表 MC 值的 4 个标准误以内。"""
        config = bonferroni_cutoff(5000, alpha)

        result = simulation_service.estimate_fwer_mc(build_nearly_independent(5000, beta), config, 10_000, 42)

        assert within_standard_errors(result.estimate, PUBLISHED_MC[(alpha, beta)], 10_000)

    @pytest.mark.slow
    @pytest.mark.parametrize("alpha, beta", sorted(PUBLISHED_MC))
    def test_published_mc_cells_as_independent_estimates(self, simulation_service, alpha, beta):
        """测试与已发表 MC 值（同为 10,000 次的独立估计）之差在 4 个合并标准误以内。"""
        config = bonferroni_cutoff(5000, alpha)

        result = simulation_service.estimate_fwer_mc(build_nearly_independent(5000, beta), config, 10_000, 42)

        assert within_pooled_standard_errors(result.estimate, PUBLISHED_MC[(alpha, beta)], 10_000, 10_000)

    def test_invalid_thread_setting(self, monkeypatch):
        """测试 THREADS 设置非法时抛出 FwerError。"""
        monkeypatch.setattr(config_module, "THREADS", "bogus")

        with pytest.raises(FwerError, match="invalid thread setting"):
            FwerService()

    @pytest.mark.parametrize("threads", [0, -2, "many"])
    def test_invalid_thread_argument(self, threads):
        """测试非法线程数参数抛出 FwerError。"""
        with pytest.raises(FwerError):
            FwerService(threads=threads)
