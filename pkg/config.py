"""Global configuration values."""

import os

# ============== 数值计算默认值 ==============
# 超过该维度时不再构造稠密相关矩阵
DENSE_LIMIT = int(os.environ.get("FWER_DENSE_LIMIT", "2000"))

# Inclusion-exclusion truncation order (K=15 reproduces the published tables)
DEFAULT_K = int(os.environ.get("FWER_DEFAULT_K", "15"))
MIN_K = 2
MAX_K = 30

DEFAULT_SEED = int(os.environ.get("FWER_DEFAULT_SEED", "42"))

# Magnitude constant of the nearly independent realization: delta = scale * n^(-beta)
DEFAULT_SCALE = float(os.environ.get("FWER_DEFAULT_SCALE", "1.0"))

# Replications per sampling work unit
CHUNK_SIZE = int(os.environ.get("FWER_CHUNK_SIZE", "256"))

# "auto" -> os.cpu_count(); --threads on the command line wins
THREADS = os.environ.get("THREADS", "auto")

LOG_LEVEL = os.environ.get("LOG_LEVEL", "WARNING")

# ============== 近似适用范围 ==============
# |rho| above this leaves the first-order (I - R) regime of the joint tail approximation
APPLICABILITY_RHO = 0.2

# c^2 |rho_bar| / 2 above this leaves the c^2 * sum(rho) = o(1) regime
CORRECTION_REGIME_LIMIT = 0.5

# Quadrature is truncated at +/- this many standard deviations
INTEGRATION_LIMIT = 40.0


def resolve_threads(value: str | int | None = None) -> int:
    """Turn a thread setting ("auto" or a positive integer) into a worker count."""
    raw = THREADS if value is None else value
    if isinstance(raw, str):
        if raw.strip().lower() == "auto":
            return max(1, os.cpu_count() or 1)
        raw = int(raw)
    if raw < 1:
        raise ValueError(f"thread count must be positive, got {raw}")
    return raw
