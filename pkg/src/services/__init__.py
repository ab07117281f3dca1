"""Service layer - Numerical modules.

Each service module has a clear interface and can be developed/tested independently.
"""

from .fwer_service import FwerService
from .sampler_service import SamplerService, SeededStream
from .table_service import TableService

__all__ = [
    "FwerService",
    "SamplerService",
    "SeededStream",
    "TableService",
]
