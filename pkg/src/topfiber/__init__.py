"""Boolean matrix factorization with topFiberM."""

from .boolmat import (
    BoolMatrix,
    DimensionError,
    EmptyMatrixError,
    FactorPair,
    bool_product,
    product_count,
    residual,
)
from .kernels import active_backend, use_backend
from .topfiberm import ConfigError, FiberType, TfmConfig, TopFiberEntry, factorize

__version__ = "0.1.0"

__all__ = [
    "BoolMatrix",
    "ConfigError",
    "DimensionError",
    "EmptyMatrixError",
    "FactorPair",
    "FiberType",
    "TfmConfig",
    "TopFiberEntry",
    "active_backend",
    "bool_product",
    "factorize",
    "product_count",
    "residual",
    "use_backend",
]
