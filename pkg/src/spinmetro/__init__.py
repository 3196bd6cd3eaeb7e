"""spinmetro: collective-spin phase and frequency estimation workbench."""

__version__ = "0.1.0"

from .spincore import (CollectiveOperator, DickeVector, FullDensity,
                       FullVector, collective_op, eigh, embed_full,
                       expectation, project_dicke, rotate, variance)

__all__ = [
    "__version__", "CollectiveOperator", "DickeVector", "FullDensity",
    "FullVector", "collective_op", "eigh", "embed_full", "expectation",
    "project_dicke", "rotate", "variance",
]
