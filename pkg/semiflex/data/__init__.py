from .function import GridFunction
from .grid import (
    Classification,
    Domain,
    DomainKind,
    GridGeometry,
    PointClass,
    boundary_ratio,
    build_grid,
    neighbor_offsets,
    neighbors,
)
from .regime import Regime, infer_regime, interpolation_scale, pairing_scale
from .table import Table

__all__ = [
    "Table",
    "Domain",
    "DomainKind",
    "Classification",
    "PointClass",
    "GridGeometry",
    "build_grid",
    "neighbors",
    "neighbor_offsets",
    "boundary_ratio",
    "GridFunction",
    "Regime",
    "infer_regime",
    "pairing_scale",
    "interpolation_scale",
]
