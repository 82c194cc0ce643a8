import itertools
import logging
from enum import Enum, IntEnum
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy import ndimage

from semiflex.data.table import Table
from semiflex.errors import EmptyInterior, OutOfDomain

logger = logging.getLogger(__name__)

# Cells of padding around the bounding lattice. Stencils reach at most two
# cells, so every operator applied to a function supported in D_h is exact.
PAD = 2


class DomainKind(str, Enum):
    BOX = "box"
    DISC = "disc"


class Classification(str, Enum):
    r"""Point classification convention.

    Attributes:
        GENERAL: interior points are those whose whole neighborhood lies in
            the closed domain.
        CHAIN: d=1 only. Unknowns are :math:`\{1, \dots, N-1\}` with zeros at
            :math:`0`, :math:`N` and a phantom point :math:`N+1`, the layout
            of a walk conditioned to vanish at its last two steps.
    """

    GENERAL = "general"
    CHAIN = "chain"


class PointClass(IntEnum):
    OUTSIDE = 0
    BOUNDARY = 1
    NEAR_BOUNDARY = 2
    INTERIOR = 3

    @property
    def label(self) -> str:
        return {0: "outside", 1: "B", 2: "B*", 3: "R*"}[int(self)]


class Domain:
    r"""A bounded domain: the unit box :math:`(0,1)^d` or the unit disc.

    Args:
        kind (DomainKind): ``"box"`` or ``"disc"``.
        d (int): The dimension.
    """

    def __init__(self, kind: DomainKind, d: int):
        kind = DomainKind(kind)
        if d < 1:
            raise ValueError(f"Dimension must be positive (got {d}).")
        if kind == DomainKind.DISC and d not in (2, 3):
            raise ValueError(f"The disc domain needs d in {{2, 3}} (got {d}).")
        self.kind = kind
        self.d = d

    def __repr__(self) -> str:
        return f"Domain(kind={self.kind.value}, d={self.d})"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Domain) and self.kind == other.kind and self.d == other.d
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.d))

    def bounds(self, N: int) -> Tuple[int, int]:
        r"""integer coordinate range of the bounding lattice"""
        if self.kind == DomainKind.BOX:
            return 0, N
        return -N, N

    def contains(self, points: NDArray[np.int64], N: int) -> NDArray[np.bool_]:
        r"""exact membership of integer points ``k`` (physical ``k/N``) in the
        closed domain"""
        points = np.asarray(points, dtype=np.int64)
        if self.kind == DomainKind.BOX:
            return ((points >= 0) & (points <= N)).all(axis=-1)
        return (points**2).sum(axis=-1) <= N * N


def neighbor_offsets(d: int) -> NDArray[np.int64]:
    r"""Offsets :math:`\pm e_i, \pm e_i \pm e_j` of a lattice point.

    These are all nonzero integer vectors of :math:`\ell^1` length at most
    two, so ``4``, ``12`` and ``24`` offsets in ``d = 1, 2, 3``. Rows are in
    lexicographic order.
    """
    offsets = [
        eta
        for eta in itertools.product(range(-2, 3), repeat=d)
        if 0 < sum(abs(e) for e in eta) <= 2
    ]
    return np.array(offsets, dtype=np.int64).reshape(-1, d)


def _footprint(d: int) -> NDArray[np.bool_]:
    footprint = np.zeros((5,) * d, dtype=bool)
    footprint[(2,) * d] = True
    for eta in neighbor_offsets(d):
        footprint[tuple(eta + 2)] = True
    return footprint


class GridGeometry:
    r"""A discretized domain with every lattice point classified.

    Values live on a dense array covering the bounding lattice plus
    :obj:`PAD` cells on each side. Array cell ``i`` holds the integer point
    ``origin + i``; its physical position is ``(origin + i) * h``.

    Args:
        domain (Domain): The continuum domain.
        N (int): The number of cells per unit length, :math:`h = 1/N`.
        classification (Classification): The convention used.
        origin (numpy.ndarray): Integer coordinates of array cell zero.
        classes (numpy.ndarray): The :class:`PointClass` of every cell.
    """

    def __init__(
        self,
        domain: Domain,
        N: int,
        classification: Classification,
        origin: NDArray[np.int64],
        classes: NDArray[np.int8],
    ):
        self.domain = domain
        self.N = N
        self.classification = Classification(classification)
        self.origin = np.asarray(origin, dtype=np.int64)
        self.classes = classes
        self.classes.setflags(write=False)

        self.unknowns = np.argwhere(self.interior_mask) + self.origin
        self.index = np.full(self.shape, -1, dtype=np.int64)
        self.index[self.interior_mask] = np.arange(len(self.unknowns))
        self.index.setflags(write=False)
        self.unknowns.setflags(write=False)

    def __repr__(self) -> str:
        return (
            f"GridGeometry(domain={self.domain}, N={self.N}, "
            f"classification={self.classification.value}, n={self.n})"
        )

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.classes.shape

    @property
    def n(self) -> int:
        r"""number of unknowns :math:`|R_h|`"""
        return len(self.unknowns)

    @property
    def domain_mask(self) -> NDArray[np.bool_]:
        return self.classes != PointClass.OUTSIDE

    @property
    def interior_mask(self) -> NDArray[np.bool_]:
        return self.classes >= PointClass.NEAR_BOUNDARY

    @property
    def deep_mask(self) -> NDArray[np.bool_]:
        return self.classes == PointClass.INTERIOR

    @property
    def near_boundary_mask(self) -> NDArray[np.bool_]:
        return self.classes == PointClass.NEAR_BOUNDARY

    @property
    def boundary_mask(self) -> NDArray[np.bool_]:
        return self.classes == PointClass.BOUNDARY

    def lattice_points(self) -> NDArray[np.int64]:
        r"""integer coordinates of every array cell, shape ``(*shape, d)``"""
        grids = np.indices(self.shape, dtype=np.int64)
        return np.moveaxis(grids, 0, -1) + self.origin

    def coordinates(self, points: NDArray[np.int64]) -> NDArray[np.float64]:
        r"""physical coordinates ``k * h`` of integer points"""
        return np.asarray(points, dtype=np.float64) * self.h

    def array_index(self, point: Sequence[int]) -> Tuple[int, ...]:
        return tuple(int(k) for k in np.asarray(point, dtype=np.int64) - self.origin)

    def point_class(self, point: Sequence[int]) -> PointClass:
        idx = np.asarray(point, dtype=np.int64) - self.origin
        if idx.shape != (self.d,) or (idx < 0).any() or (idx >= self.shape).any():
            return PointClass.OUTSIDE
        return PointClass(int(self.classes[tuple(idx)]))

    def unknown_index(self, point: Sequence[int]) -> int:
        r"""position of ``point`` in the unknown ordering, ``-1`` if it is not
        an interior point"""
        if self.point_class(point) < PointClass.NEAR_BOUNDARY:
            return -1
        return int(self.index[self.array_index(point)])

    def points(self) -> NDArray[np.int64]:
        r"""integer coordinates of :math:`D_h` in lexicographic order"""
        return np.argwhere(self.domain_mask) + self.origin

    def counts(self) -> Dict[str, int]:
        return {
            cls.label: int((self.classes == cls).sum())
            for cls in (PointClass.INTERIOR, PointClass.NEAR_BOUNDARY, PointClass.BOUNDARY)
        }

    def to_table(self) -> Table:
        points = self.points()
        classes = self.classes[self.domain_mask]
        columns = {f"x_{i + 1}": self.coordinates(points[:, i]) for i in range(self.d)}
        columns["class"] = [PointClass(int(c)).label for c in classes]
        return Table(
            df=pd.DataFrame(columns),
            metadata={
                "domain": self.domain.kind.value,
                "d": self.d,
                "N": self.N,
                "classification": self.classification.value,
                **{f"count_{k}": v for k, v in self.counts().items()},
            },
        )


def build_grid(
    domain: Domain,
    N: int,
    classification: Classification = Classification.GENERAL,
) -> GridGeometry:
    r"""Builds and classifies the lattice approximation of ``domain``.

    Under the general convention a point of :math:`D_h` is interior
    (:math:`R_h`) iff all its neighbors lie in :math:`D_h`; it is deep
    interior (:math:`R^*_h`) iff all its neighbors are interior. The rest of
    :math:`R_h` is :math:`B^*_h` and the rest of :math:`D_h` is :math:`B_h`.

    Args:
        domain (Domain): The domain to discretize.
        N (int): Cells per unit length.
        classification (Classification): ``"general"`` or ``"chain"``.
    """
    classification = Classification(classification)
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer (got {N}).")
    N = int(N)
    d = domain.d

    if classification == Classification.CHAIN:
        if domain.kind != DomainKind.BOX or d != 1:
            raise ValueError("The chain classification exists for the d=1 box only.")
        lo, hi = 0, N + 1
    else:
        lo, hi = domain.bounds(N)

    shape = (hi - lo + 1 + 2 * PAD,) * d
    origin = np.full(d, lo - PAD, dtype=np.int64)
    grids = np.moveaxis(np.indices(shape, dtype=np.int64), 0, -1) + origin
    footprint = _footprint(d)

    if classification == Classification.CHAIN:
        in_domain = ((grids >= lo) & (grids <= hi)).all(axis=-1)
        interior = ((grids >= 1) & (grids <= N - 1)).all(axis=-1)
    else:
        in_domain = domain.contains(grids, N)
        interior = ndimage.binary_erosion(in_domain, structure=footprint, border_value=0)
    deep = ndimage.binary_erosion(interior, structure=footprint, border_value=0)

    if not interior.any():
        raise EmptyInterior(
            f"No interior points for {domain} at N={N} "
            f"({classification.value} classification)."
        )

    classes = np.zeros(shape, dtype=np.int8)
    classes[in_domain] = PointClass.BOUNDARY
    classes[interior] = PointClass.NEAR_BOUNDARY
    classes[deep] = PointClass.INTERIOR

    grid = GridGeometry(domain, N, classification, origin, classes)
    logger.debug(f"built {grid} with counts {grid.counts()}")
    return grid


def neighbors(g: GridGeometry, x: Sequence[int]) -> List[Tuple[int, ...]]:
    r"""Neighbors of the grid point ``x`` (integer coordinates) in the fixed
    order of :func:`neighbor_offsets`."""
    if g.point_class(x) == PointClass.OUTSIDE:
        raise OutOfDomain(f"{tuple(x)} is not a point of {g}.")
    x = np.asarray(x, dtype=np.int64)
    return [tuple(int(k) for k in x + eta) for eta in neighbor_offsets(g.d)]


def boundary_ratio(g: GridGeometry) -> float:
    r""":math:`|B^*_h| h^{d-1}`"""
    return float(g.near_boundary_mask.sum() * g.h ** (g.d - 1))
