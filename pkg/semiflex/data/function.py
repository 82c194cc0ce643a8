from typing import Callable, Optional, Sequence, Union

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from typing_extensions import Self

from semiflex.data.grid import GridGeometry
from semiflex.data.table import Table


class GridFunction:
    r"""Real values on the lattice of a :class:`GridGeometry`.

    Values outside ``support`` are exactly zero, so every grid function is
    the zero extension of its values on the support.

    Args:
        geometry (GridGeometry): The grid the values live on.
        values (numpy.ndarray): An array of shape ``geometry.shape``.
        support (numpy.ndarray, optional): Boolean mask of the declared
            support. Defaults to the nonzero cells. (default: :obj:`None`)
    """

    def __init__(
        self,
        geometry: GridGeometry,
        values: NDArray[np.float64],
        support: Optional[NDArray[np.bool_]] = None,
    ):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != geometry.shape:
            raise ValueError(
                f"Values of shape {values.shape} do not match the grid shape "
                f"{geometry.shape}."
            )
        if not np.isfinite(values).all():
            raise ValueError("Grid function values must be finite.")
        if support is None:
            support = values != 0
        support = np.asarray(support, dtype=bool)
        if (values[~support] != 0).any():
            raise ValueError("Grid function has nonzero values outside its support.")
        self.geometry = geometry
        self.values = values
        self.support = support

    def __repr__(self) -> str:
        return (
            f"GridFunction(geometry={self.geometry}, "
            f"support_size={int(self.support.sum())})"
        )

    @property
    def h(self) -> float:
        return self.geometry.h

    @property
    def d(self) -> int:
        return self.geometry.d

    @classmethod
    def zeros(cls, geometry: GridGeometry) -> Self:
        return cls(geometry, np.zeros(geometry.shape))

    @classmethod
    def from_unknowns(cls, geometry: GridGeometry, x: NDArray[np.float64]) -> Self:
        r"""Places a vector indexed by the unknowns on :math:`R_h`."""
        x = np.asarray(x, dtype=np.float64)
        assert x.shape == (geometry.n,)
        values = np.zeros(geometry.shape)
        values[geometry.interior_mask] = x
        return cls(geometry, values, geometry.interior_mask.copy())

    @classmethod
    def from_callable(
        cls,
        geometry: GridGeometry,
        func: Callable[[NDArray[np.float64]], NDArray[np.float64]],
        where: str = "interior",
    ) -> Self:
        r"""Evaluates ``func`` at physical coordinates.

        ``func`` maps an array of points of shape ``(m, d)`` to ``m`` values.
        ``where`` is ``"interior"`` (:math:`R_h`) or ``"domain"``
        (:math:`D_h`).
        """
        if where == "interior":
            mask = geometry.interior_mask
        elif where == "domain":
            mask = geometry.domain_mask
        else:
            raise ValueError(f"Unknown evaluation set '{where}'.")
        points = geometry.lattice_points()[mask]
        values = np.zeros(geometry.shape)
        values[mask] = np.asarray(func(geometry.coordinates(points)), dtype=np.float64)
        return cls(geometry, values, mask.copy())

    @classmethod
    def delta(cls, geometry: GridGeometry, point: Sequence[int]) -> Self:
        values = np.zeros(geometry.shape)
        values[geometry.array_index(point)] = 1.0
        return cls(geometry, values)

    def on_unknowns(self) -> NDArray[np.float64]:
        return self.values[self.geometry.interior_mask]

    def masked(self, mask: NDArray[np.bool_]) -> Self:
        r"""zero outside ``mask``"""
        return type(self)(
            self.geometry, np.where(mask, self.values, 0.0), self.support & mask
        )

    def _combine(self, other: Union[Self, float], op) -> Self:
        if isinstance(other, GridFunction):
            assert other.geometry is self.geometry
            return type(self)(
                self.geometry,
                op(self.values, other.values),
                self.support | other.support,
            )
        return type(self)(self.geometry, op(self.values, other), self.support.copy())

    def __add__(self, other: Self) -> Self:
        return self._combine(other, np.add)

    def __sub__(self, other: Self) -> Self:
        return self._combine(other, np.subtract)

    def __mul__(self, scalar: float) -> Self:
        return self._combine(float(scalar), np.multiply)

    __rmul__ = __mul__

    def __neg__(self) -> Self:
        return self * -1.0

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())

    def to_table(self) -> Table:
        g = self.geometry
        points = g.lattice_points()[self.support]
        columns = {f"k_{i + 1}": points[:, i] for i in range(g.d)}
        columns["value"] = self.values[self.support]
        return Table(df=pd.DataFrame(columns), metadata={"d": g.d, "N": g.N})
