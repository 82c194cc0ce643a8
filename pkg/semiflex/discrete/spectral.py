import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy import linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from semiflex.data.function import GridFunction
from semiflex.data.grid import GridGeometry
from semiflex.data.table import Table
from semiflex.discrete.dirichlet import SparseOperator, assemble
from semiflex.discrete.operators import OperatorBase, lattice_spec
from semiflex.errors import InsufficientTrustedWindow, NoConvergence
from semiflex.metrics import loglog_slope
from semiflex.utils import stream, timed

logger = logging.getLogger(__name__)

DENSE_EIG_LIMIT = 2000
TRUST_FACTOR = 0.1
MIN_TRUSTED = 30


@dataclass
class SpectrumResult:
    r"""The smallest eigenpairs of an assembled operator.

    Args:
        base (OperatorBase): Which operator family.
        eigenvalues (numpy.ndarray): Ascending eigenvalues.
        vectors (numpy.ndarray): Euclidean-orthonormal eigenvectors as
            columns, indexed by unknowns.
        geometry (GridGeometry): The grid.
    """

    base: OperatorBase
    eigenvalues: NDArray[np.float64]
    vectors: NDArray[np.float64]
    geometry: GridGeometry

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def grid_vectors(self) -> NDArray[np.float64]:
        r"""eigenvectors orthonormal in :math:`\langle\cdot,\cdot\rangle_{h,grid}`"""
        g = self.geometry
        return self.vectors / np.sqrt(g.h**g.d)

    def mode(self, j: int) -> GridFunction:
        return GridFunction.from_unknowns(self.geometry, self.grid_vectors[:, j])

    def to_table(self) -> Table:
        df = pd.DataFrame({"j": np.arange(1, len(self) + 1), "eigenvalue": self.eigenvalues})
        g = self.geometry
        return Table(df=df, metadata={"operator": self.base.value, "d": g.d, "N": g.N})


def _fix_signs(vectors: NDArray[np.float64]) -> NDArray[np.float64]:
    for j in range(vectors.shape[1]):
        v = vectors[:, j]
        first = np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())[0]
        if v[first] < 0:
            vectors[:, j] = -v
    return vectors


def spectrum(A: SparseOperator, k: int) -> SpectrumResult:
    r"""The ``k`` smallest eigenpairs of ``A``.

    Small operators are diagonalized densely; larger ones use shift-invert
    Lanczos around zero with the Cholesky factor of ``A`` as the inverse.
    Each eigenvector's first non-negligible component is positive.
    """
    n = A.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}] (got {k}).")
    with timed(f"computing {k} eigenpairs of {A}"):
        if n <= DENSE_EIG_LIMIT or k >= n - 1:
            vals, vecs = linalg.eigh(A.toarray(), subset_by_index=[0, k - 1])
        else:
            inverse = LinearOperator((n, n), matvec=A.factor.solve, dtype=np.float64)
            v0 = stream(0, 0).standard_normal(n)
            try:
                vals, vecs = eigsh(
                    A.matrix, k=k, sigma=0.0, which="LM", OPinv=inverse, v0=v0
                )
            except ArpackNoConvergence as e:
                raise NoConvergence(f"Eigensolver did not converge for {k} modes of {A}: {e}") from e
    order = np.argsort(vals, kind="stable")
    return SpectrumResult(
        base=A.spec.base,
        eigenvalues=vals[order],
        vectors=_fix_signs(vecs[:, order].copy()),
        geometry=A.geometry,
    )


def trusted_window(result: SpectrumResult, order: int) -> NDArray[np.float64]:
    r"""eigenvalues at most ``0.1 * h**-order``"""
    cutoff = TRUST_FACTOR * result.geometry.h ** (-order)
    return result.eigenvalues[result.eigenvalues <= cutoff]


def weyl_check(result: SpectrumResult, d: int, order: int) -> float:
    r"""Fitted exponent of :math:`\lambda_j \sim c j^{\text{order}/d}` over the
    trusted window."""
    trusted = trusted_window(result, order)
    if len(trusted) >= len(result):
        logger.warning(
            f"all {len(result)} computed eigenvalues are trusted; the window may be truncated"
        )
    if len(trusted) < MIN_TRUSTED:
        raise InsufficientTrustedWindow(
            f"Only {len(trusted)} eigenvalues lie below the cutoff "
            f"{TRUST_FACTOR} * h^-{order} (need {MIN_TRUSTED})."
        )
    slope = loglog_slope(np.arange(1, len(trusted) + 1), trusted)
    logger.info(f"weyl exponent {slope:.4f} over {len(trusted)} modes (expected {order / d:g})")
    return slope


def weyl_table(result: SpectrumResult, d: int, order: int) -> Table:
    slope = weyl_check(result, d, order)
    cutoff = TRUST_FACTOR * result.geometry.h ** (-order)
    table = result.to_table()
    table.df["trusted"] = table.df["eigenvalue"] <= cutoff
    table.metadata.update({"order": order, "expected": order / d, "slope": slope})
    return table


###### series representation


def series_field(
    result: SpectrumResult, seed: int, J: Optional[int] = None, s: float = 0.0
) -> GridFunction:
    r""":math:`\sum_{j \le J} \lambda_j^{-(1+s)/2}\xi_j v_j` with i.i.d.
    standard normal :math:`\xi_j`.

    ``s = 0`` is the field whose covariance tends to :math:`A^{-1}` as
    ``J`` reaches the number of unknowns.
    """
    J = len(result) if J is None else J
    if not 1 <= J <= len(result):
        raise ValueError(f"J must lie in [1, {len(result)}] (got {J}).")
    xi = stream(seed, 0).standard_normal(len(result))[:J]
    coef = result.eigenvalues[:J] ** (-(1 + s) / 2) * xi
    return GridFunction.from_unknowns(result.geometry, result.vectors[:, :J] @ coef)


def series_covariance(result: SpectrumResult, J: Optional[int] = None) -> NDArray[np.float64]:
    r""":math:`\sum_{j \le J}\lambda_j^{-1} v_j v_j^T`"""
    J = len(result) if J is None else J
    V = result.vectors[:, :J]
    return (V / result.eigenvalues[:J]) @ V.T


def tail_sums(result: SpectrumResult, s: float, seed: int, J: int) -> float:
    r""":math:`\sum_{J/2 < j \le J}\lambda_j^{-1-s/2}\xi_j^2`"""
    if not 2 <= J <= len(result):
        raise ValueError(f"J must lie in [2, {len(result)}] (got {J}).")
    xi = stream(seed, 0).standard_normal(len(result))
    j = np.arange(J // 2, J)
    return float(np.sum(result.eigenvalues[j] ** (-1 - s / 2) * xi[j] ** 2))


def negative_norm(
    f: Union[GridFunction, Callable], result: SpectrumResult, s: float, order: int
) -> float:
    r"""Squared negative-order norm of ``f`` in the eigenbasis of ``result``.

    Sums :math:`\lambda_j^{-e}\langle f, v_j\rangle_{h,grid}^2` with
    :math:`e = s` for second-order operators and :math:`e = s/2` for
    fourth-order ones.
    """
    g = result.geometry
    if not isinstance(f, GridFunction):
        f = GridFunction.from_callable(g, f)
    fvec = f.on_unknowns()
    coef = g.h**g.d * (result.grid_vectors.T @ fvec)
    exponent = s if order == 2 else s / 2
    return float(np.sum(result.eigenvalues ** (-exponent) * coef**2))


def eigenvalue_monotonicity(g: GridGeometry, kappas: Sequence[float], k: int) -> NDArray[np.float64]:
    r"""Smallest ``k`` eigenvalues of the lattice precision
    :math:`-\Delta + \kappa\Delta^2` for each ``kappa``, one row each."""
    rows = [spectrum(assemble(lattice_spec(kappa), g, normalized=True), k).eigenvalues for kappa in kappas]
    return np.stack(rows)
