import logging
import threading
from functools import cached_property, lru_cache
from typing import Optional, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
from numpy.typing import NDArray
from sksparse.cholmod import CholmodError, cholesky

from semiflex.data.function import GridFunction
from semiflex.data.grid import GridGeometry
from semiflex.data.regime import Regime, pairing_scale
from semiflex.data.table import Table
from semiflex.discrete.operators import (
    MixedOperatorSpec,
    OperatorBase,
    apply_Lh,
    lattice_spec,
    stencil,
)
from semiflex.errors import EmptyInterior, FactorizationFailure, NoConvergence
from semiflex.utils import timed

logger = logging.getLogger(__name__)

DENSE_LIMIT = 20_000
BACKWARD_ERROR_TOL = 1e-10


class SparseCholesky:
    r"""Supernodal Cholesky factor :math:`PAP^T = LL^T` of a symmetric
    positive definite sparse matrix, with CHOLMOD's fill-reducing ordering
    :math:`P`.

    Solves share one factor and are serialized on a lock.

    Args:
        matrix (scipy.sparse.csr_matrix): The matrix to factor.
    """

    def __init__(self, matrix: sp.csr_matrix):
        self.n = matrix.shape[0]
        self.matrix = matrix
        try:
            self.factor = cholesky(matrix.tocsc(), mode="supernodal")
        except CholmodError as e:
            raise FactorizationFailure(
                f"Cholesky factorization of a {self.n}x{self.n} operator failed: {e}"
            ) from e
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"SparseCholesky(n={self.n}, nnz={self.matrix.nnz})"

    def _solve_once(self, b: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.factor(np.asfortranarray(b))

    def solve(self, b: NDArray[np.float64]) -> NDArray[np.float64]:
        r"""Solves :math:`Ax = b` with one step of iterative refinement."""
        b = np.asarray(b, dtype=np.float64)
        with self._lock:
            x = self._solve_once(b)
            return x + self._solve_once(b - self.matrix @ x)

    def sample(self, xi: NDArray[np.float64]) -> NDArray[np.float64]:
        r"""Maps standard normals ``xi`` (shape ``(n,)`` or ``(n, k)``) to
        :math:`x = P^TL^{-T}\xi`, so that :math:`\mathrm{Cov}(x) = A^{-1}`."""
        xi = np.asfortranarray(xi, dtype=np.float64)
        with self._lock:
            return self.factor.apply_Pt(self.factor.solve_Lt(xi, use_LDLt_decomposition=False))


class SparseOperator:
    r"""The matrix of :math:`L_h` on the unknowns :math:`R_h`, with zero
    values on :math:`B_h` and outside.

    Args:
        matrix (scipy.sparse.csr_matrix): The assembled symmetric matrix.
        spec (MixedOperatorSpec): The operator it represents.
        geometry (GridGeometry): The grid.
        normalized (bool): Whether the Laplacian is divided by ``2d``.
    """

    def __init__(
        self,
        matrix: sp.csr_matrix,
        spec: MixedOperatorSpec,
        geometry: GridGeometry,
        normalized: bool,
    ):
        self.matrix = matrix
        self.spec = spec
        self.geometry = geometry
        self.normalized = normalized

    def __repr__(self) -> str:
        return (
            f"SparseOperator(n={self.n}, nnz={self.matrix.nnz}, "
            f"spec={self.spec}, normalized={self.normalized})"
        )

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def factor(self) -> SparseCholesky:
        with timed(f"factoring {self}"):
            return SparseCholesky(self.matrix)

    def toarray(self) -> NDArray[np.float64]:
        return self.matrix.toarray()


def assemble(spec: MixedOperatorSpec, g: GridGeometry, normalized: bool) -> SparseOperator:
    r"""Assembles :math:`L_h` on the unknowns of ``g``.

    Row ``i`` is :math:`L_h` applied to the unit vector of unknown ``i``,
    zero-extended to :math:`B_h` and outside. The stencil is symmetric, so
    the matrix is symmetric exactly.
    """
    if g.n == 0:
        raise EmptyInterior(f"{g} has no unknowns.")
    kernel = stencil(spec, g.d, normalized) * spec.h ** (-2 * spec.m)
    rows, cols, vals = [], [], []
    base = g.unknowns - g.origin
    for offset in np.argwhere(kernel != 0):
        target = base + (offset - 2)
        j = g.index[tuple(target.T)]
        keep = j >= 0
        rows.append(np.nonzero(keep)[0])
        cols.append(j[keep])
        vals.append(np.full(keep.sum(), kernel[tuple(offset)]))
    matrix = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(g.n, g.n),
    )
    matrix.sum_duplicates()
    return SparseOperator(matrix, spec, g, normalized)


def backward_error(matrix: sp.csr_matrix, x: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    r""":math:`\|Ax - b\|_\infty / (\|A\|_\infty\|x\|_\infty + \|b\|_\infty)`"""
    norm_A = float(abs(matrix).sum(axis=1).max())
    residual = np.abs(matrix @ x - b).max()
    return float(residual / (norm_A * np.abs(x).max() + np.abs(b).max()))


def solve_dirichlet(
    A: SparseOperator, f: GridFunction, boundary: Optional[GridFunction] = None
) -> GridFunction:
    r"""Solves :math:`L_h u = f` on :math:`R_h` with :math:`u = 0` on
    :math:`B_h`, or :math:`u = ` ``boundary`` there when given.

    Args:
        A (SparseOperator): The assembled operator.
        f (GridFunction): The right-hand side; only its values on
            :math:`R_h` are used.
        boundary (GridFunction, optional): Dirichlet data on the cells that
            are not unknowns. (default: :obj:`None`)
    """
    g = A.geometry
    rhs = f.on_unknowns()
    lifted = None
    if boundary is not None:
        lifted = boundary.masked(~g.interior_mask)
        rhs = rhs - apply_Lh(A.spec, lifted, A.normalized).on_unknowns()

    x = A.factor.solve(rhs)
    if np.any(rhs):
        error = backward_error(A.matrix, x, rhs)
        logger.debug(f"backward error {error:.2e}")
        if error > BACKWARD_ERROR_TOL:
            raise NoConvergence(
                f"Backward error {error:.2e} of a solve with {A} exceeds "
                f"{BACKWARD_ERROR_TOL:.0e}."
            )

    u = GridFunction.from_unknowns(g, x)
    if lifted is not None:
        u = u + lifted
    return u


class GreenFunction:
    r"""The lattice Green's function :math:`G_{\Lambda_N}` of
    :math:`-\Delta + \kappa\Delta^2` (normalized Laplacian) with zero
    boundary values.

    Columns are solved on demand against one factorization and kept in an
    LRU cache; :meth:`dense` builds the full matrix for small grids.

    Args:
        geometry (GridGeometry): The grid; :math:`\Lambda_N` is its set of
            unknowns.
        kappa (float): The stiffness :math:`\kappa \ge 0`.
        cache_size (int): Number of cached columns. (default: :obj:`1024`)
    """

    def __init__(self, geometry: GridGeometry, kappa: float, cache_size: int = 1024):
        self.geometry = geometry
        self.kappa = float(kappa)
        self.operator = assemble(lattice_spec(self.kappa), geometry, normalized=True)
        self.column = lru_cache(maxsize=cache_size)(self._column)

    def __repr__(self) -> str:
        return f"GreenFunction(geometry={self.geometry}, kappa={self.kappa})"

    @property
    def n(self) -> int:
        return self.geometry.n

    def _column(self, j: int) -> NDArray[np.float64]:
        e = np.zeros(self.n)
        e[j] = 1.0
        x = self.operator.factor.solve(e)
        x.setflags(write=False)
        return x

    def __call__(self, x: Tuple[int, ...], y: Tuple[int, ...]) -> float:
        r""":math:`G(x, y)` for integer lattice points; zero if either point
        is not an unknown"""
        i = self.geometry.unknown_index(x)
        j = self.geometry.unknown_index(y)
        if i < 0 or j < 0:
            return 0.0
        return float(self.column(j)[i])

    @cached_property
    def _dense(self) -> NDArray[np.float64]:
        if self.n > DENSE_LIMIT:
            raise ValueError(
                f"Refusing to build a dense {self.n}x{self.n} Green's function "
                f"(limit {DENSE_LIMIT} points); use columns instead."
            )
        with timed(f"solving {self.n} Green's function columns"):
            G = self.operator.factor.solve(np.eye(self.n))
        G = 0.5 * (G + G.T)
        G.setflags(write=False)
        return G

    def dense(self) -> NDArray[np.float64]:
        return self._dense

    def scaled_kernel(self, regime: Regime) -> NDArray[np.float64]:
        r"""The kernel :math:`N^{2d} s^2 G_{\Lambda_N}` with ``s`` the pairing
        scale, so that :math:`\mathrm{Var}[(\Psi_N, f)] = N^{-2d}\sum_{x,y}
        K(x,y) f(x) f(y)`."""
        g = self.geometry
        s = pairing_scale(regime, g.d, g.N, self.kappa)
        return s**2 * float(g.N) ** (2 * g.d) * self.dense()

    def to_table(self) -> Table:
        G = self.dense()
        i, j = np.meshgrid(np.arange(self.n), np.arange(self.n), indexing="ij")
        df = pd.DataFrame({"x_index": i.ravel(), "y_index": j.ravel(), "value": G.ravel()})
        g = self.geometry
        return Table(
            df=df,
            metadata={
                "domain": g.domain.kind.value,
                "d": g.d,
                "N": g.N,
                "classification": g.classification.value,
                "kappa": self.kappa,
            },
        )


def green_function(g: GridGeometry, kappa: float) -> GreenFunction:
    if not np.isfinite(kappa) or kappa < 0:
        raise ValueError(f"kappa must be finite and non-negative (got {kappa}).")
    return GreenFunction(g, kappa)


###### rescaled problems


def scaled_spec(regime: Regime, g: GridGeometry, kappa: float) -> Tuple[MixedOperatorSpec, float]:
    r"""The rescaled operator of a regime and the factor relating its inverse
    to the pairing variance.

    With :math:`h = 1/N` the lattice precision factors as
    :math:`-\Delta + \kappa\Delta^2 = \frac{\kappa h^4}{4d^2}(\Delta_h^2 -
    \rho_2\Delta_h) = \frac{h^2}{2d}(-\Delta_h + \rho\Delta_h^2)` with
    :math:`\rho_2 = 2d/(\kappa h^2)` and :math:`\rho = \kappa h^2/(2d)`. In
    every regime :math:`\mathrm{Var}[(\Psi_N,f)] = c\,N^{-d} f^T L_h^{-1} f`
    where ``c`` is the returned factor.
    """
    regime = Regime(regime)
    d, h = g.d, g.h
    if regime == Regime.SUPER:
        if kappa <= 0:
            raise ValueError("The super regime needs kappa > 0.")
        return MixedOperatorSpec(OperatorBase.BILAPLACIAN, 2 * d / (kappa * h**2), h), 1.0
    rho = kappa * h**2 / (2 * d)
    if regime == Regime.SUB:
        return MixedOperatorSpec(OperatorBase.NEG_LAPLACIAN, rho, h), 1.0
    return MixedOperatorSpec(OperatorBase.MIXED, rho, h), rho


def solve_scaled(regime: Regime, g: GridGeometry, kappa: float, rhs: GridFunction) -> GridFunction:
    r"""Solves the rescaled Dirichlet problem :math:`L_h H = \mathrm{rhs}` of
    ``regime`` (unnormalized :math:`\Delta_h`, :math:`h = 1/N`)."""
    spec, _ = scaled_spec(regime, g, kappa)
    return solve_dirichlet(assemble(spec, g, normalized=False), rhs)
