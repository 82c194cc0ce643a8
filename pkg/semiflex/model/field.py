import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from numpy.typing import NDArray
from tqdm import tqdm

from semiflex.data.function import GridFunction
from semiflex.data.grid import DomainKind, GridGeometry
from semiflex.data.regime import Regime, infer_regime, interpolation_scale, pairing_scale
from semiflex.data.table import Table
from semiflex.discrete.dirichlet import assemble, green_function, scaled_spec, solve_dirichlet
from semiflex.discrete.operators import MixedOperatorSpec, lattice_spec
from semiflex.errors import OutOfDomain
from semiflex.utils import num_threads, stream, timed

logger = logging.getLogger(__name__)

CHUNK = 256


@dataclass(frozen=True)
class ModelParams:
    r"""Parameters of the Gibbs field with Hamiltonian
    :math:`\kappa_1\sum|\nabla\varphi|^2 + \kappa_2\sum|\Delta\varphi|^2`,
    :math:`\kappa_1 = 1/(4d)`, :math:`\kappa_2 = \kappa/2`.

    Args:
        d (int): The dimension.
        N (int): The system size.
        kappa (float): The stiffness :math:`\kappa(N) \ge 0`.
        regime (Regime, optional): Inferred from :math:`\kappa/(2dN^2)` when
            not given. (default: :obj:`None`)
    """

    d: int
    N: int
    kappa: float
    regime: Optional[Regime] = None

    def __post_init__(self):
        if self.d < 1 or self.N < 1:
            raise ValueError(f"d and N must be positive (got d={self.d}, N={self.N}).")
        if not math.isfinite(self.kappa) or self.kappa < 0:
            raise ValueError(f"kappa must be finite and non-negative (got {self.kappa}).")
        regime = infer_regime(self.d, self.N, self.kappa) if self.regime is None else Regime(self.regime)
        object.__setattr__(self, "regime", regime)

    @property
    def kappa1(self) -> float:
        return 1.0 / (4 * self.d)

    @property
    def kappa2(self) -> float:
        return self.kappa / 2.0

    @property
    def spec(self) -> MixedOperatorSpec:
        return lattice_spec(self.kappa)

    @property
    def pairing_scale(self) -> float:
        return pairing_scale(self.regime, self.d, self.N, self.kappa)

    @property
    def interpolation_scale(self) -> float:
        return interpolation_scale(self.regime, self.d, self.N, self.kappa)

    def metadata(self) -> Dict[str, Any]:
        return {"d": self.d, "N": self.N, "kappa": self.kappa, "regime": self.regime.value}


class FieldEnsemble:
    r"""Exact samples of the Gibbs field on the unknowns of a grid.

    Args:
        params (ModelParams): The model.
        geometry (GridGeometry): The grid; samples vanish off its unknowns.
        samples (numpy.ndarray): Array of shape ``(num_samples, n)``.
        seed (int): The seed that generated the samples.
    """

    def __init__(
        self,
        params: ModelParams,
        geometry: GridGeometry,
        samples: NDArray[np.float64],
        seed: int,
    ):
        assert samples.ndim == 2 and samples.shape[1] == geometry.n
        self.params = params
        self.geometry = geometry
        self.samples = samples
        self.seed = seed

    def __repr__(self) -> str:
        return f"FieldEnsemble(params={self.params}, num_samples={len(self)}, seed={self.seed})"

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __getitem__(self, i: int) -> GridFunction:
        return GridFunction.from_unknowns(self.geometry, self.samples[i])

    def extend(self, other: "FieldEnsemble") -> None:
        r"""Appends the samples of ``other`` (same model and grid)."""
        if other.params != self.params or other.geometry is not self.geometry:
            raise ValueError("Can only extend an ensemble with samples of the same model.")
        self.samples = np.concatenate([self.samples, other.samples], axis=0)

    def covariance(self) -> NDArray[np.float64]:
        r"""empirical covariance around the known zero mean"""
        return self.samples.T @ self.samples / len(self)

    def to_table(self) -> Table:
        num, n = self.samples.shape
        df = pd.DataFrame(
            {
                "sample_id": np.repeat(np.arange(num), n),
                "x_index": np.tile(np.arange(n), num),
                "value": self.samples.ravel(),
            }
        )
        return Table(df=df, metadata={**self.params.metadata(), "seed": self.seed})


def _sample_chunk(factor, n: int, seed: int, indices: Sequence[int]) -> NDArray[np.float64]:
    xi = np.stack([stream(seed, i).standard_normal(n) for i in indices], axis=1)
    return factor.sample(xi).T


def sample(
    params: ModelParams,
    g: GridGeometry,
    num_samples: int,
    seed: int,
    n_jobs: Optional[int] = None,
    progress: bool = False,
) -> FieldEnsemble:
    r"""Draws exact samples from the Gibbs measure.

    The precision :math:`-\Delta + \kappa\Delta^2` is factored once as
    :math:`PAP^T = LL^T`; sample ``i`` is :math:`P^TL^{-T}\xi` with :math:`\xi` from
    ``stream(seed, i)``, so the ensemble does not depend on ``n_jobs``.
    """
    if num_samples < 1:
        raise ValueError(f"num_samples must be positive (got {num_samples}).")
    if params.d != g.d or params.N != g.N:
        raise ValueError(f"{params} does not match {g}.")
    factor = assemble(params.spec, g, normalized=True).factor
    chunks = [range(i, min(i + CHUNK, num_samples)) for i in range(0, num_samples, CHUNK)]
    with timed(f"sampling {num_samples} fields on {g}"):
        parts = Parallel(n_jobs=num_threads(n_jobs), prefer="threads")(
            delayed(_sample_chunk)(factor, g.n, seed, chunk)
            for chunk in tqdm(chunks, disable=not progress, desc="samples")
        )
    return FieldEnsemble(params, g, np.concatenate(parts, axis=0), seed)


###### interpolation


class InterpolatedField:
    r"""The continuous interpolation :math:`\Psi_N` of one sample.

    Inside the cell with corner :math:`k = \lfloor Nt \rfloor` the value is
    linear on the simplex selected by the descending order of the
    fractional parts :math:`\{Nt_i\}`: starting from :math:`\varphi_k`, add
    :math:`\{Nt_{\sigma(i)}\}` times the increment along axis
    :math:`\sigma(i)`, walking the cell diagonal in that order.

    Args:
        sample (GridFunction): The field values.
        scale (float): The height scaling :math:`c_N(d)`.
    """

    def __init__(self, sample: GridFunction, scale: float):
        if sample.d > 3:
            raise ValueError(f"Interpolation is defined for d <= 3 (got {sample.d}).")
        self.sample = sample
        self.scale = scale

    def __repr__(self) -> str:
        return f"InterpolatedField(d={self.d}, N={self.N}, scale={self.scale:.6g})"

    @property
    def d(self) -> int:
        return self.sample.d

    @property
    def N(self) -> int:
        return self.sample.geometry.N

    def _check_domain(self, t: NDArray[np.float64]) -> None:
        tol = 1e-12
        if self.sample.geometry.domain.kind == DomainKind.BOX:
            inside = ((t >= -tol) & (t <= 1 + tol)).all(axis=-1)
        else:
            inside = (t**2).sum(axis=-1) <= 1 + tol
        if not inside.all():
            bad = t[~inside][0]
            raise OutOfDomain(f"Point {tuple(bad)} lies outside the closed domain.")

    def eval(self, t: NDArray[np.float64], order: Optional[NDArray[np.int64]] = None) -> NDArray[np.float64]:
        r"""Evaluates :math:`\Psi_N` at points ``t`` of shape ``(m, d)`` (or a
        single point). ``order`` overrides the axis order per point, e.g. to
        evaluate the other branch on ties."""
        t = np.asarray(t, dtype=np.float64)
        single = t.ndim == 1
        t = np.atleast_2d(t)
        self._check_domain(t)
        g = self.sample.geometry
        scaled = t * self.N
        corner = np.floor(scaled).astype(np.int64)
        frac = scaled - corner
        if order is None:
            order = np.argsort(-frac, axis=1, kind="stable")
        order = np.atleast_2d(order)
        rows = np.arange(len(t))

        vertex = corner - g.origin
        prev = self.sample.values[tuple(vertex.T)]
        total = prev.copy()
        for i in range(self.d):
            axis = order[:, i]
            vertex = vertex.copy()
            vertex[rows, axis] += 1
            cur = self.sample.values[tuple(vertex.T)]
            total += frac[rows, axis] * (cur - prev)
            prev = cur
        out = self.scale * total
        return out[0] if single else out

    __call__ = eval


def interpolate(sample: GridFunction, params: ModelParams) -> InterpolatedField:
    return InterpolatedField(sample, params.interpolation_scale)


###### pairings


def _on_unknowns(g: GridGeometry, f: Callable) -> NDArray[np.float64]:
    return np.asarray(f(g.coordinates(g.unknowns)), dtype=np.float64)


def pair(ensemble: FieldEnsemble, f: Callable) -> NDArray[np.float64]:
    r""":math:`(\Psi_N, f) = s\sum_{x} \varphi_x f(x/N)` for every sample,
    with ``s`` the pairing scale of the regime."""
    fvec = _on_unknowns(ensemble.geometry, f)
    return ensemble.params.pairing_scale * (ensemble.samples @ fvec)


def pairing_variance(params: ModelParams, g: GridGeometry, f: Callable, route: str = "scaled") -> float:
    r"""Exact :math:`\mathrm{Var}[(\Psi_N, f)]`.

    ``route="scaled"`` solves the rescaled Dirichlet problem of the regime
    for :math:`H_N` and returns :math:`c N^{-d}\sum_x H_N(x) f(x)`;
    ``route="lattice"`` applies the lattice Green's function directly.
    """
    fvec = _on_unknowns(g, f)
    if route == "scaled":
        spec, factor = scaled_spec(params.regime, g, params.kappa)
        H = solve_dirichlet(assemble(spec, g, normalized=False), GridFunction.from_unknowns(g, fvec))
        return float(factor * g.N ** (-g.d) * np.dot(H.on_unknowns(), fvec))
    if route == "lattice":
        G = green_function(g, params.kappa)
        x = G.operator.factor.solve(fvec)
        return float(params.pairing_scale**2 * np.dot(fvec, x))
    raise ValueError(f"Unknown route '{route}' (use 'scaled' or 'lattice').")


def pairings_table(values: NDArray[np.float64], params: ModelParams, f_name: str, seed: int) -> Table:
    df = pd.DataFrame({"sample_id": np.arange(len(values)), "pairing": values})
    return Table(df=df, metadata={**params.metadata(), "f": f_name, "seed": seed})


def gradient_increments(ensemble: FieldEnsemble, axis: int = 0) -> NDArray[np.float64]:
    r"""Empirical :math:`E[(\varphi_{x+e} - \varphi_x)^2]` along ``axis`` on
    the whole lattice, boundary zeros included."""
    g = ensemble.geometry
    full = np.zeros((len(ensemble),) + g.shape)
    full[:, g.interior_mask] = ensemble.samples
    diffs = np.diff(full, axis=axis + 1)
    return (diffs**2).mean(axis=0)
