import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import fft, ndimage, signal

from semiflex.data.function import GridFunction
from semiflex.data.grid import GridGeometry
from semiflex.errors import NonSymmetricStencil
from semiflex.utils import stream


class OperatorBase(str, Enum):
    r"""Base of the discrete operator :math:`L_h`.

    Attributes:
        NEG_LAPLACIAN: :math:`-\Delta_h + \rho_1 \Delta_h^2`, order ``m = 1``.
        BILAPLACIAN: :math:`-\rho_2 \Delta_h + \Delta_h^2`, order ``m = 2``.
        MIXED: :math:`-\Delta_h + \rho_3 \Delta_h^2`, order ``m = 2``.
    """

    NEG_LAPLACIAN = "neg-laplacian"
    BILAPLACIAN = "bilaplacian"
    MIXED = "neg-laplacian-plus-bilaplacian"

    @classmethod
    def _missing_(cls, value):
        if value == "mixed":
            return cls.MIXED
        return None

    @property
    def order(self) -> int:
        return 1 if self == OperatorBase.NEG_LAPLACIAN else 2


@dataclass(frozen=True)
class MixedOperatorSpec:
    r"""The N-dependent operator :math:`L_h`.

    Args:
        base (OperatorBase): Which of the three operator families.
        rho (float): The coefficient :math:`\rho_1`, :math:`\rho_2` or
            :math:`\rho_3`.
        h (float): The mesh width.
    """

    base: OperatorBase
    rho: float
    h: float

    def __post_init__(self):
        object.__setattr__(self, "base", OperatorBase(self.base))
        if not math.isfinite(self.rho) or self.rho < 0:
            raise ValueError(f"rho must be finite and non-negative (got {self.rho}).")
        if not self.h > 0:
            raise ValueError(f"h must be positive (got {self.h}).")

    @property
    def m(self) -> int:
        return self.base.order


def lattice_spec(kappa: float) -> MixedOperatorSpec:
    r""":math:`-\Delta + \kappa\Delta^2` on the unit lattice; assemble it with
    ``normalized=True`` for the precision of the Gibbs field"""
    return MixedOperatorSpec(OperatorBase.NEG_LAPLACIAN, rho=float(kappa), h=1.0)


###### stencils


def _embed(kernel: NDArray[np.float64], size: int) -> NDArray[np.float64]:
    pad = (size - kernel.shape[0]) // 2
    return np.pad(kernel, pad)


def laplacian_kernel(d: int, normalized: bool) -> NDArray[np.float64]:
    r"""The unit-spacing Laplacian stencil; divided by ``2d`` if
    ``normalized``."""
    kernel = np.zeros((3,) * d)
    center = (1,) * d
    kernel[center] = -2.0 * d
    for i in range(d):
        for side in (0, 2):
            kernel[center[:i] + (side,) + center[i + 1 :]] = 1.0
    if normalized:
        kernel /= 2 * d
    return kernel


def stencil(spec: MixedOperatorSpec, d: int, normalized: bool) -> NDArray[np.float64]:
    r"""The stencil of :math:`h^{2m} L_h`, composed from the Laplacian.

    Returns a centered array of shape ``(5,) * d``.
    """
    lap = laplacian_kernel(d, normalized)
    bilap = signal.convolve(lap, lap, method="direct")
    lap = _embed(lap, 5)
    h = spec.h
    if spec.base == OperatorBase.NEG_LAPLACIAN:
        return -lap + spec.rho * h**-2 * bilap
    if spec.base == OperatorBase.BILAPLACIAN:
        return -spec.rho * h**2 * lap + bilap
    return -(h**2) * lap + spec.rho * bilap


def _apply(
    kernel: NDArray[np.float64], u: GridFunction, scale: float = 1.0
) -> GridFunction:
    values = scale * ndimage.correlate(u.values, kernel, mode="constant", cval=0.0)
    footprint = (kernel != 0).astype(np.float64)
    support = ndimage.correlate(u.support.astype(np.float64), footprint, mode="constant") > 0
    return GridFunction(u.geometry, np.where(support, values, 0.0), support)


def _difference_kernel(d: int, j: int, backward: bool) -> NDArray[np.float64]:
    shape = [1] * d
    shape[j] = 3
    taps = [-1.0, 1.0, 0.0] if backward else [0.0, -1.0, 1.0]
    return np.array(taps).reshape(shape)


###### derivatives


def forward_diff(u: GridFunction, j: int) -> GridFunction:
    r""":math:`(\partial_j u)(x) = (u(x + he_j) - u(x))/h`"""
    return _apply(_difference_kernel(u.d, j, backward=False), u, 1.0 / u.h)


def backward_diff(u: GridFunction, j: int) -> GridFunction:
    r""":math:`(\bar\partial_j u)(x) = (u(x) - u(x - he_j))/h`"""
    return _apply(_difference_kernel(u.d, j, backward=True), u, 1.0 / u.h)


def derivative(u: GridFunction, alpha: Tuple[int, ...], backward: bool = False) -> GridFunction:
    r""":math:`\partial^\alpha u` (or :math:`\bar\partial^\alpha u`) for a
    multi-index ``alpha``"""
    diff = backward_diff if backward else forward_diff
    for j, count in enumerate(alpha):
        for _ in range(count):
            u = diff(u, j)
    return u


def multi_indices(d: int, m: int) -> List[Tuple[int, ...]]:
    r"""all :math:`\alpha` with :math:`|\alpha| \le m`"""
    return [a for a in itertools.product(range(m + 1), repeat=d) if sum(a) <= m]


def laplacian_h(u: GridFunction, normalized: bool) -> GridFunction:
    return _apply(laplacian_kernel(u.d, normalized), u, u.h**-2)


def bilaplacian_h(u: GridFunction, normalized: bool) -> GridFunction:
    return laplacian_h(laplacian_h(u, normalized), normalized)


def apply_Qh(u: GridFunction, m: int) -> GridFunction:
    r""":math:`Q_h u = \sum_j (\partial_j \bar\partial_j)^m u`"""
    out = GridFunction.zeros(u.geometry)
    for j in range(u.d):
        v = u
        for _ in range(m):
            v = forward_diff(backward_diff(v, j), j)
        out = out + v
    return out


###### operators


def apply_Lh(spec: MixedOperatorSpec, u: GridFunction, normalized: bool) -> GridFunction:
    kernel = stencil(spec, u.d, normalized)
    return _apply(kernel, u, spec.h ** (-2 * spec.m))


def apply_Lh2(spec: MixedOperatorSpec, u: GridFunction, normalized: bool) -> GridFunction:
    r"""The truncated operator :math:`L_{h,2}`: :math:`L_h u` on
    :math:`R^*_h`, :math:`h^2 L_h u` on :math:`B^*_h`, zero elsewhere."""
    if spec.m != 2:
        raise ValueError(f"L_h2 is defined for fourth-order bases (got {spec.base.value}).")
    g = u.geometry
    Lu = apply_Lh(spec, u, normalized)
    values = np.where(g.deep_mask, Lu.values, 0.0)
    values = np.where(g.near_boundary_mask, spec.h**2 * Lu.values, values)
    return GridFunction(g, values, g.interior_mask.copy())


def restrict(u: GridFunction) -> GridFunction:
    r"""The restriction :math:`R_h u`: zero outside :math:`R_h`."""
    return u.masked(u.geometry.interior_mask)


###### norms


def grid_inner(u: GridFunction, v: GridFunction) -> float:
    assert u.geometry is v.geometry
    return float(u.h**u.d * np.sum(u.values * v.values))


def grid_norm(u: GridFunction) -> float:
    return math.sqrt(grid_inner(u, u))


def sobolev_norm(u: GridFunction, m: int) -> float:
    r""":math:`\|u\|_{h,m}^2 = \sum_{|\alpha| \le m} \|\partial^\alpha u\|^2`"""
    return math.sqrt(sum(grid_norm(derivative(u, a)) ** 2 for a in multi_indices(u.d, m)))


def weighted_norm(u: GridFunction, m: int) -> float:
    r"""The weighted norm that charges :math:`B^*_h` with :math:`h^{-m}`."""
    g = u.geometry
    deep = np.sum(u.values[g.deep_mask] ** 2)
    near = np.sum((u.h**-m * u.values[g.near_boundary_mask]) ** 2)
    return math.sqrt(u.h**u.d * (deep + near))


###### symbols


def char_poly(
    spec: MixedOperatorSpec, theta: NDArray[np.float64], normalized: bool
) -> NDArray[np.float64]:
    r"""Characteristic polynomial :math:`p(\theta) = \sum_\eta c_\eta
    e^{i\langle\eta,\theta\rangle}` of the stencil of :math:`h^{2m}L_h`.

    Args:
        spec (MixedOperatorSpec): The operator.
        theta (numpy.ndarray): Frequencies of shape ``(..., d)``.
        normalized (bool): Whether the Laplacian is divided by ``2d``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    d = theta.shape[-1]
    kernel = stencil(spec, d, normalized)
    offsets = np.argwhere(kernel != 0)
    coef = kernel[tuple(offsets.T)]
    phase = theta @ (offsets - 2).T
    p = (coef * np.exp(1j * phase)).sum(axis=-1)
    tol = 1e-12 * max(1.0, float(np.abs(coef).sum()))
    if np.abs(p.imag).max(initial=0.0) > tol:
        raise NonSymmetricStencil(
            f"Stencil of {spec} has a symbol with imaginary part "
            f"{np.abs(p.imag).max():.3e}."
        )
    return p.real


def q_symbol(theta: NDArray[np.float64], m: int) -> NDArray[np.float64]:
    r"""symbol :math:`2^m\sum_j (1-\cos\theta_j)^m` of :math:`(-1)^m Q_h` at
    unit spacing"""
    theta = np.asarray(theta, dtype=np.float64)
    return 2.0**m * ((1.0 - np.cos(theta)) ** m).sum(axis=-1)


def plancherel_form(spec: MixedOperatorSpec, u: GridFunction, normalized: bool) -> float:
    r"""Evaluates :math:`h^{d-2m}(2\pi)^{-d}\int p(\theta)|\hat u(\theta)|^2
    d\theta`.

    The trapezoidal rule on a periodic grid two stencil radii larger than the
    lattice integrates the trigonometric polynomial exactly, so the result
    equals :math:`\langle L_h u, u\rangle_{h,grid}` up to round-off.
    """
    sizes = [s + 4 for s in u.values.shape]
    u_hat = fft.fftn(u.values, s=sizes)
    axes = [2 * np.pi * np.arange(s) / s for s in sizes]
    theta = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    p = char_poly(spec, theta, normalized)
    return float(u.h ** (u.d - 2 * spec.m) * np.mean(p * np.abs(u_hat) ** 2))


###### audits


def random_interior_function(g: GridGeometry, rng: np.random.Generator) -> GridFunction:
    return GridFunction.from_unknowns(g, rng.standard_normal(g.n))


def norm_audit(
    g: GridGeometry,
    lhs: Callable[[GridFunction], float],
    rhs: Callable[[GridFunction], float],
    num_samples: int = 50,
    seed: int = 0,
    sampler: Optional[Callable[[GridGeometry, np.random.Generator], GridFunction]] = None,
) -> NDArray[np.float64]:
    r"""Ratios ``lhs(u) / rhs(u)`` over random functions supported on
    :math:`R_h`, the raw material for fitting the constant of a norm
    inequality :math:`\mathrm{lhs} \le C \cdot \mathrm{rhs}`."""
    sampler = sampler or random_interior_function
    ratios = np.empty(num_samples)
    for i in range(num_samples):
        u = sampler(g, stream(seed, i))
        ratios[i] = lhs(u) / rhs(u)
    return ratios
