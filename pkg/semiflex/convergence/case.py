import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Tuple

import numpy as np
from numpy.typing import NDArray

from semiflex.discrete.operators import OperatorBase, multi_indices
from semiflex.errors import UsageError
from semiflex.utils import parse_kappa_rule, stream

NUM_SUP_SAMPLES = 10_001
BOUNDARY_TOL = 1e-12


###### one-dimensional profiles


@dataclass(frozen=True)
class Profile:
    r"""A smooth function :math:`p` on :math:`[0, 1]` with closed-form
    derivatives. Manufactured solutions are products
    :math:`u(x) = \prod_i p(x_i)`.

    Args:
        name (str): Registry name.
        derivative (Callable): ``derivative(x, k)`` evaluates
            :math:`p^{(k)}(x)`.
        vanishing_order (int): Number of derivatives
            :math:`p, p', \ldots` that vanish at both end points.
    """

    name: str
    derivative: Callable[[NDArray[np.float64], int], NDArray[np.float64]]
    vanishing_order: int

    def __call__(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.derivative(x, 0)

    def sup(self, k: int) -> float:
        r""":math:`\sup|p^{(k)}|` over a dense sample containing the
        quarter points"""
        return _sup(self, k)


@lru_cache(maxsize=None)
def _sup(profile: Profile, k: int) -> float:
    x = np.linspace(0.0, 1.0, NUM_SUP_SAMPLES)
    return float(np.abs(profile.derivative(x, k)).max())


def _sin(x: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    return math.pi**k * np.sin(math.pi * x + k * math.pi / 2)


def _sin2(x: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    # sin^2(pi x) = (1 - cos(2 pi x)) / 2
    if k == 0:
        return np.sin(math.pi * x) ** 2
    return -0.5 * (2 * math.pi) ** k * np.cos(2 * math.pi * x + k * math.pi / 2)


def _quadratic(x: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    if k == 0:
        return x * (1.0 - x)
    if k == 1:
        return 1.0 - 2.0 * x
    if k == 2:
        return np.full_like(x, -2.0)
    return np.zeros_like(x)


SIN = Profile("sin", _sin, vanishing_order=1)
SIN2 = Profile("sin2", _sin2, vanishing_order=2)
QUADRATIC = Profile("quadratic", _quadratic, vanishing_order=1)


###### manufactured solutions


@dataclass(frozen=True)
class ManufacturedSolution:
    r"""The product solution :math:`u(x) = \prod_{i=1}^d p(x_i)` on the unit
    box.

    Args:
        profile (Profile): The one-dimensional factor.
        d (int): The dimension.
    """

    profile: Profile
    d: int

    def partial(self, alpha: Tuple[int, ...], x: NDArray[np.float64]) -> NDArray[np.float64]:
        r""":math:`D^\alpha u` at points ``x`` of shape ``(m, d)``"""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        assert len(alpha) == self.d == x.shape[1]
        out = np.ones(x.shape[0])
        for i, k in enumerate(alpha):
            out = out * self.profile.derivative(x[:, i], k)
        return out

    def __call__(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.partial((0,) * self.d, x)

    def laplacian(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return sum(self.partial(_unit(self.d, i, 2), x) for i in range(self.d))

    def bilaplacian(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return sum(
            self.partial(tuple(a + b for a, b in zip(_unit(self.d, i, 2), _unit(self.d, j, 2))), x)
            for i in range(self.d)
            for j in range(self.d)
        )

    def M(self, k: int) -> float:
        r""":math:`M_k = \sum_{|\alpha| \le k}\sup|D^\alpha u|`; the sup of a
        product of one-variable factors is the product of their sups."""
        sups = [self.profile.sup(j) for j in range(k + 1)]
        return float(sum(math.prod(sups[a] for a in alpha) for alpha in multi_indices(self.d, k)))

    def boundary_samples(self, num: int, seed: int = 0) -> NDArray[np.float64]:
        r"""``num`` points on the faces of :math:`[0, 1]^d`"""
        if self.d == 1:
            return np.array([[0.0], [1.0]])
        rng = stream(seed, 0)
        points = rng.random((num, self.d))
        face = rng.integers(0, self.d, size=num)
        points[np.arange(num), face] = rng.integers(0, 2, size=num).astype(np.float64)
        return points


def _unit(d: int, i: int, k: int) -> Tuple[int, ...]:
    return tuple(k if j == i else 0 for j in range(d))


###### rho rules


@dataclass(frozen=True)
class RhoRule:
    r"""An injectable coefficient rule :math:`\rho(h)`.

    Args:
        text (str): The rule as written.
        func (Callable): Maps the mesh width to the coefficient.
    """

    text: str
    func: Callable[[float], float] = field(compare=False)

    def __call__(self, h: float) -> float:
        return float(self.func(h))

    def __str__(self) -> str:
        return self.text


rho_rule_dict: Dict[str, Callable[[float], float]] = {
    "0": lambda h: 0.0,
    "h^2": lambda h: h**2,
    "h": lambda h: h,
    "sqrt(h)": lambda h: math.sqrt(h),
    "1+h": lambda h: 1.0 + h,
}

default_rho_rules = {
    OperatorBase.BILAPLACIAN: "h",
    OperatorBase.MIXED: "1+h",
    OperatorBase.NEG_LAPLACIAN: "h^2",
}


def parse_rho_rule(text: str, kind: OperatorBase, d: int) -> RhoRule:
    r"""Parses a named rule (``0``, ``h^2``, ``h``, ``sqrt(h)``, ``1+h``), a
    literal float, or ``kappa=<kappa rule>``, which ties the coefficient to
    the stiffness of the model at :math:`N = 1/h` the way the rescaled
    regimes do: :math:`2d/(\kappa h^2)` for the bilaplacian and
    :math:`\kappa h^2/(2d)` otherwise."""
    text = str(text).strip()
    if text in rho_rule_dict:
        return RhoRule(text, rho_rule_dict[text])
    if text.startswith("kappa="):
        kappa = parse_kappa_rule(text[len("kappa="):])
        if OperatorBase(kind) == OperatorBase.BILAPLACIAN:
            return RhoRule(text, lambda h: 2 * d / (kappa(round(1 / h)) * h**2))
        return RhoRule(text, lambda h: kappa(round(1 / h)) * h**2 / (2 * d))
    try:
        value = float(text)
    except ValueError:
        raise UsageError(
            f"Cannot parse rho rule '{text}' (known: {list(rho_rule_dict)}, a "
            f"float, or 'kappa=<rule>')."
        ) from None
    if not math.isfinite(value) or value < 0:
        raise UsageError(f"rho must be finite and non-negative (got '{text}').")
    return RhoRule(text, lambda h: value)


###### cases


@dataclass(frozen=True)
class ConvergenceCase:
    r"""A manufactured continuum Dirichlet problem :math:`Lu = f` on the unit
    box together with its discretization schedule.

    The continuum operator is :math:`\Delta^2` for the bilaplacian,
    :math:`-\Delta + \Delta^2` for the mixed operator and :math:`-\Delta`
    for the negative Laplacian; the discrete operator carries the
    coefficient :math:`\rho(h)` on its lower- or higher-order part.

    Args:
        name (str): Registry name.
        kind (OperatorBase): The operator family.
        solution (ManufacturedSolution): The exact solution :math:`u`.
        rho (RhoRule): The coefficient rule.
        ladder (Tuple[int, ...]): Mesh sizes :math:`N = 1/h`, coarsest first.
        boundary (str): ``"zero"`` imposes :math:`u_h = 0` on :math:`B_h`;
            ``"exact"`` imposes the values of :math:`u`.
            (default: :obj:`"zero"`)
    """

    name: str
    kind: OperatorBase
    solution: ManufacturedSolution
    rho: RhoRule
    ladder: Tuple[int, ...]
    boundary: str = "zero"

    def __post_init__(self):
        object.__setattr__(self, "kind", OperatorBase(self.kind))
        object.__setattr__(self, "ladder", tuple(int(N) for N in self.ladder))
        if self.boundary not in ("zero", "exact"):
            raise ValueError(f"Unknown boundary mode '{self.boundary}'.")
        if self.solution.profile.vanishing_order < self.kind.order and self.boundary == "zero":
            raise ValueError(
                f"{self.solution.profile.name} does not satisfy the boundary "
                f"conditions of a {self.kind.value} problem."
            )

    def __repr__(self) -> str:
        return (
            f"ConvergenceCase(name={self.name}, kind={self.kind.value}, "
            f"d={self.d}, rho={self.rho}, ladder={list(self.ladder)})"
        )

    @property
    def d(self) -> int:
        return self.solution.d

    @property
    def m(self) -> int:
        return self.kind.order

    def u(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.solution(x)

    def f(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.kind == OperatorBase.BILAPLACIAN:
            return self.solution.bilaplacian(x)
        if self.kind == OperatorBase.MIXED:
            return self.solution.bilaplacian(x) - self.solution.laplacian(x)
        return -self.solution.laplacian(x)

    def M(self, k: int) -> float:
        return self.solution.M(k)

    def bound(self, h: float) -> float:
        r"""The error bound without its constant, evaluated at ``h``."""
        rho = self.rho(h)
        M = self.M
        if self.kind == OperatorBase.BILAPLACIAN:
            return M(5) ** 2 * h**2 + M(2) ** 2 * rho**2 + M(2) ** 2 * h
        if self.kind == OperatorBase.MIXED:
            return (
                M(5) ** 2 * h**2
                + M(4) ** 2 * (rho - 1) ** 2
                + M(4) ** 2 * h**4
                + M(2) ** 2 * h
            )
        delta = max(h, math.sqrt(rho))
        return M(4) ** 2 * delta**4 + M(2) ** 2 * rho * delta + M(1) ** 2 * delta

    def boundary_defect(self, num: int = 1000, seed: int = 0) -> float:
        r"""Largest :math:`|D^\alpha u|`, :math:`|\alpha| \le m - 1`, over
        ``num`` samples of the boundary of the box."""
        points = self.solution.boundary_samples(num, seed)
        return max(
            float(np.abs(self.solution.partial(a, points)).max())
            for a in multi_indices(self.d, self.m - 1)
        )

    def check_boundary(self, num: int = 1000, seed: int = 0) -> None:
        defect = self.boundary_defect(num, seed)
        if self.boundary == "zero" and defect > BOUNDARY_TOL:
            raise ValueError(
                f"{self} violates its boundary conditions (defect {defect:.2e})."
            )
