from typing import Dict, Optional, Sequence, Tuple

from semiflex.convergence.case import (
    QUADRATIC,
    SIN,
    SIN2,
    ConvergenceCase,
    ManufacturedSolution,
    default_rho_rules,
    parse_rho_rule,
)
from semiflex.discrete.operators import OperatorBase

default_ladders: Dict[int, Tuple[int, ...]] = {
    1: (16, 32, 64, 128, 256),
    2: (16, 32, 64),
    3: (8, 12, 16),
}


def _ladder(d: int, ladder: Optional[Sequence[int]]) -> Tuple[int, ...]:
    if ladder is not None:
        return tuple(ladder)
    if d not in default_ladders:
        raise ValueError(f"Manufactured cases exist for d in {list(default_ladders)} (got {d}).")
    return default_ladders[d]


def manufactured(
    kind: OperatorBase,
    d: int,
    rho: Optional[str] = None,
    ladder: Optional[Sequence[int]] = None,
) -> ConvergenceCase:
    r"""The manufactured case of an operator family on the unit box.

    Fourth-order families use :math:`u = \prod_i \sin^2(\pi x_i)`, whose
    value and gradient vanish on the boundary; the negative Laplacian uses
    :math:`u = \prod_i \sin(\pi x_i)`.
    """
    kind = OperatorBase(kind)
    profile = SIN if kind == OperatorBase.NEG_LAPLACIAN else SIN2
    rho = default_rho_rules[kind] if rho is None else rho
    case = ConvergenceCase(
        name=kind.value,
        kind=kind,
        solution=ManufacturedSolution(profile, d),
        rho=parse_rho_rule(rho, kind, d),
        ladder=_ladder(d, ladder),
    )
    case.check_boundary()
    return case


def quadratic(
    d: int, rho: Optional[str] = None, ladder: Optional[Sequence[int]] = None
) -> ConvergenceCase:
    r"""Product of quadratics :math:`\prod_i x_i(1 - x_i)` under the negative
    Laplacian with :math:`\rho_1 = 0` and exact boundary values; the
    discrete Laplacian reproduces it up to rounding."""
    kind = OperatorBase.NEG_LAPLACIAN
    return ConvergenceCase(
        name="quadratic",
        kind=kind,
        solution=ManufacturedSolution(QUADRATIC, d),
        rho=parse_rho_rule("0" if rho is None else rho, kind, d),
        ladder=_ladder(d, ladder),
        boundary="exact",
    )


case_dict = {
    "bilaplacian": lambda d, **kwargs: manufactured(OperatorBase.BILAPLACIAN, d, **kwargs),
    "mixed": lambda d, **kwargs: manufactured(OperatorBase.MIXED, d, **kwargs),
    "neg-laplacian": lambda d, **kwargs: manufactured(OperatorBase.NEG_LAPLACIAN, d, **kwargs),
    "quadratic": quadratic,
}

case_names = list(case_dict.keys())


def get_case(name: str, d: int, *args, **kwargs) -> ConvergenceCase:
    r"""Returns a manufactured case by name."""
    if name not in case_dict:
        raise ValueError(f"Unknown convergence case '{name}' (known: {case_names}).")
    return case_dict[name](d, *args, **kwargs)
