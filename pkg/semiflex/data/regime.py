import math
from enum import Enum


class Regime(str, Enum):
    r"""Scaling regime of the stiffness :math:`\kappa(N)` against :math:`N^2`.

    Attributes:
        SUB: :math:`\kappa \ll N^2`; the gradient term dominates and the field
            scales like a free field.
        CRITICAL: :math:`\kappa \sim 2dN^2`; both terms survive in the limit.
        SUPER: :math:`\kappa \gg N^2`; the Laplacian term dominates and the
            field scales like a membrane.
    """

    SUB = "sub"
    CRITICAL = "critical"
    SUPER = "super"


SUB_THRESHOLD = 0.1
SUPER_THRESHOLD = 10.0


def infer_regime(d: int, N: int, kappa: float) -> Regime:
    r"""classify by :math:`\kappa / (2dN^2)`"""
    ratio = kappa / (2 * d * N**2)
    if ratio < SUB_THRESHOLD:
        return Regime.SUB
    if ratio > SUPER_THRESHOLD:
        return Regime.SUPER
    return Regime.CRITICAL


def pairing_scale(regime: Regime, d: int, N: int, kappa: float) -> float:
    r"""Prefactor of the pairing :math:`(\Psi_N, f) = s \sum_x \varphi_x f(x/N)`.

    :math:`s = (2d)^{-1}\sqrt{\kappa}N^{-(d+4)/2}` in the super and critical
    regimes and :math:`s = (2d)^{-1/2}N^{-(d+2)/2}` in the sub regime.
    """
    if Regime(regime) == Regime.SUB:
        return (2 * d) ** -0.5 * N ** (-(d + 2) / 2)
    return math.sqrt(kappa) / (2 * d) * N ** (-(d + 4) / 2)


def interpolation_scale(regime: Regime, d: int, N: int, kappa: float) -> float:
    r"""Height scaling :math:`c_N(d)` of the continuous interpolation."""
    if Regime(regime) == Regime.SUB:
        return (2 * d) ** -0.5 * N ** ((d - 2) / 2)
    return math.sqrt(kappa) / (2 * d) * N ** ((d - 4) / 2)
