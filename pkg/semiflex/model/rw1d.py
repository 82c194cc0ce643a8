r"""The one-dimensional walk representation of the mixed model.

The increments of the walk are an AR(1) sequence :math:`Y_n = \gamma Y_{n-1} +
\varepsilon_n` with :math:`\varepsilon_n \sim N(0, \sigma^2)`, so that
:math:`W_n = \sum_{k \le n} Y_k = S_n - U_n` with :math:`S_n = \sum_{k \le n}
\tilde\varepsilon_k`, :math:`U_n = \gamma(U_{n-1} + \tilde\varepsilon_n)` and
:math:`\tilde\varepsilon = \varepsilon / (1 - \gamma)`. Conditioning the walk
on :math:`W_N = W_{N+1} = 0` gives the Gibbs measure on :math:`\{1, \dots,
N-1\}`.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple

import mpmath
import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from numpy.typing import NDArray
from scipy import linalg, signal
from tqdm import tqdm

from semiflex.data.grid import Classification, Domain, DomainKind, build_grid
from semiflex.data.table import Table
from semiflex.discrete.dirichlet import assemble
from semiflex.discrete.operators import MixedOperatorSpec, OperatorBase
from semiflex.errors import DegenerateDenominator, SingularConditioning
from semiflex.metrics import least_squares
from semiflex.utils import KappaRule, num_threads, stream

logger = logging.getLogger(__name__)

DPS = 50
CHUNK = 64
# Switch to mpmath when the walk is this close to an integrated walk.
PRECISE_GAP = 1e-3
PRECISE_N = 10_000


def gamma_sigma(kappa: float) -> Tuple[float, float]:
    r"""Returns :math:`(\gamma, \sigma^2)` for stiffness ``kappa``.

    With :math:`\beta = 16\kappa`, :math:`\sigma^2 = 4/(1 + \beta +
    \sqrt{1+2\beta})` and :math:`\gamma = \beta\sigma^2/4`, the
    cancellation-free form of :math:`((1+\beta-\sqrt{1+2\beta}) /
    (1+\beta+\sqrt{1+2\beta}))^{1/2}`.
    """
    if not math.isfinite(kappa) or kappa < 0:
        raise ValueError(f"kappa must be finite and non-negative (got {kappa}).")
    beta = 16.0 * kappa
    denom = 1.0 + beta + math.sqrt(1.0 + 2.0 * beta)
    return beta / denom, 4.0 / denom


def _gamma_sigma_mp(kappa: float) -> Tuple[mpmath.mpf, mpmath.mpf, mpmath.mpf]:
    beta = 16 * mpmath.mpf(kappa)
    root = mpmath.sqrt(1 + 2 * beta)
    denom = 1 + beta + root
    return beta / denom, (1 + root) / denom, 4 / denom


@dataclass(frozen=True)
class RWParams:
    r"""Parameters of the walk.

    Args:
        N (int): Length of the conditioned chain.
        kappa (float): The stiffness :math:`\kappa \ge 0`.
    """

    N: int
    kappa: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer (got {self.N}).")
        if not math.isfinite(self.kappa) or self.kappa < 0:
            raise ValueError(f"kappa must be finite and non-negative (got {self.kappa}).")

    @property
    def beta(self) -> float:
        return 16.0 * self.kappa

    @cached_property
    def gamma(self) -> float:
        return gamma_sigma(self.kappa)[0]

    @cached_property
    def sigma2(self) -> float:
        return gamma_sigma(self.kappa)[1]

    @cached_property
    def one_minus_gamma(self) -> float:
        r""":math:`1-\gamma` without cancellation"""
        root = math.sqrt(1.0 + 2.0 * self.beta)
        return (1.0 + root) / (1.0 + self.beta + root)

    @property
    def zeta(self) -> float:
        if self.kappa == 0:
            return math.inf
        inv = 1.0 / self.beta
        return inv + math.sqrt(inv) * math.sqrt(inv + 2.0)

    @property
    def step_std(self) -> float:
        r"""standard deviation of :math:`\tilde\varepsilon`"""
        return math.sqrt(self.sigma2) / self.one_minus_gamma

    def needs_precision(self) -> bool:
        return self.one_minus_gamma < PRECISE_GAP or self.N >= PRECISE_N


###### variances


def _one_minus_power(omg: float, n: NDArray[np.float64]) -> NDArray[np.float64]:
    r""":math:`1 - \gamma^n` given :math:`1 - \gamma`"""
    if omg >= 1.0:
        return np.ones_like(n, dtype=np.float64)
    return -np.expm1(n * np.log1p(-omg))


def var_W(n: int, params: RWParams, precise: Optional[bool] = None) -> float:
    r"""Closed form of :math:`\mathrm{Var}(W_n)`.

    .. math::
        \frac{n\sigma^2}{(1-\gamma)^2}
        - \frac{\sigma^2\gamma^2(1-\gamma^n)^2}{(1-\gamma)^3(1+\gamma)}
        - \frac{2\sigma^2\gamma(1-\gamma^n)}{(1-\gamma)^3(1+\gamma)}

    The terms cancel badly when :math:`n(1-\gamma)` is small; the formula is
    then evaluated with mpmath unless ``precise`` says otherwise.
    """
    if n < 1:
        raise ValueError(f"n must be positive (got {n}).")
    if precise is None:
        precise = params.gamma > 0 and n * params.one_minus_gamma < 1.0
    if precise:
        with mpmath.workdps(DPS):
            g, omg, s2 = _gamma_sigma_mp(params.kappa)
            a = 1 - g**n
            value = (
                n * s2 / omg**2
                - s2 * g**2 * a**2 / (omg**3 * (1 + g))
                - 2 * s2 * g * a / (omg**3 * (1 + g))
            )
            return float(value)
    g, omg, s2 = params.gamma, params.one_minus_gamma, params.sigma2
    a = float(_one_minus_power(omg, np.float64(n)))
    return (
        n * s2 / omg**2
        - s2 * g**2 * a**2 / (omg**3 * (1 + g))
        - 2 * s2 * g * a / (omg**3 * (1 + g))
    )


def var_W_series(n: int, params: RWParams) -> float:
    r""":math:`\sigma^2\sum_{j<n} r_j^2` with :math:`r_j = 1 + \gamma r_{j-1}`,
    the stable O(n) route"""
    r, total = 0.0, 0.0
    for _ in range(n):
        r = 1.0 + params.gamma * r
        total += r * r
    return params.sigma2 * total


def var_S(n: int, params: RWParams) -> float:
    return n * params.sigma2 / params.one_minus_gamma**2


def var_U(n: int, params: RWParams) -> float:
    g, omg = params.gamma, params.one_minus_gamma
    if g == 0:
        return 0.0
    a2 = float(_one_minus_power(omg, np.float64(2 * n)))
    return params.sigma2 * g**2 * a2 / (omg**2 * (1 - g * g))


def cov_SU(n: int, params: RWParams) -> float:
    g, omg = params.gamma, params.one_minus_gamma
    a = float(_one_minus_power(omg, np.float64(n)))
    return params.sigma2 * g * a / omg**3


def var_W_asymptote(n: int, params: RWParams) -> float:
    r"""The integrated-walk limit :math:`\sigma^2 n(n+1)(2n+1)/6`, reached when
    :math:`n(1-\gamma) \to 0`."""
    return params.sigma2 * n * (n + 1) * (2 * n + 1) / 6.0


###### simulation


def _simulate_chunk(
    params: RWParams, seed: int, indices: Sequence[int], length: int, method: str
) -> NDArray[np.float64]:
    eps = np.stack([stream(seed, i).standard_normal(length) for i in indices])
    eps *= params.step_std
    g = params.gamma
    if method == "walk":
        S = np.cumsum(eps, axis=1)
        U = signal.lfilter([g], [1.0, -g], eps, axis=1)
        return S - U
    if method == "increments":
        Y = signal.lfilter([1.0], [1.0, -g], params.one_minus_gamma * eps, axis=1)
        return np.cumsum(Y, axis=1)
    raise ValueError(f"Unknown simulation method '{method}'.")


def simulate_W(
    params: RWParams,
    seed: int,
    n_paths: int,
    length: Optional[int] = None,
    method: str = "walk",
    n_jobs: Optional[int] = None,
    progress: bool = False,
) -> NDArray[np.float64]:
    r"""Simulates paths :math:`(W_1, \dots, W_{\text{length}})`.

    Path ``i`` draws its increments from ``stream(seed, i)``, so the output
    does not depend on ``n_jobs``.

    Args:
        params (RWParams): The walk.
        seed (int): The run seed.
        n_paths (int): Number of paths.
        length (int, optional): Number of steps, ``params.N`` by default.
        method (str): ``"walk"`` builds :math:`S - U`, ``"increments"``
            sums the AR(1) increments.
        n_jobs (int, optional): Worker threads, capped by
            ``SEMIFLEX_THREADS``.
        progress (bool): Show a progress bar.

    Returns:
        numpy.ndarray: Array of shape ``(n_paths, length)``.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be positive (got {n_paths}).")
    length = params.N if length is None else length
    chunks = [range(i, min(i + CHUNK, n_paths)) for i in range(0, n_paths, CHUNK)]
    jobs = (
        delayed(_simulate_chunk)(params, seed, chunk, length, method)
        for chunk in tqdm(chunks, disable=not progress, desc="paths")
    )
    parts = Parallel(n_jobs=num_threads(n_jobs), prefer="threads")(jobs)
    return np.concatenate(parts, axis=0)


###### bridge


def _bridge_terms(g, N: int, k: int, power):
    R = (g - 1) * (power(g, N + 1) - 1) * (-N + g * (2 + N + power(g, N) * (-2 + (g - 1) * N)))
    s1 = (
        (-k + g * (1 - power(g, k) + k))
        + power(g, 3 + 2 * N - k) * (1 + power(g, k) * (-1 + (g - 1) * k))
        + power(g, N - k)
        * (
            power(g, k) * (-g + g**3) * (1 - k + N)
            + power(g, 2 + 2 * k) * (2 + N - g * (1 + N))
            + g * (1 + N - g * (2 + N))
        )
    )
    s2 = (
        g * (power(g, 1 + k) + k - g * (1 + k))
        + power(g, 2 + 2 * N - k) * (-1 + power(g, k) * (1 + k - g * k))
        + power(g, 1 + N - k)
        * (
            g
            + power(g, k) * (g * g - 1) * (k - N)
            - N
            + g * N
            + power(g, 1 + 2 * k) * (-1 + (g - 1) * N)
        )
    )
    return R, s1, s2


def bridge_coefficients(
    k: int, N: int, gamma: float, precise: bool = False
) -> Tuple[float, float]:
    r"""Regression coefficients :math:`(r_1(k), r_2(k)) = (s_1/r, s_2/r)` of
    :math:`W_k` on :math:`(W_N, W_{N+1})`.

    The bridge is :math:`\hat W_k = W_k - r_1(k) W_N - r_2(k) W_{N+1}`.
    ``k`` may be ``N`` or ``N + 1``, where the coefficients are the unit
    vectors.
    """
    if not 1 <= k <= N + 1:
        raise ValueError(f"k must lie in [1, N+1] (got k={k}, N={N}).")
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must lie in [0, 1) (got {gamma}).")
    if precise:
        with mpmath.workdps(DPS):
            g = mpmath.mpf(gamma)
            R, s1, s2 = _bridge_terms(g, N, k, mpmath.power)
            if R == 0:
                raise DegenerateDenominator(f"r(k) vanished for gamma={gamma}, N={N}.")
            return float(s1 / R), float(s2 / R)
    R, s1, s2 = _bridge_terms(float(gamma), N, k, pow)
    if abs(R) < 1e-14:
        raise DegenerateDenominator(
            f"|r(k)| = {abs(R):.3e} for gamma={gamma}, N={N}; use precise=True."
        )
    return s1 / R, s2 / R


def bridge_coefficient_arrays(
    params: RWParams, ks: Optional[Iterable[int]] = None, precise: Optional[bool] = None
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    r"""``(r1, r2)`` for ``ks`` (default :math:`1, \dots, N-1`)."""
    N = params.N
    ks = list(range(1, N)) if ks is None else list(ks)
    if precise is None:
        precise = params.needs_precision()
    if precise:
        with mpmath.workdps(DPS):
            g = _gamma_sigma_mp(params.kappa)[0]
            out = []
            for k in ks:
                R, s1, s2 = _bridge_terms(g, N, k, mpmath.power)
                if R == 0:
                    raise DegenerateDenominator(f"r(k) vanished for kappa={params.kappa}, N={N}.")
                out.append((float(s1 / R), float(s2 / R)))
    else:
        out = [bridge_coefficients(k, N, params.gamma) for k in ks]
    coef = np.array(out, dtype=np.float64).reshape(-1, 2)
    return coef[:, 0], coef[:, 1]


def simulate_bridge(
    params: RWParams,
    seed: int,
    n_paths: int,
    n_jobs: Optional[int] = None,
    progress: bool = False,
) -> NDArray[np.float64]:
    r"""Paths of :math:`(\hat W_1, \dots, \hat W_{N-1})` given :math:`W_N =
    W_{N+1} = 0`."""
    N = params.N
    W = simulate_W(params, seed, n_paths, length=N + 1, n_jobs=n_jobs, progress=progress)
    r1, r2 = bridge_coefficient_arrays(params)
    return W[:, : N - 1] - W[:, N - 1 : N] * r1 - W[:, N : N + 1] * r2


###### gaussian conditioning


class ConditionalGaussian:
    r"""A centered Gaussian vector conditioned on some coordinates being zero.

    With the joint covariance partitioned as :math:`\begin{pmatrix} A & B \\
    C & D\end{pmatrix}` (target first, conditioning second) the conditional
    covariance is the Schur complement :math:`A - BD^{-1}C`.

    Args:
        joint (numpy.ndarray): The joint covariance :math:`\Sigma`.
        target (Sequence[int]): Indices of the target block.
        cond (Sequence[int]): Indices of the conditioning block.
    """

    def __init__(self, joint: NDArray[np.float64], target: Sequence[int], cond: Sequence[int]):
        self.joint = np.asarray(joint, dtype=np.float64)
        self.target = np.asarray(target)
        self.cond = np.asarray(cond)
        try:
            self._cho = linalg.cho_factor(self.D)
        except linalg.LinAlgError as e:
            raise SingularConditioning(f"Conditioning block is not positive definite: {e}") from e
        if self.det_D <= 0:
            raise SingularConditioning(f"det(D) = {self.det_D} is not positive.")

    @property
    def A(self) -> NDArray[np.float64]:
        return self.joint[np.ix_(self.target, self.target)]

    @property
    def B(self) -> NDArray[np.float64]:
        return self.joint[np.ix_(self.target, self.cond)]

    @property
    def C(self) -> NDArray[np.float64]:
        return self.joint[np.ix_(self.cond, self.target)]

    @property
    def D(self) -> NDArray[np.float64]:
        return self.joint[np.ix_(self.cond, self.cond)]

    @property
    def det_D(self) -> float:
        return float(np.prod(np.diag(self._cho[0])) ** 2)

    @cached_property
    def regression(self) -> NDArray[np.float64]:
        r""":math:`BD^{-1}`, the conditional-mean coefficients"""
        return linalg.cho_solve(self._cho, self.C).T

    @cached_property
    def explained(self) -> NDArray[np.float64]:
        r""":math:`BD^{-1}C`"""
        return self.regression @ self.C

    @cached_property
    def covariance(self) -> NDArray[np.float64]:
        cov = self.A - self.explained
        return 0.5 * (cov + cov.T)


def walk_covariance(params: RWParams, length: int) -> NDArray[np.float64]:
    r""":math:`\mathrm{Cov}(W_i, W_j)` for :math:`1 \le i, j \le` ``length``."""
    m = np.arange(1, length + 1, dtype=np.float64)
    col = _one_minus_power(params.one_minus_gamma, m) * params.step_std
    L = linalg.toeplitz(col, np.zeros(length))
    return L @ L.T


def _integrated_walk_map(length: int) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    Y = np.tril(np.ones((length, length)))
    return Y, np.cumsum(Y, axis=0)


def conditional_covariance(N: int, params: Optional[RWParams], target: str) -> ConditionalGaussian:
    r"""Conditions on the last two positions of a walk being zero.

    Args:
        N (int): The conditioned positions are ``N`` and ``N + 1``.
        params (RWParams, optional): The walk for ``target="W"``; ignored
            for the integrated walk of the membrane model.
        target (str): ``"W"`` for :math:`(W_1..W_{N-1}) | W_N = W_{N+1} = 0`;
            ``"Y"`` for the increments :math:`(Y_1..Y_{N-1})` of an
            integrated unit random walk given :math:`Z_N = Z_{N+1} = 0`;
            ``"Z"`` for the positions :math:`(Z_1..Z_{N-1})` of that walk.
    """
    if N < 3:
        raise ValueError(f"N must be at least 3 (got {N}).")
    target_idx, cond_idx = np.arange(N - 1), np.array([N - 1, N])
    if target == "W":
        if params is None:
            raise ValueError("target='W' needs walk parameters.")
        joint = walk_covariance(params, N + 1)
    elif target in ("Y", "Z"):
        Y, Z = _integrated_walk_map(N + 1)
        rows = np.vstack([(Y if target == "Y" else Z)[: N - 1], Z[N - 1 : N + 1]])
        joint = rows @ rows.T
    else:
        raise ValueError(f"Unknown target '{target}' (use 'W', 'Y' or 'Z').")
    return ConditionalGaussian(joint, target_idx, cond_idx)


def bridge_covariance(N: int, params: RWParams) -> NDArray[np.float64]:
    return conditional_covariance(N, params, "W").covariance


###### membrane closed forms


def membrane_det_D(N: int) -> float:
    return N * (N + 1) ** 2 * (N + 2) / 12.0


def membrane_explained_diagonal(N: int) -> NDArray[np.float64]:
    r""":math:`(BD^{-1}C)(i,i) = i^2[3(N+1-i)^2 + N(N+2)] / (N(N+1)(N+2))`"""
    i = np.arange(1, N, dtype=np.float64)
    return i**2 * (3 * (N + 1 - i) ** 2 + N * (N + 2)) / (N * (N + 1) * (N + 2))


def membrane_increment_bound(N: int) -> NDArray[np.float64]:
    r""":math:`E[Y_i^2 | Z_N = Z_{N+1} = 0]` for :math:`i = 1, \dots, N-1`."""
    i = np.arange(1, N, dtype=np.float64)
    return i - membrane_explained_diagonal(N)


###### normalization


@dataclass(frozen=True)
class PrecisionFit:
    r"""Least-squares fit of a precision matrix onto
    ``constant * (-Delta + stiffness * Delta^2)``."""

    constant: float
    stiffness: float
    stiffness_ratio: float
    residual: float


def fit_precision(cov: NDArray[np.float64], kappa: Optional[float] = None) -> PrecisionFit:
    r"""Fits the inverse of a chain covariance onto the normalized
    :math:`-\Delta` and :math:`\Delta^2` of the chain grid.

    ``stiffness_ratio`` is ``stiffness / kappa`` when ``kappa`` is given.
    """
    n = cov.shape[0]
    g = build_grid(Domain(DomainKind.BOX, 1), n + 1, Classification.CHAIN)
    lap = assemble(MixedOperatorSpec(OperatorBase.NEG_LAPLACIAN, 0.0, 1.0), g, True).toarray()
    bilap = assemble(MixedOperatorSpec(OperatorBase.BILAPLACIAN, 0.0, 1.0), g, True).toarray()
    precision = linalg.inv(cov)
    design = np.stack([lap.ravel(), bilap.ravel()], axis=1)
    a, b = least_squares(design, precision.ravel())
    residual = np.linalg.norm(precision - a * lap - b * bilap) / np.linalg.norm(precision)
    stiffness = b / a
    ratio = stiffness / kappa if kappa else math.nan
    logger.info(f"precision fit: constant={a:.6g} stiffness={stiffness:.6g} ratio={ratio:.6g}")
    return PrecisionFit(float(a), float(stiffness), float(ratio), float(residual))


###### phase scan


def regime_table(N_list: Sequence[int], kappa_rule: KappaRule) -> Table:
    r"""Closed-form :math:`\mathrm{Var}(W_{N-1})` across system sizes."""
    if len(N_list) == 0:
        raise ValueError("N_list must not be empty.")
    rows = []
    for N in N_list:
        params = RWParams(int(N), kappa_rule(N))
        var = var_W(N - 1, params)
        rows.append(
            {
                "N": int(N),
                "kappa": params.kappa,
                "var": var,
                "var_over_N": var / N,
                "var_beta_over_N3": var * params.beta / N**3,
            }
        )
    return Table(df=pd.DataFrame(rows), metadata={"kappa_rule": str(kappa_rule)})
