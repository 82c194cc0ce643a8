import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from semiflex.convergence.case import ConvergenceCase
from semiflex.data.function import GridFunction
from semiflex.data.grid import Domain, DomainKind, GridGeometry, build_grid
from semiflex.data.table import Table
from semiflex.discrete.dirichlet import assemble, solve_dirichlet
from semiflex.discrete.operators import MixedOperatorSpec, grid_norm, restrict
from semiflex.errors import InsufficientLadder
from semiflex.metrics import envelope_holds, fitted_constant
from semiflex.utils import num_threads, timed

logger = logging.getLogger(__name__)

NUM_FIT = 2
SLACK = 1.1


@dataclass(frozen=True)
class ErrorMeasurement:
    r"""One rung of a convergence ladder.

    Args:
        N (int): The mesh size, :math:`h = 1/N`.
        rho (float): The coefficient :math:`\rho(h)`.
        error (float): :math:`\|R_h e_h\|_{h,grid}`.
        bound (float): The error bound without its constant; it bounds the
            squared error.
    """

    N: int
    rho: float
    error: float
    bound: float

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def ratio(self) -> float:
        return self.error**2 / self.bound


def _mesh_size(h: float) -> int:
    N = round(1.0 / h)
    if N < 1 or not math.isclose(N * h, 1.0, rel_tol=1e-9):
        raise ValueError(f"h must be the reciprocal of a positive integer (got {h}).")
    return N


def solve_case(case: ConvergenceCase, N: int) -> Tuple[GridGeometry, GridFunction, GridFunction]:
    r"""Discretizes ``case`` at :math:`h = 1/N` and solves for :math:`u_h`.

    Returns the grid, the exact solution sampled on :math:`D_h`, and the
    discrete solution.
    """
    g = build_grid(Domain(DomainKind.BOX, case.d), N)
    spec = MixedOperatorSpec(case.kind, case.rho(g.h), g.h)
    exact = GridFunction.from_callable(g, case.u, where="domain")
    f = GridFunction.from_callable(g, case.f)
    boundary = exact if case.boundary == "exact" else None
    u_h = solve_dirichlet(assemble(spec, g, normalized=False), f, boundary=boundary)
    return g, exact, u_h


def measure_error(case: ConvergenceCase, h: float) -> ErrorMeasurement:
    r"""Solves ``case`` at mesh width ``h`` and measures
    :math:`\|R_h(u - u_h)\|_{h,grid}` against the bound."""
    N = _mesh_size(h)
    _, exact, u_h = solve_case(case, N)
    error = grid_norm(restrict(exact - u_h))
    measurement = ErrorMeasurement(N=N, rho=case.rho(1.0 / N), error=error, bound=case.bound(1.0 / N))
    logger.debug(f"{case.name} at N={N}: error {error:.6e}, ratio {measurement.ratio:.6e}")
    return measurement


def measure_ladder(case: ConvergenceCase, n_jobs: Optional[int] = None) -> List[ErrorMeasurement]:
    return Parallel(n_jobs=num_threads(n_jobs), prefer="threads")(
        delayed(measure_error)(case, 1.0 / N) for N in case.ladder
    )


def rate_report(case: ConvergenceCase, n_jobs: Optional[int] = None) -> Table:
    r"""Runs the ladder of ``case`` and checks the error envelope.

    The constant is fitted as the largest ratio of squared error to bound on
    the two coarsest meshes; a finer mesh passes iff its ratio stays below
    ``1.1`` times that constant. The table has columns ``h``, ``error``,
    ``bound``, ``ratio`` and ``pass``.
    """
    if len(case.ladder) < NUM_FIT + 1:
        raise InsufficientLadder(
            f"A rate report needs at least {NUM_FIT + 1} mesh sizes (got "
            f"{len(case.ladder)} for '{case.name}')."
        )
    ladder = sorted(case.ladder)
    if list(case.ladder) != ladder:
        case = replace(case, ladder=tuple(ladder))

    with timed(f"running {case}"):
        rows = measure_ladder(case, n_jobs)

    ratios = np.array([row.ratio for row in rows])
    C = fitted_constant(ratios[:NUM_FIT])
    passed = np.concatenate([np.ones(NUM_FIT, dtype=bool), ratios[NUM_FIT:] <= SLACK * C])
    ok = envelope_holds(list(ratios), num_fit=NUM_FIT, slack=SLACK)
    logger.info(f"{case.name} (d={case.d}): C = {C:.6e}, {'PASS' if ok else 'FAIL'}")

    df = pd.DataFrame(
        {
            "h": [row.h for row in rows],
            "error": [row.error for row in rows],
            "bound": [row.bound for row in rows],
            "ratio": ratios,
            "pass": passed,
        }
    )
    return Table(
        df=df,
        metadata={
            "case": case.name,
            "operator": case.kind.value,
            "d": case.d,
            "rho": str(case.rho),
            "boundary": case.boundary,
            "C": C,
            "result": "PASS" if ok else "FAIL",
        },
    )
