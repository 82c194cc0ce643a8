from .dirichlet import (
    SparseCholesky,
    GreenFunction,
    SparseOperator,
    assemble,
    green_function,
    scaled_spec,
    solve_dirichlet,
    solve_scaled,
)
from .operators import (
    MixedOperatorSpec,
    OperatorBase,
    apply_Lh,
    apply_Lh2,
    apply_Qh,
    backward_diff,
    bilaplacian_h,
    char_poly,
    derivative,
    forward_diff,
    grid_inner,
    grid_norm,
    laplacian_h,
    lattice_spec,
    norm_audit,
    plancherel_form,
    q_symbol,
    restrict,
    sobolev_norm,
    stencil,
    weighted_norm,
)
from .spectral import (
    SpectrumResult,
    eigenvalue_monotonicity,
    negative_norm,
    series_covariance,
    series_field,
    spectrum,
    tail_sums,
    weyl_check,
    weyl_table,
)

__all__ = [
    "OperatorBase",
    "MixedOperatorSpec",
    "lattice_spec",
    "stencil",
    "forward_diff",
    "backward_diff",
    "derivative",
    "laplacian_h",
    "bilaplacian_h",
    "apply_Lh",
    "apply_Lh2",
    "apply_Qh",
    "restrict",
    "grid_inner",
    "grid_norm",
    "sobolev_norm",
    "weighted_norm",
    "char_poly",
    "q_symbol",
    "plancherel_form",
    "norm_audit",
    "SparseOperator",
    "SparseCholesky",
    "GreenFunction",
    "assemble",
    "solve_dirichlet",
    "green_function",
    "scaled_spec",
    "solve_scaled",
    "SpectrumResult",
    "spectrum",
    "weyl_check",
    "weyl_table",
    "series_field",
    "series_covariance",
    "tail_sums",
    "negative_norm",
    "eigenvalue_monotonicity",
]
