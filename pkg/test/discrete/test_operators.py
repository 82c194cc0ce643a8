import inspect

import numpy as np
import pytest

import semiflex.discrete.operators as operators
from semiflex.data import Domain, DomainKind, GridFunction, build_grid
from semiflex.discrete import (
    MixedOperatorSpec,
    OperatorBase,
    apply_Lh,
    apply_Lh2,
    apply_Qh,
    backward_diff,
    bilaplacian_h,
    char_poly,
    forward_diff,
    grid_inner,
    grid_norm,
    laplacian_h,
    lattice_spec,
    norm_audit,
    plancherel_form,
    q_symbol,
    sobolev_norm,
    stencil,
    weighted_norm,
)
from semiflex.errors import NonSymmetricStencil
from semiflex.metrics import envelope_holds, fitted_constant, loglog_slope


def _random(g, seed=0):
    return GridFunction.from_unknowns(g, np.random.default_rng(seed).standard_normal(g.n))


def test_operator_base():
    assert OperatorBase("mixed") == OperatorBase.MIXED
    assert OperatorBase.NEG_LAPLACIAN.order == 1
    assert OperatorBase.BILAPLACIAN.order == 2
    with pytest.raises(ValueError):
        OperatorBase("laplacian")
    with pytest.raises(ValueError):
        MixedOperatorSpec(OperatorBase.MIXED, rho=-1.0, h=0.1)


def test_stencil_d1():
    bilap = stencil(MixedOperatorSpec(OperatorBase.BILAPLACIAN, 0.0, 0.5), 1, False)
    assert bilap.tolist() == [1.0, -4.0, 6.0, -4.0, 1.0]
    neg = stencil(lattice_spec(0.0), 1, True)
    assert neg.tolist() == [0.0, -0.5, 1.0, -0.5, 0.0]
    mixed = stencil(MixedOperatorSpec(OperatorBase.MIXED, 2.0, 0.5), 1, False)
    assert np.allclose(mixed, [2.0, -8.25, 12.5, -8.25, 2.0])


@pytest.mark.parametrize("base", list(OperatorBase))
@pytest.mark.parametrize("d", [1, 2, 3])
def test_stencil_symmetric(base, d):
    kernel = stencil(MixedOperatorSpec(base, 0.3, 0.1), d, False)
    assert kernel.shape == (5,) * d
    assert np.array_equal(kernel, np.flip(kernel))
    assert kernel.sum() == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("d", [1, 2])
def test_summation_by_parts(d):
    g = build_grid(Domain(DomainKind.BOX, d), 12)
    u, v = _random(g, 0), _random(g, 1)
    for j in range(d):
        lhs = grid_inner(forward_diff(u, j), v)
        rhs = -grid_inner(u, backward_diff(v, j))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_laplacian_exact_on_quadratics():
    g = build_grid(Domain(DomainKind.BOX, 2), 10)
    u = GridFunction.from_callable(g, lambda x: x[:, 0] * (1 - x[:, 0]) * x[:, 1], where="domain")
    Lu = apply_Lh(MixedOperatorSpec(OperatorBase.NEG_LAPLACIAN, 0.0, g.h), u, normalized=False)
    x = g.coordinates(g.unknowns)
    assert np.allclose(Lu.on_unknowns(), 2 * x[:, 1], atol=1e-10)


def test_laplacian_h_normalization():
    g = build_grid(Domain(DomainKind.BOX, 2), 10)
    u = GridFunction.from_callable(g, lambda x: x[:, 0] ** 2 + x[:, 1] ** 2, where="domain")
    assert np.allclose(laplacian_h(u, normalized=False).on_unknowns(), 4.0)
    assert np.allclose(laplacian_h(u, normalized=True).on_unknowns(), 1.0)
    assert np.allclose(bilaplacian_h(u, normalized=False).values[g.deep_mask], 0.0, atol=1e-8)


def test_apply_Lh2():
    g = build_grid(Domain(DomainKind.BOX, 2), 12)
    u = _random(g)
    spec = MixedOperatorSpec(OperatorBase.MIXED, 1.0, g.h)
    Lu = apply_Lh(spec, u, normalized=False)
    L2u = apply_Lh2(spec, u, normalized=False)
    assert np.allclose(L2u.values[g.deep_mask], Lu.values[g.deep_mask])
    assert np.allclose(L2u.values[g.near_boundary_mask], g.h**2 * Lu.values[g.near_boundary_mask])
    assert (L2u.values[~g.interior_mask] == 0).all()
    with pytest.raises(ValueError):
        apply_Lh2(MixedOperatorSpec(OperatorBase.NEG_LAPLACIAN, 0.0, g.h), u, normalized=False)


def test_char_poly():
    theta = np.linspace(-np.pi, np.pi, 101)[:, None]
    p = char_poly(lattice_spec(0.0), theta, normalized=True)
    assert np.allclose(p, 1 - np.cos(theta[:, 0]))
    p = char_poly(MixedOperatorSpec(OperatorBase.BILAPLACIAN, 0.0, 1.0), theta, normalized=False)
    assert np.allclose(p, (2 - 2 * np.cos(theta[:, 0])) ** 2)


def test_char_poly_coercivity():
    theta = np.random.default_rng(0).uniform(-np.pi, np.pi, size=(10_000, 2))
    lap = char_poly(MixedOperatorSpec(OperatorBase.NEG_LAPLACIAN, 0.0, 1.0), theta, normalized=False)
    assert np.allclose(lap, q_symbol(theta, 1))
    bilap = char_poly(MixedOperatorSpec(OperatorBase.BILAPLACIAN, 0.0, 1.0), theta, normalized=False)
    assert (bilap >= q_symbol(theta, 2) - 1e-12).all()
    assert (bilap <= 2 * q_symbol(theta, 2) + 1e-12).all()
    mixed = char_poly(MixedOperatorSpec(OperatorBase.MIXED, 0.5, 0.1), theta, normalized=False)
    assert (mixed >= 0.01 * q_symbol(theta, 1) - 1e-12).all()


def test_char_poly_non_symmetric(monkeypatch):
    kernel = np.zeros(5)
    kernel[2], kernel[3] = 1.0, -1.0
    monkeypatch.setattr(operators, "stencil", lambda spec, d, normalized: kernel)
    with pytest.raises(NonSymmetricStencil):
        char_poly(lattice_spec(0.0), np.array([[0.5]]), normalized=True)


@pytest.mark.parametrize("base", list(OperatorBase))
@pytest.mark.parametrize("d", [1, 2])
def test_plancherel_form(base, d):
    g = build_grid(Domain(DomainKind.BOX, d), 10)
    u = _random(g)
    spec = MixedOperatorSpec(base, 0.7, g.h)
    direct = grid_inner(apply_Lh(spec, u, normalized=False), u)
    assert plancherel_form(spec, u, normalized=False) == pytest.approx(direct, rel=1e-10)
    assert direct > 0


def test_norms():
    g = build_grid(Domain(DomainKind.BOX, 2), 12)
    u = _random(g)
    assert sobolev_norm(u, 0) == pytest.approx(grid_norm(u))
    assert sobolev_norm(u, 2) > sobolev_norm(u, 1) > sobolev_norm(u, 0)
    deep = u.masked(g.deep_mask)
    assert weighted_norm(deep, 2) == pytest.approx(grid_norm(deep))
    assert weighted_norm(u, 2) > grid_norm(u)


def test_norm_audit_gradient_identity():
    g = build_grid(Domain(DomainKind.BOX, 2), 12)
    spec = MixedOperatorSpec(OperatorBase.NEG_LAPLACIAN, 0.0, g.h)
    ratios = norm_audit(
        g,
        lambda u: sum(grid_norm(forward_diff(u, j)) ** 2 for j in range(2)),
        lambda u: grid_inner(apply_Lh(spec, u, normalized=False), u),
        num_samples=10,
    )
    assert np.allclose(ratios, 1.0)


def test_norm_audit_stable_under_refinement():
    constants = []
    for N in [16, 32]:
        g = build_grid(Domain(DomainKind.BOX, 2), N)
        spec = MixedOperatorSpec(OperatorBase.BILAPLACIAN, 0.0, g.h)
        ratios = norm_audit(
            g,
            lambda u: sobolev_norm(u, 2) ** 2,
            lambda u: grid_inner(apply_Lh(spec, u, normalized=False), u),
        )
        constants.append(fitted_constant(ratios))
    assert constants[1] == pytest.approx(constants[0], rel=0.2)


@pytest.mark.parametrize("fn", [apply_Lh, apply_Lh2, char_poly, plancherel_form])
def test_normalized_is_explicit(fn):
    param = inspect.signature(fn).parameters["normalized"]
    assert param.default is inspect.Parameter.empty


def _fundamental_mode(g, rng):
    x = g.coordinates(g.unknowns)
    scaled = (x - g.h) / (1 - 2 * g.h)
    values = rng.standard_normal() * np.prod(np.sin(np.pi * scaled), axis=1)
    return GridFunction.from_unknowns(g, values)


@pytest.mark.parametrize("j", [0, 1])
def test_poincare(j):
    def rhs(u):
        return grid_norm(forward_diff(u, j))

    ratios = {}
    for N in [16, 32, 64]:
        g = build_grid(Domain(DomainKind.BOX, 2), N)
        noise = norm_audit(g, grid_norm, rhs, num_samples=20)
        ratios[N] = norm_audit(g, grid_norm, rhs, num_samples=5, sampler=_fundamental_mode)
        # the fundamental mode is extremal on a box
        assert noise.max() <= ratios[N].max() * (1 + 1e-10)
        assert fitted_constant(ratios[N]) < 1 / np.pi
    assert envelope_holds([ratios[16], ratios[32]])


@pytest.mark.parametrize("m", [1, 2])
def test_Qh_bounds_sobolev_norm(m):
    ratios = []
    for N in [16, 32]:
        g = build_grid(Domain(DomainKind.BOX, 2), N)
        ratios.append(
            norm_audit(
                g,
                lambda u: sobolev_norm(u, m) ** 2,
                lambda u: (-1) ** m * grid_inner(apply_Qh(u, m), u),
            )
        )
    assert envelope_holds(ratios)


def test_Qh_quadratic_form():
    g = build_grid(Domain(DomainKind.BOX, 2), 12)
    u = _random(g)
    first = sum(grid_norm(backward_diff(u, j)) ** 2 for j in range(2))
    assert -grid_inner(apply_Qh(u, 1), u) == pytest.approx(first, rel=1e-10)
    second = sum(grid_norm(forward_diff(backward_diff(u, j), j)) ** 2 for j in range(2))
    assert grid_inner(apply_Qh(u, 2), u) == pytest.approx(second, rel=1e-10)


def test_weighted_norm_bounded_by_sobolev_norm():
    ratios = []
    for N in [16, 32, 64]:
        g = build_grid(Domain(DomainKind.BOX, 2), N)
        ratios.append(norm_audit(g, lambda u: weighted_norm(u, 2), lambda u: sobolev_norm(u, 2)))
    assert envelope_holds(ratios)
    assert ratios[2].max() < ratios[1].max() < ratios[0].max()


@pytest.mark.parametrize(
    "base,rho_of_h",
    [(OperatorBase.BILAPLACIAN, lambda h: h), (OperatorBase.MIXED, lambda h: 1.0)],
)
def test_Lh2_bounds_sobolev_norm(base, rho_of_h):
    ratios = []
    for N in [16, 32]:
        g = build_grid(Domain(DomainKind.BOX, 2), N)
        spec = MixedOperatorSpec(base, rho_of_h(g.h), g.h)
        ratios.append(
            norm_audit(
                g,
                lambda u: sobolev_norm(u, 2),
                lambda u: grid_norm(apply_Lh2(spec, u, normalized=False)),
            )
        )
    assert envelope_holds(ratios)


def test_laplacian_second_order_consistent():
    hs, errors = [], []
    for N in [8, 16, 32]:
        g = build_grid(Domain(DomainKind.BOX, 1), N)
        u = GridFunction.from_callable(g, lambda x: np.sin(np.pi * x[:, 0]), where="domain")
        spec = MixedOperatorSpec(OperatorBase.NEG_LAPLACIAN, 0.0, g.h)
        Lu = apply_Lh(spec, u, normalized=False).on_unknowns()
        hs.append(g.h)
        errors.append(np.sqrt(g.h) * np.linalg.norm(Lu - np.pi**2 * u.on_unknowns()))
    assert loglog_slope(hs, errors) >= 1.9
