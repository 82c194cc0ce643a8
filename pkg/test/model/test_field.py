import math

import numpy as np
import pytest

from semiflex.data import Classification, Domain, DomainKind, GridFunction, Regime, build_grid
from semiflex.discrete import green_function
from semiflex.errors import OutOfDomain
from semiflex.metrics import (
    covariance_standard_error,
    envelope_holds,
    fitted_constant,
    variance_standard_error,
)
from semiflex.model import (
    ModelParams,
    function_names,
    get_function,
    gradient_increments,
    interpolate,
    pair,
    pairing_variance,
    pairings_table,
    sample,
)


def _chain(N):
    return build_grid(Domain(DomainKind.BOX, 1), N, Classification.CHAIN)


def test_model_params():
    params = ModelParams(1, 128, 128.0**3)
    assert params.regime == Regime.SUPER
    assert params.kappa1 == 0.25
    assert params.kappa2 == 128.0**3 / 2
    assert ModelParams(2, 16, 0.0).regime == Regime.SUB
    assert ModelParams(1, 16, 0.0, regime="critical").regime == Regime.CRITICAL
    assert params.metadata()["regime"] == "super"

    with pytest.raises(ValueError):
        ModelParams(1, 16, -1.0)
    with pytest.raises(ValueError):
        ModelParams(0, 16, 1.0)


def test_functions():
    assert function_names == ["sin", "sin2", "bump", "one"]
    x = np.array([[0.5, 0.5], [0.0, 0.3], [0.9, 0.9]])
    assert np.allclose(get_function("sin")(x)[:2], [2.0, 0.0])
    assert get_function("bump")(x)[0] == pytest.approx(1.0)
    assert get_function("bump")(x)[2] == 0.0
    assert get_function("one")(x).tolist() == [1.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        get_function("cos")


@pytest.mark.parametrize(
    "N,kappa,limit",
    [
        (128, 128.0**3, 1 / math.pi**4 - 8 / math.pi**6),
        (256, 256.0**0.5, 1 / math.pi**2),
    ],
)
def test_variance_limits(N, kappa, limit):
    params = ModelParams(1, N, kappa)
    var = pairing_variance(params, _chain(N), get_function("sin"))
    assert var == pytest.approx(limit, rel=0.05)
    assert get_function("sin").limits[params.regime.value] == pytest.approx(limit)


def test_variance_critical():
    f = get_function("sin")
    coarse = pairing_variance(ModelParams(1, 128, 2 * 128.0**2), _chain(128), f)
    fine = pairing_variance(ModelParams(1, 2048, 2 * 2048.0**2), _chain(2048), f)
    assert coarse == pytest.approx(fine, rel=0.05)
    # the critical limit lies below both other limits
    assert fine < 1 / math.pi**4 - 8 / math.pi**6


@pytest.mark.parametrize(
    "kappa,regime",
    [(12.0**4, Regime.SUPER), (4 * 12.0**2, Regime.CRITICAL), (3.0, Regime.SUB)],
)
def test_pairing_routes(kappa, regime):
    g = build_grid(Domain(DomainKind.BOX, 2), 12)
    params = ModelParams(2, 12, kappa)
    assert params.regime == regime
    f = get_function("sin2")
    scaled = pairing_variance(params, g, f, route="scaled")
    lattice = pairing_variance(params, g, f, route="lattice")
    assert scaled == pytest.approx(lattice, rel=1e-8)
    with pytest.raises(ValueError):
        pairing_variance(params, g, f, route="fourier")


@pytest.mark.parametrize(
    "g",
    [_chain(32), build_grid(Domain(DomainKind.BOX, 2), 12)],
    ids=["chain", "box2"],
)
def test_sampler_covariance(g):
    params = ModelParams(g.d, g.N, 1.0)
    ensemble = sample(params, g, num_samples=4000, seed=0)
    assert len(ensemble) == 4000
    G = green_function(g, 1.0).dense()
    se = covariance_standard_error(ensemble.samples)
    assert (np.abs(ensemble.covariance() - G) <= 5 * se + 1e-12).all()


def test_sample_determinism():
    g = _chain(16)
    params = ModelParams(1, 16, 2.0)
    a = sample(params, g, num_samples=300, seed=5, n_jobs=1)
    b = sample(params, g, num_samples=300, seed=5, n_jobs=4)
    assert np.array_equal(a.samples, b.samples)
    a.extend(b)
    assert len(a) == 600

    table = b.to_table()
    assert len(table) == 300 * g.n
    assert table.metadata["seed"] == 5

    with pytest.raises(ValueError):
        sample(params, _chain(8), num_samples=10, seed=0)
    with pytest.raises(ValueError):
        sample(params, g, num_samples=0, seed=0)
    with pytest.raises(ValueError):
        a.extend(sample(ModelParams(1, 16, 3.0), g, num_samples=2, seed=0))


def test_pairings_match_variance():
    N = 32
    g = _chain(N)
    params = ModelParams(1, N, 0.0)
    f = get_function("sin")
    values = pair(sample(params, g, num_samples=4000, seed=1), f)
    exact = pairing_variance(params, g, f)
    assert abs(np.mean(values**2) - exact) <= 5 * variance_standard_error(values)

    table = pairings_table(values, params, "sin", seed=1)
    assert table.columns == ["sample_id", "pairing"]
    assert table.metadata["f"] == "sin"


def test_interpolation_d1():
    N = 8
    g = _chain(N)
    params = ModelParams(1, N, 0.0)
    u = GridFunction.from_unknowns(g, np.arange(1.0, N))
    psi = interpolate(u, params)
    scale = params.interpolation_scale
    assert psi(np.array([3 / N])) == pytest.approx(3 * scale)
    assert psi(np.array([3.5 / N])) == pytest.approx(3.5 * scale)
    assert psi(np.array([0.0])) == 0.0
    assert psi(np.array([1.0])) == 0.0
    with pytest.raises(OutOfDomain):
        psi(np.array([1.5]))


def test_interpolation_d2():
    N = 8
    g = build_grid(Domain(DomainKind.BOX, 2), N)
    params = ModelParams(2, N, 1.0)
    rng = np.random.default_rng(0)
    u = GridFunction.from_unknowns(g, rng.standard_normal(g.n))
    psi = interpolate(u, params)

    # lattice points
    for x in g.unknowns[:5]:
        value = psi(x / N)
        assert value == pytest.approx(params.interpolation_scale * u.values[g.array_index(x)])

    # both simplices agree on the cell diagonal
    t = np.array([[0.3 + 0.05, 0.3 + 0.05]])
    a = psi.eval(t, order=np.array([[0, 1]]))
    b = psi.eval(t, order=np.array([[1, 0]]))
    assert np.allclose(a, b)

    # continuity across a cell face
    eps = 1e-9
    left = psi(np.array([4 / N - eps, 0.41]))
    right = psi(np.array([4 / N + eps, 0.41]))
    assert left == pytest.approx(right, abs=1e-6)

    disc = build_grid(Domain(DomainKind.DISC, 2), N)
    psi = interpolate(GridFunction.zeros(disc), ModelParams(2, N, 1.0))
    with pytest.raises(OutOfDomain):
        psi(np.array([0.9, 0.9]))


def test_gradient_increments():
    N = 16
    g = _chain(N)
    ensemble = sample(ModelParams(1, N, 1.0), g, num_samples=4000, seed=2)
    increments = gradient_increments(ensemble)
    assert increments.shape == (g.shape[0] - 1,)
    assert (increments >= 0).all()

    G = green_function(g, 1.0)
    i = g.array_index((8,))[0]
    expected = G((9,), (9,)) + G((8,), (8,)) - 2 * G((8,), (9,))
    full = np.zeros((len(ensemble),) + g.shape)
    full[:, g.interior_mask] = ensemble.samples
    diffs = full[:, i + 1] - full[:, i]
    assert increments[i] == pytest.approx(np.mean(diffs**2))
    assert abs(increments[i] - expected) <= 5 * variance_standard_error(diffs)


def _exact_increments(g, kappa):
    G = green_function(g, kappa).dense()
    idx = np.flatnonzero(g.interior_mask)
    full = np.zeros((g.shape[0], g.shape[0]))
    full[np.ix_(idx, idx)] = G
    v = np.diag(full)
    return v[1:] + v[:-1] - 2 * np.diag(full, 1)


def test_gradient_increments_membrane_bound():
    kappa = 1e7
    ratios = {}
    for N in [64, 128, 256]:
        g = build_grid(Domain(DomainKind.BOX, 1), N)
        ratios[N] = kappa * _exact_increments(g, kappa) / N
    assert envelope_holds([ratios[64], ratios[128], ratios[256]])

    N = 256
    g = build_grid(Domain(DomainKind.BOX, 1), N)
    ensemble = sample(ModelParams(1, N, kappa), g, num_samples=2000, seed=0)
    increments = gradient_increments(ensemble)
    full = np.zeros((len(ensemble),) + g.shape)
    full[:, g.interior_mask] = ensemble.samples
    squares = np.diff(full, axis=1) ** 2
    se = squares.std(axis=0) / np.sqrt(len(ensemble))
    bound = 1.1 * fitted_constant(ratios[64]) * N / kappa
    assert (increments <= bound + 5 * se).all()
