import numpy as np
import pytest

from semiflex.metrics import (
    covariance_standard_error,
    envelope_holds,
    fitted_constant,
    least_squares,
    loglog_slope,
    max_relative_entrywise,
    relative_error,
    variance_standard_error,
)


def test_loglog_slope():
    x = np.arange(1, 50, dtype=np.float64)
    assert loglog_slope(x, 3 * x**2) == pytest.approx(2.0)
    assert loglog_slope(x, x**-0.5) == pytest.approx(-0.5)


def test_least_squares():
    rng = np.random.default_rng(0)
    design = rng.standard_normal((20, 2))
    assert np.allclose(least_squares(design, design @ [1.5, -2.0]), [1.5, -2.0])


def test_envelope():
    assert fitted_constant(np.array([1.0, 3.0, 2.0])) == 3.0
    assert envelope_holds([1.0, 2.0, 2.1, 1.5], num_fit=2)
    assert not envelope_holds([1.0, 2.0, 2.3], num_fit=2)
    assert envelope_holds([np.array([1.0, 1.2]), np.array([1.3])], num_fit=1)


def test_relative_errors():
    assert relative_error(np.array([2.0, -4.0]), np.array([2.0, -3.0])) == 0.25
    assert relative_error(np.zeros(2), np.array([0.0, 1e-3])) == 1e-3
    assert max_relative_entrywise(np.array([1.0, 100.0]), np.array([1.1, 100.0])) == pytest.approx(0.1)


def test_standard_errors():
    samples = np.random.default_rng(0).standard_normal((20_000, 2))
    se = covariance_standard_error(samples)
    # Var(x^2) = 2 and Var(xy) = 1 for independent standard normals
    assert se[0, 0] == pytest.approx(np.sqrt(2 / 20_000), rel=0.05)
    assert se[0, 1] == pytest.approx(np.sqrt(1 / 20_000), rel=0.05)
    assert variance_standard_error(samples[:, 0]) == pytest.approx(np.sqrt(2 / 20_000), rel=0.05)
