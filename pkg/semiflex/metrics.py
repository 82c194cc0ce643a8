from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from sklearn.linear_model import LinearRegression

###### rate fits


def loglog_slope(x: NDArray[np.float64], y: NDArray[np.float64]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    assert x.shape == y.shape and x.size >= 2
    assert (x > 0).all() and (y > 0).all()
    model = LinearRegression().fit(np.log(x)[:, None], np.log(y))
    return float(model.coef_[0])


def least_squares(
    design: NDArray[np.float64], target: NDArray[np.float64]
) -> NDArray[np.float64]:
    r"""coefficients of ``target ~ design`` without intercept"""
    model = LinearRegression(fit_intercept=False).fit(design, target)
    return model.coef_


def fitted_constant(ratios: NDArray[np.float64]) -> float:
    r"""the envelope constant: largest observed ratio"""
    ratios = np.asarray(ratios, dtype=np.float64)
    assert ratios.size >= 1
    return float(ratios.max())


def envelope_holds(
    ratios: Sequence[NDArray[np.float64]], num_fit: int = 1, slack: float = 1.1
) -> bool:
    r"""fit the constant on the first ``num_fit`` (coarsest) entries, then
    require every later ratio to stay under ``slack`` times it"""
    assert len(ratios) > num_fit
    C = fitted_constant(np.concatenate([np.ravel(r) for r in ratios[:num_fit]]))
    return all(np.max(r) <= slack * C for r in ratios[num_fit:])


###### errors


def relative_error(true: NDArray[np.float64], pred: NDArray[np.float64]) -> float:
    true = np.asarray(true, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    scale = np.abs(true).max()
    if scale == 0:
        return float(np.abs(pred).max())
    return float(np.abs(pred - true).max() / scale)


def max_relative_entrywise(
    true: NDArray[np.float64], pred: NDArray[np.float64], floor: float = 1e-300
) -> float:
    true = np.asarray(true, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    return float((np.abs(pred - true) / np.maximum(np.abs(true), floor)).max())


###### monte carlo


def covariance_standard_error(samples: NDArray[np.float64]) -> NDArray[np.float64]:
    r"""standard error of each entry of the empirical covariance of centered
    samples, rows are samples"""
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.shape[0]
    assert n >= 2
    cov = samples.T @ samples / n
    second = (samples**2).T @ (samples**2) / n
    return np.sqrt(np.maximum(second - cov**2, 0.0) / n)


def variance_standard_error(values: NDArray[np.float64]) -> float:
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    assert n >= 2
    centered = values - values.mean()
    var = centered.var(ddof=1)
    m4 = np.mean(centered**4)
    return float(np.sqrt(max(m4 - var**2 * (n - 3) / (n - 1), 0.0) / n))
