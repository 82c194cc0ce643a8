import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class SmoothFunction:
    r"""A named test function with analytic reference values.

    Args:
        name (str): Registry name.
        func (Callable): Maps points of shape ``(m, d)`` to ``m`` values.
        description (str): Human-readable formula.
        limits (Dict[str, float]): Known d=1 limits of the pairing variance
            keyed by regime name.
    """

    name: str
    func: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    description: str
    limits: Dict[str, float] = field(default_factory=dict)

    def __call__(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return self.func(points)


def _sin(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.prod(math.sqrt(2) * np.sin(np.pi * x), axis=-1)


def _sin2(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.prod(np.sin(np.pi * x) ** 2, axis=-1)


def _bump(x: NDArray[np.float64]) -> NDArray[np.float64]:
    r2 = np.sum((4.0 * (x - 0.5)) ** 2, axis=-1)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def _one(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.ones(x.shape[0])


function_list: List[SmoothFunction] = [
    SmoothFunction(
        "sin",
        _sin,
        "prod_i sqrt(2) sin(pi x_i)",
        limits={"sub": 1 / math.pi**2, "super": 1 / math.pi**4 - 8 / math.pi**6},
    ),
    SmoothFunction("sin2", _sin2, "prod_i sin(pi x_i)^2"),
    SmoothFunction("bump", _bump, "exp(1 - 1/(1 - |4(x - 1/2)|^2)) inside the ball"),
    SmoothFunction("one", _one, "1"),
]

function_dict = {f.name: f for f in function_list}

function_names = list(function_dict.keys())


def get_function(name: str) -> SmoothFunction:
    r"""Returns a test function by name."""
    try:
        return function_dict[name]
    except KeyError:
        raise ValueError(f"Unknown test function '{name}' (known: {function_names}).") from None
