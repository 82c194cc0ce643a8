import hashlib
import json
import logging
import os
import re
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Optional

import numpy as np

from semiflex.errors import UsageError

logger = logging.getLogger(__name__)

THREADS_ENV = "SEMIFLEX_THREADS"

_FLOAT = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_KAPPA_RULE = re.compile(
    rf"^\s*(?:(?P<coef>{_FLOAT})\s*\*\s*)?N\s*\^\s*(?P<power>{_FLOAT})\s*$"
)


@dataclass(frozen=True)
class KappaRule:
    r"""A stiffness rule :math:`\kappa(N) = c N^p`.

    Literal values are stored with ``power = 0``.

    Args:
        coef (float): The prefactor :math:`c`.
        power (float): The exponent :math:`p`.
        text (str): The rule as the user wrote it.
    """

    coef: float
    power: float
    text: str

    def __call__(self, N: int) -> float:
        return float(self.coef * float(N) ** self.power)

    def __str__(self) -> str:
        if self.power == 0:
            return f"{self.coef!r}"
        return f"{self.coef!r}*N^{self.power!r}"


def parse_kappa_rule(text: str) -> KappaRule:
    r"""parse ``<float>``, ``N^<float>`` or ``<float>*N^<float>``"""
    text = str(text)
    match = _KAPPA_RULE.match(text)
    if match is not None:
        coef = match.group("coef")
        rule = KappaRule(
            coef=1.0 if coef is None else float(coef),
            power=float(match.group("power")),
            text=text.strip(),
        )
    else:
        try:
            rule = KappaRule(coef=float(text), power=0.0, text=text.strip())
        except ValueError:
            raise UsageError(
                f"Cannot parse kappa rule '{text}'. Expected '<float>', "
                f"'N^<float>' or '<float>*N^<float>'."
            ) from None
    if not np.isfinite(rule.coef) or rule.coef < 0:
        raise UsageError(f"kappa must be finite and non-negative (got '{text}').")
    return rule


def num_threads(requested: Optional[int] = None) -> int:
    r"""number of worker threads, capped by ``SEMIFLEX_THREADS``"""
    cap = os.environ.get(THREADS_ENV)
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer (got '{cap}').")
    return max(1, int(n))


def stream(seed: int, index: int) -> np.random.Generator:
    r"""independent generator for work item ``index`` of run ``seed``"""
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(index))))


def content_hash(payload: Dict[str, Any]) -> str:
    r"""sha256 over a canonical json rendering of ``payload``"""
    blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@contextmanager
def timed(message: str) -> Iterator[None]:
    logger.info(f"{message}...")
    tic = time.time()
    yield
    toc = time.time()
    logger.info(f"done in {toc - tic:.2f} seconds.")
