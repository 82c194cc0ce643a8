import logging
import os
import re
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from semiflex.errors import IOFailure, UsageError
from semiflex.utils import KappaRule, parse_kappa_rule

logger = logging.getLogger(__name__)

FORMATS = ("csv+svg", "csv", "parquet")

_RANGE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")


def parse_int_list(text: Union[str, int]) -> Tuple[int, ...]:
    r"""``"64,128,256"`` or a doubling range ``"16..256"``"""
    text = str(text)
    match = _RANGE.match(text)
    try:
        if match is not None:
            lo, hi = int(match.group(1)), int(match.group(2))
            if lo < 1 or hi < lo:
                raise ValueError
            values = []
            while lo <= hi:
                values.append(lo)
                lo *= 2
            return tuple(values)
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise UsageError(f"Cannot parse integer list '{text}'.") from None


def parse_float_list(text: Union[str, float]) -> Tuple[float, ...]:
    try:
        return tuple(float(part) for part in str(text).split(",") if part.strip())
    except ValueError:
        raise UsageError(f"Cannot parse float list '{text}'.") from None


def _parse_bool(text: Union[str, bool]) -> bool:
    if isinstance(text, bool):
        return text
    if str(text).lower() in ("1", "true", "yes", "on"):
        return True
    if str(text).lower() in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"Cannot parse boolean '{text}'.")


def _optional_int(text: Union[str, int, None]) -> Optional[int]:
    return None if text is None else int(text)


_CONVERTERS = {
    "d": int,
    "N": parse_int_list,
    "kappa_rule": str,
    "kappas": parse_float_list,
    "seed": int,
    "samples": int,
    "paths": int,
    "out": Path,
    "format": str,
    "threads": _optional_int,
    "preset": str,
    "f": str,
    "op": str,
    "rho": str,
    "ladder": parse_int_list,
    "domain": str,
    "classification": str,
    "k": int,
    "verbose": _parse_bool,
}


@dataclass(frozen=True)
class ExperimentConfig:
    r"""The resolved parameters of one command.

    Values come from the command line, then from a ``--config`` file, then
    from the defaults below. Every report echoes :meth:`echo` in its header.

    Args:
        command (str): The subcommand.
        d (int): The dimension. (default: :obj:`1`)
        N (Tuple[int, ...]): System sizes. (default: :obj:`()`)
        kappa_rule (str): Stiffness rule ``<float>``, ``N^<float>`` or
            ``<float>*N^<float>``. (default: :obj:`"0"`)
        kappas (Tuple[float, ...]): Literal stiffness list for trajectories.
        seed (int): The run seed. (default: :obj:`0`)
        samples (int): Monte Carlo samples. (default: :obj:`0`)
        paths (int): Simulated paths per stiffness. (default: :obj:`3`)
        out (pathlib.Path): Output directory. (default: :obj:`"out"`)
        format (str): ``"csv+svg"``, ``"csv"`` or ``"parquet"``.
        threads (int, optional): Worker threads.
        preset (str, optional): Trajectory preset ``"fig1"`` or ``"fig2"``.
        f (str): Test function name. (default: :obj:`"sin"`)
        op (str): Operator family or convergence case name.
        rho (str, optional): Coefficient rule or literal.
        ladder (Tuple[int, ...], optional): Convergence mesh sizes.
        domain (str): ``"box"`` or ``"disc"``. (default: :obj:`"box"`)
        classification (str, optional): ``"general"`` or ``"chain"``;
            commands pick their own default when unset.
        k (int): Number of eigenpairs. (default: :obj:`50`)
        verbose (bool): Debug logging. (default: :obj:`False`)
    """

    command: str
    d: int = 1
    N: Tuple[int, ...] = ()
    kappa_rule: str = "0"
    kappas: Tuple[float, ...] = ()
    seed: int = 0
    samples: int = 0
    paths: int = 3
    out: Path = Path("out")
    format: str = "csv+svg"
    threads: Optional[int] = None
    preset: Optional[str] = None
    f: str = "sin"
    op: str = "bilaplacian"
    rho: Optional[str] = None
    ladder: Optional[Tuple[int, ...]] = None
    domain: str = "box"
    classification: Optional[str] = None
    k: int = 50
    verbose: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise UsageError(f"d must be positive (got {self.d}).")
        if any(N < 1 for N in self.N):
            raise UsageError(f"Every N must be positive (got {list(self.N)}).")
        if self.seed < 0:
            raise UsageError(f"seed must be non-negative (got {self.seed}).")
        if self.samples < 0:
            raise UsageError(f"samples must be non-negative (got {self.samples}).")
        if self.paths < 1:
            raise UsageError(f"paths must be positive (got {self.paths}).")
        if self.threads is not None and self.threads < 1:
            raise UsageError(f"threads must be positive (got {self.threads}).")
        if self.k < 1:
            raise UsageError(f"k must be positive (got {self.k}).")
        if self.format not in FORMATS:
            raise UsageError(f"Unknown format '{self.format}' (use one of {list(FORMATS)}).")
        if any(kappa < 0 for kappa in self.kappas):
            raise UsageError(f"Every kappa must be non-negative (got {list(self.kappas)}).")
        self.kappa()

    @classmethod
    def from_sources(
        cls,
        command: str,
        flags: Dict[str, Any],
        file_values: Optional[Dict[str, str]] = None,
    ) -> "ExperimentConfig":
        r"""Merges command-line ``flags`` over ``file_values``. Keys set to
        :obj:`None` are treated as absent."""
        known = {f.name for f in fields(cls)} - {"command"}
        merged: Dict[str, Any] = {}
        for source in (file_values or {}, flags):
            for key, value in source.items():
                if value is None:
                    continue
                key = key.replace("-", "_")
                if key not in known:
                    raise UsageError(f"Unknown configuration key '{key}'.")
                try:
                    merged[key] = _CONVERTERS[key](value)
                except (TypeError, ValueError) as e:
                    if isinstance(e, UsageError):
                        raise
                    raise UsageError(f"Invalid value '{value}' for '{key}'.") from None
        return cls(command=command, **merged)

    def kappa(self) -> KappaRule:
        return parse_kappa_rule(self.kappa_rule)

    @property
    def suffix(self) -> str:
        return ".parquet" if self.format == "parquet" else ".csv"

    @property
    def svg(self) -> bool:
        return self.format == "csv+svg"

    def echo(self) -> Dict[str, Any]:
        r"""json-friendly view of the set parameters"""
        out = {}
        for key, value in asdict(self).items():
            if value is None or key in ("verbose", "threads", "out"):
                continue
            if isinstance(value, tuple):
                value = list(value)
            out[key] = value
        out["kappa_rule"] = str(self.kappa())
        return out


def load_config(path: Union[str, os.PathLike]) -> Dict[str, str]:
    r"""Reads a flat ``key=value`` file; blank lines and ``#`` comments are
    ignored."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise IOFailure(f"Could not read config file '{path}': {e}") from e
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected 'key=value' (got '{line}').")
        values[key.strip()] = value.strip()
    logger.debug(f"loaded {len(values)} settings from {path}")
    return values
