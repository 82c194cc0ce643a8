import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List

import numpy as np
import pandas as pd
from tqdm import tqdm

from semiflex.convergence import get_case, rate_report
from semiflex.data.grid import Classification, Domain, DomainKind, GridGeometry, build_grid
from semiflex.data.regime import Regime, infer_regime
from semiflex.data.table import Table
from semiflex.discrete.dirichlet import assemble, green_function, scaled_spec
from semiflex.discrete.operators import MixedOperatorSpec, OperatorBase
from semiflex.discrete.spectral import negative_norm, spectrum, weyl_table
from semiflex.errors import UsageError
from semiflex.experiments.config import ExperimentConfig
from semiflex.experiments.svg import write_svg
from semiflex.model.field import ModelParams, pair, pairing_variance, pairings_table, sample
from semiflex.model.rw1d import RWParams, simulate_W, var_W
from semiflex.model.testfunctions import SmoothFunction, get_function
from semiflex.utils import KappaRule, content_hash

logger = logging.getLogger(__name__)

PRESETS: Dict[str, Dict[str, Any]] = {
    "fig1": {"N": 10_000, "kappas": (0.0, 2e2, 2e4, 2e6)},
    # 2*10^6.5 read as 2 * 10**6.5
    "fig2": {"N": 1_000, "kappas": (2 * 10**6.5, 2e7, 2e8)},
}

REFERENCE_N = {1: 1024, 2: 40, 3: 12}


def _metadata(config: ExperimentConfig, **extra: Any) -> Dict[str, Any]:
    echo = config.echo()
    return {"command": config.command, **echo, "config_hash": content_hash(echo), **extra}


def _save(table: Table, config: ExperimentConfig, name: str) -> Path:
    path = config.out / f"{name}{config.suffix}"
    table.save(path)
    logger.info(f"wrote {path}")
    return path


def _single_N(config: ExperimentConfig) -> int:
    if len(config.N) != 1:
        raise UsageError(f"'{config.command}' needs exactly one N (got {list(config.N)}).")
    return config.N[0]


def _grid(config: ExperimentConfig, N: int, default: Classification) -> GridGeometry:
    try:
        domain = Domain(DomainKind(config.domain), config.d)
        classification = Classification(config.classification or default)
    except ValueError as e:
        raise UsageError(str(e)) from None
    return build_grid(domain, N, classification)


def _function(config: ExperimentConfig) -> SmoothFunction:
    try:
        return get_function(config.f)
    except ValueError as e:
        raise UsageError(str(e)) from None


###### trajectories


def cmd_trajectories(config: ExperimentConfig) -> List[Path]:
    r"""Simulates paths of the walk for a list of stiffnesses, one table per
    stiffness plus an overlay figure of the first path of each."""
    if config.d != 1:
        raise UsageError(f"Trajectories exist in d=1 only (got d={config.d}).")
    if config.preset is not None:
        if config.preset not in PRESETS:
            raise UsageError(f"Unknown preset '{config.preset}' (known: {list(PRESETS)}).")
        N, kappas = PRESETS[config.preset]["N"], PRESETS[config.preset]["kappas"]
        tag = config.preset
    else:
        N, kappas = _single_N(config), config.kappas
        if len(kappas) == 0:
            raise UsageError("Give --kappas or a --preset.")
        tag = "custom"

    written, series = [], []
    for i, kappa in enumerate(kappas):
        params = RWParams(N, kappa)
        W = simulate_W(params, config.seed, config.paths, n_jobs=config.threads)
        df = pd.DataFrame(
            {
                "path_id": np.repeat(np.arange(config.paths), N),
                "n": np.tile(np.arange(1, N + 1), config.paths),
                "W": W.ravel(),
            }
        )
        metadata = _metadata(
            config,
            preset=tag,
            N=N,
            kappa=kappa,
            beta=params.beta,
            gamma=params.gamma,
            sigma2=params.sigma2,
            regime=infer_regime(1, N, params.beta).value,
            terminal_sd=math.sqrt(var_W(N, params)),
        )
        written.append(_save(Table(df, metadata), config, f"trajectories_{tag}_{i}"))
        series.append((f"kappa={kappa:.4g}", np.arange(1, N + 1), W[0]))

    if config.svg:
        path = config.out / f"trajectories_{tag}.svg"
        write_svg(path, series, title=f"W_n, N={N}, seed={config.seed}")
        written.append(path)
    return written


###### phase scan


def variance_limit(regime: Regime, d: int, f: SmoothFunction, kappa_rule: KappaRule) -> float:
    r"""The N to infinity limit of the pairing variance.

    Uses the closed form of ``f`` when it has one; otherwise the negative
    norm of ``f`` under the limiting operator on a reference grid.
    """
    regime = Regime(regime)
    if d == 1 and regime.value in f.limits:
        return f.limits[regime.value]
    N_ref = REFERENCE_N.get(d)
    if N_ref is None:
        raise UsageError(f"No reference grid for d={d}.")
    classification = Classification.CHAIN if d == 1 else Classification.GENERAL
    g = build_grid(Domain(DomainKind.BOX, d), N_ref, classification)
    spec, factor = scaled_spec(regime, g, kappa_rule(N_ref))
    if regime != Regime.CRITICAL:
        spec = replace(spec, rho=0.0)
    A = assemble(spec, g, normalized=False)
    order = 2 * spec.m
    return factor * negative_norm(f, spectrum(A, A.n), s=order // 2, order=order)


def cmd_phase_scan(config: ExperimentConfig) -> List[Path]:
    r"""Exact and Monte Carlo pairing variances across system sizes, against
    the limit of the regime."""
    if len(config.N) == 0:
        raise UsageError("phase-scan needs --N.")
    rule = config.kappa()
    f = _function(config)
    default = Classification.CHAIN if config.d == 1 else Classification.GENERAL

    rows, regimes = [], set()
    for N in tqdm(config.N, disable=not config.verbose, desc="N"):
        params = ModelParams(config.d, N, rule(N))
        regimes.add(params.regime.value)
        g = _grid(config, N, default)
        var_exact = pairing_variance(params, g, f)
        var_mc = math.nan
        if config.samples > 0:
            ensemble = sample(params, g, config.samples, config.seed, n_jobs=config.threads)
            var_mc = float(np.mean(pair(ensemble, f) ** 2))
        limit = variance_limit(params.regime, config.d, f, rule)
        rows.append(
            {
                "N": N,
                "kappa": params.kappa,
                "var_exact": var_exact,
                "var_mc": var_mc,
                "limit": limit,
                "ratio": var_exact / limit,
            }
        )
    regime = regimes.pop() if len(regimes) == 1 else "mixed"
    table = Table(pd.DataFrame(rows), _metadata(config, regime=regime))
    return [_save(table, config, f"phase_scan_d{config.d}_{f.name}")]


###### green's function and samples


def cmd_green(config: ExperimentConfig) -> List[Path]:
    N = _single_N(config)
    kappa = config.kappa()(N)
    g = _grid(config, N, Classification.GENERAL)
    G = green_function(g, kappa)
    extra = {"regime": infer_regime(g.d, N, kappa).value, "kappa": kappa}
    green = G.to_table()
    green.metadata.update(_metadata(config, **extra))
    grid = g.to_table()
    grid.metadata.update(_metadata(config, **extra))
    return [_save(green, config, "green"), _save(grid, config, "grid")]


def cmd_sample(config: ExperimentConfig) -> List[Path]:
    N = _single_N(config)
    if config.samples < 1:
        raise UsageError("sample needs --samples >= 1.")
    params = ModelParams(config.d, N, config.kappa()(N))
    g = _grid(config, N, Classification.GENERAL)
    ensemble = sample(params, g, config.samples, config.seed, n_jobs=config.threads, progress=config.verbose)
    samples = ensemble.to_table()
    samples.metadata.update(_metadata(config, regime=params.regime.value))
    f = _function(config)
    pairings = pairings_table(pair(ensemble, f), params, f.name, config.seed)
    pairings.metadata.update(_metadata(config, regime=params.regime.value))
    return [_save(samples, config, "samples"), _save(pairings, config, f"pairings_{f.name}")]


###### convergence and spectra


def cmd_converge(config: ExperimentConfig) -> List[Path]:
    try:
        case = get_case(config.op, config.d, rho=config.rho, ladder=config.ladder)
    except ValueError as e:
        if isinstance(e, UsageError):
            raise
        raise UsageError(str(e)) from None
    table = rate_report(case, n_jobs=config.threads)
    table.metadata.update(_metadata(config))
    if table.metadata["result"] != "PASS":
        logger.warning(f"{case.name} (d={case.d}) left the error envelope")
    return [_save(table, config, f"converge_{case.name}_d{case.d}")]


def cmd_spectrum(config: ExperimentConfig) -> List[Path]:
    N = _single_N(config)
    try:
        base = OperatorBase(config.op)
        rho = float(config.rho) if config.rho is not None else (1.0 if base == OperatorBase.MIXED else 0.0)
    except ValueError as e:
        raise UsageError(str(e)) from None
    g = _grid(config, N, Classification.GENERAL)
    A = assemble(MixedOperatorSpec(base, rho, g.h), g, normalized=False)
    result = spectrum(A, min(config.k, A.n))
    table = weyl_table(result, g.d, 2 * base.order)
    table.metadata.update(_metadata(config, rho=rho))
    name = f"spectrum_{base.value}_d{g.d}"
    written = [_save(table, config, name)]
    if config.svg:
        j = np.arange(1, len(result) + 1)
        path = config.out / f"{name}.svg"
        write_svg(path, [("log eigenvalue", np.log(j), np.log(result.eigenvalues))], title=name)
        written.append(path)
    return written


commands: Dict[str, Callable[[ExperimentConfig], List[Path]]] = {
    "trajectories": cmd_trajectories,
    "phase-scan": cmd_phase_scan,
    "green": cmd_green,
    "sample": cmd_sample,
    "converge": cmd_converge,
    "spectrum": cmd_spectrum,
}


def run(config: ExperimentConfig) -> List[Path]:
    return commands[config.command](config)
