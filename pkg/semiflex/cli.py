r"""Command-line front end.

Exit codes: 0 on success, 2 on bad input, 3 on a numerical failure and 4 when
an artifact cannot be read or written.
"""

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np
from scipy.sparse.linalg import ArpackError

from semiflex import __version__
from semiflex.errors import IOFailure, SemiflexError
from semiflex.experiments import ExperimentConfig, load_config, run

logger = logging.getLogger("semiflex")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--verbose", action="store_true", default=None, help="debug logging")
    parser.add_argument("--config", help="flat key=value file with defaults")
    parser.add_argument("--out", help="output directory (default: out)")
    parser.add_argument("--seed", help="run seed (default: 0)")
    parser.add_argument("--threads", help="worker threads, capped by SEMIFLEX_THREADS")
    parser.add_argument("--format", help="csv+svg (default), csv or parquet")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semiflex",
        description="Numerical lab for Gaussian interfaces with gradient and Laplacian energy.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectories", help="simulate walk paths for a list of stiffnesses")
    p.add_argument("--preset", choices=["fig1", "fig2"])
    p.add_argument("--N", help="walk length")
    p.add_argument("--kappas", help="comma-separated stiffness list")
    p.add_argument("--paths", help="paths per stiffness (default: 3)")
    _common(p)

    p = sub.add_parser("phase-scan", help="pairing variances across system sizes")
    p.add_argument("--d")
    p.add_argument("--N", help="comma-separated sizes or a doubling range 16..256")
    p.add_argument("--kappa-rule", help="<float>, N^<float> or <float>*N^<float>")
    p.add_argument("--f", help="test function name (default: sin)")
    p.add_argument("--samples", help="Monte Carlo samples per size (default: 0)")
    p.add_argument("--classification", choices=["general", "chain"])
    _common(p)

    for name, description in [
        ("green", "the lattice Green's function on a grid"),
        ("sample", "exact samples of the Gibbs field"),
    ]:
        p = sub.add_parser(name, help=description)
        p.add_argument("--d")
        p.add_argument("--N")
        p.add_argument("--kappa-rule")
        p.add_argument("--domain", choices=["box", "disc"])
        p.add_argument("--classification", choices=["general", "chain"])
        if name == "sample":
            p.add_argument("--samples")
            p.add_argument("--f")
        _common(p)

    p = sub.add_parser("converge", help="error envelope of a manufactured case")
    p.add_argument("--op", help="bilaplacian, mixed, neg-laplacian or quadratic")
    p.add_argument("--d")
    p.add_argument("--rho", "--rho1", "--rho2", "--rho3", dest="rho", help="coefficient rule")
    p.add_argument("--ladder", help="comma-separated sizes or a doubling range 16..256")
    _common(p)

    p = sub.add_parser("spectrum", help="smallest eigenvalues and the Weyl exponent")
    p.add_argument("--op", help="neg-laplacian, bilaplacian or mixed")
    p.add_argument("--d")
    p.add_argument("--N")
    p.add_argument("--k", help="number of eigenpairs (default: 50)")
    p.add_argument("--rho")
    p.add_argument("--domain", choices=["box", "disc"])
    p.add_argument("--classification", choices=["general", "chain"])
    _common(p)
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    flags = vars(args)
    command = flags.pop("command")
    config_path = flags.pop("config")
    _configure_logging(bool(flags.get("verbose")))

    try:
        file_values = load_config(config_path) if config_path else None
        config = ExperimentConfig.from_sources(command, flags, file_values)
        if config.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        written = run(config)
    except IOFailure as e:
        logger.error(str(e))
        return EXIT_IO
    except SemiflexError as e:
        logger.error(str(e))
        return EXIT_USAGE if isinstance(e, ValueError) else EXIT_NUMERICAL
    except (np.linalg.LinAlgError, ArpackError) as e:
        logger.error(f"numerical failure: {e}")
        return EXIT_NUMERICAL
    except ValueError as e:
        logger.error(str(e))
        return EXIT_USAGE

    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
