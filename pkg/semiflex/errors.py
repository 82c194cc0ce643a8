r"""Errors raised by semiflex.

Every error derives from the builtin exception a caller would otherwise expect
(:class:`ValueError` for bad input, :class:`RuntimeError` for numerical
failures, :class:`OSError` for file output), so ``except ValueError`` keeps
working around semiflex calls.
"""


class SemiflexError(Exception):
    r"""Base class of all semiflex errors."""


###### input errors


class EmptyInterior(SemiflexError, ValueError):
    r"""The grid has no interior point, so there is nothing to solve for."""


class OutOfDomain(SemiflexError, ValueError):
    r"""A point lies outside the closed domain."""


class InsufficientLadder(SemiflexError, ValueError):
    r"""A convergence ladder has too few mesh sizes to fit a constant."""


class InsufficientTrustedWindow(SemiflexError, ValueError):
    r"""Too few eigenvalues below the discretization-trust cutoff."""


class UsageError(SemiflexError, ValueError):
    r"""Invalid command-line or configuration input."""


###### numerical errors


class NonSymmetricStencil(SemiflexError, RuntimeError):
    r"""The characteristic polynomial has a non-negligible imaginary part."""


class FactorizationFailure(SemiflexError, RuntimeError):
    r"""Cholesky factorization failed; the assembled matrix is not SPD."""


class DegenerateDenominator(SemiflexError, RuntimeError):
    r"""The bridge denominator r(k) vanished at working precision."""


class SingularConditioning(SemiflexError, RuntimeError):
    r"""The conditioning block of a Gaussian vector is not positive definite."""


class NoConvergence(SemiflexError, RuntimeError):
    r"""A solve or eigensolve did not reach its tolerance."""


###### io errors


class IOFailure(SemiflexError, OSError):
    r"""An artifact could not be written."""
