"""Special functions, root finding, quadrature and image-series truncation.

The heavy lifting is delegated to SciPy: ``scipy.special`` for the error
functions, Brent's method for roots and QUADPACK for quadrature. This module
adds the contracts the rest of the package relies on: checked brackets,
honest error estimates and explicit failures instead of silent warnings.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .errors import BracketError, ConvergenceError, ParameterError

__all__ = [
    "erf",
    "erfc",
    "RootResult",
    "QuadratureResult",
    "find_root_bracketed",
    "integrate_adaptive",
    "integrate_semi_infinite",
    "image_series_terms",
]


def erf(x):
    return special.erf(x)


def erfc(x):
    """Complementary error function with full relative accuracy in the tail."""
    return special.erfc(x)


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int


def find_root_bracketed(f: Callable[[float], float], lo: float, hi: float,
                        tol: float = 1e-12, maxiter: int = 500) -> RootResult:
    """Root of ``f`` inside ``[lo, hi]`` by Brent's method.

    Raises :class:`BracketError` when ``f(lo)`` and ``f(hi)`` share a sign and
    :class:`ConvergenceError` when ``maxiter`` is exhausted.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise BracketError("bracket endpoints must be finite")
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = float(f(lo)), float(f(hi))
    if flo == 0.0:
        return RootResult(lo, 0.0, 0)
    if fhi == 0.0:
        return RootResult(hi, 0.0, 0)
    if math.isnan(flo) or math.isnan(fhi) or (flo > 0) == (fhi > 0):
        raise BracketError(f"f({lo})={flo} and f({hi})={fhi} do not bracket a root")
    xtol = 0.5 * tol
    rtol = max(0.5 * tol, 4.0 * np.finfo(float).eps)
    try:
        root, info = optimize.brentq(f, lo, hi, xtol=xtol, rtol=rtol,
                                     maxiter=maxiter, full_output=True, disp=False)
    except RuntimeError as exc:  # pragma: no cover - brentq only raises on disp=True
        raise ConvergenceError(str(exc)) from exc
    if not info.converged:
        raise ConvergenceError(f"root search stopped after {info.iterations} iterations")
    root = min(max(root, lo), hi)
    return RootResult(root, float(f(root)), info.iterations)


def integrate_adaptive(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-10, points: Sequence[float] | None = None,
                       limit: int = 500) -> QuadratureResult:
    """Adaptive Gauss-Kronrod quadrature with an absolute tolerance ``tol``."""
    if lo == hi:
        return QuadratureResult(0.0, 0.0, 0)
    if points is not None:
        points = [x for x in points if min(lo, hi) < x < max(lo, hi)] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, lo, hi, epsabs=tol, epsrel=0.0, limit=limit,
                             points=points, full_output=1)
    value, err, info = out[0], out[1], out[2]
    if len(out) > 3 or not err <= tol:
        msg = out[3] if len(out) > 3 else "error estimate above tolerance"
        raise ConvergenceError(
            f"quadrature on [{lo}, {hi}] failed: estimate {err:.3g} vs tol {tol:.3g} ({msg})"
        )
    return QuadratureResult(float(value), float(err), int(info["neval"]))


def integrate_semi_infinite(f: Callable[[float], float], lo: float, decay_scale: float,
                            tol: float = 1e-10, center: float | None = None) -> QuadratureResult:
    """Integral of ``f`` over ``[lo, inf)`` for Gaussian-decaying integrands.

    The range is cut at ``max(lo, center) + 10 * decay_scale``; beyond that a
    Gaussian of that scale has lost more than 40 e-folds. ``center`` is the
    location of the bulk of the integrand (defaults to ``lo``) and is passed
    to the quadrature as a breakpoint.
    """
    if not decay_scale > 0:
        raise ParameterError("decay_scale", f"must be > 0, got {decay_scale}")
    c = lo if center is None else max(lo, center)
    hi = c + 10.0 * decay_scale
    return integrate_adaptive(f, lo, hi, tol, points=[c] if c > lo else None)


def image_series_terms(spread: float, period: float, tol: float) -> int:
    """Number of image pairs ``K`` on each side needed for tolerance ``tol``.

    With ``r = spread * sqrt(ln(1/tol)) / period`` this is ``1`` for ``r <= 1``
    and ``ceil(r) + 1`` otherwise. The nearest omitted image then sits at
    least ``K * period >= spread * sqrt(ln(1/tol))`` away, so its Gaussian
    factor ``exp(-d^2/spread^2)`` is below ``tol``.
    """
    if not period > 0:
        raise ParameterError("period", f"must be > 0, got {period}")
    if not 0 < tol < 1:
        raise ParameterError("tol", f"must lie in (0, 1), got {tol}")
    if spread <= 0:
        return 1
    r = spread * math.sqrt(math.log(1.0 / tol)) / period
    return 1 if r <= 1.0 else math.ceil(r) + 1
