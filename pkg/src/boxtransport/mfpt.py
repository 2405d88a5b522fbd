"""Mean time to reach the goal wall and its Peclet-number form."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateError, ParameterError
from .model import EnclosureGeometry, MovementParams
from .numerics import find_root_bracketed

__all__ = [
    "Regime",
    "PecletContext",
    "LimitKind",
    "mean_time_to_goal",
    "mean_time_peclet_form",
    "mean_time_limit",
    "peclet",
    "omega",
    "peclet_from_omega",
]

# Taylor coefficients of g(u) = u - 1 + exp(-u) = sum_{k>=2} (-u)^k / k!
_G_SERIES = [(-1.0) ** k / math.factorial(k) for k in range(2, 26)]
_G_SWITCH = 1.0


def _g_scalar(u: float) -> float:
    if u < _G_SWITCH:
        acc = 0.0
        for c in reversed(_G_SERIES):
            acc = acc * u + c
        return acc * u * u
    return u + math.expm1(-u)


def _g(u):
    u = np.asarray(u, dtype=float)
    small = u < _G_SWITCH
    us = np.where(small, u, 0.0)
    acc = np.zeros_like(u)
    for c in reversed(_G_SERIES):
        acc = acc * us + c
    return np.where(small, acc * us * us, u + np.expm1(-u))


def _bracket_scalar(pe: float, c: float) -> float:
    """1 - (exp(-c pe) - exp(-(1+c) pe)) / pe without cancellation."""
    if pe == 0.0:
        return 0.0
    if math.isinf(pe):
        return 1.0
    return (_g_scalar(pe) + (-math.expm1(-c * pe)) * (-math.expm1(-pe))) / pe


def _check_x(x, geom: EnclosureGeometry):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > geom.a):
        raise ParameterError("x", f"must lie in [0, a={geom.a}]")
    return x


def _scalar_or_array(out):
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def mean_time_to_goal(params: MovementParams, geom: EnclosureGeometry, x):
    """Mean first-passage time W(x) from abscissa ``x`` to the goal wall.

    Requires both pv > 0 and qD > 0; use :func:`mean_time_limit` for the
    pure-advection and pure-diffusion cases. Accepts scalars or arrays and
    does not depend on the start ordinate.
    """
    pv, qD = params.pv, params.qD
    if pv == 0.0:
        raise DegenerateError("v", "pv = 0; use mean_time_limit(..., 'diffusion_only')")
    if qD == 0.0:
        raise DegenerateError("D", "qD = 0; use mean_time_limit(..., 'advection_only')")
    x = _check_x(x, geom)
    phi = pv / qD
    u = phi * (geom.a - x)
    num = _g(u) + (-np.expm1(-phi * x)) * (-np.expm1(-u))
    return _scalar_or_array(num / (phi * (1.0 - params.s) * pv))


def mean_time_peclet_form(params: MovementParams, geom: EnclosureGeometry, x):
    """W written as (a-x)/((1-s)pv) times a function of Pe and x/(a-x)."""
    pv, qD = params.pv, params.qD
    if pv == 0.0 or qD == 0.0:
        raise DegenerateError("v" if pv == 0.0 else "D", "Peclet form needs pv > 0 and qD > 0")
    x = _check_x(x, geom)
    out = np.empty(x.shape)
    flat_x, flat_out = x.reshape(-1), out.reshape(-1)
    for i, xi in enumerate(flat_x):
        L = geom.a - xi
        if L == 0.0:
            flat_out[i] = 0.0
            continue
        pe = pv * L / qD
        flat_out[i] = L / ((1.0 - params.s) * pv) * _bracket_scalar(pe, xi / L)
    return _scalar_or_array(out)


class LimitKind(str, Enum):
    DIFFUSION_ONLY = "diffusion_only"
    ADVECTION_ONLY = "advection_only"


def mean_time_limit(params: MovementParams, geom: EnclosureGeometry, x, which):
    """Closed-form limits of W.

    ``diffusion_only`` (v -> 0): (a^2 - x^2) / (2(1-s)qD).
    ``advection_only`` (D -> 0): (a - x) / ((1-s)pv).
    """
    kind = LimitKind(which)
    x = _check_x(x, geom)
    a, s = geom.a, params.s
    if kind is LimitKind.DIFFUSION_ONLY:
        if params.qD == 0.0:
            raise DegenerateError("D", "diffusion-only limit needs qD > 0")
        out = (a * a - x * x) / (2.0 * (1.0 - s) * params.qD)
    else:
        if params.pv == 0.0:
            raise DegenerateError("v", "advection-only limit needs pv > 0")
        out = (a - x) / ((1.0 - s) * params.pv)
    return _scalar_or_array(out)


class Regime(str, Enum):
    DIFFUSION = "diffusion-dominated"
    MIXED = "mixed"
    ADVECTION = "advection-dominated"


@dataclass(frozen=True)
class PecletContext:
    pe: float
    r: float
    L: float
    regime: Regime


def peclet(params: MovementParams, geom: EnclosureGeometry, x: float) -> PecletContext:
    """Peclet number over the remaining distance a - x, with a regime tag."""
    if params.qD == 0.0:
        raise DegenerateError("D", "Peclet number undefined for qD = 0")
    x = float(_check_x(x, geom))
    L = geom.a - x
    pe = params.pv * L / params.qD
    if pe < 0.1:
        regime = Regime.DIFFUSION
    elif pe > 10.0:
        regime = Regime.ADVECTION
    else:
        regime = Regime.MIXED
    return PecletContext(pe=pe, r=L / geom.a, L=L, regime=regime)


def _omega_scalar(pe: float, p: float, r: float) -> float:
    if not pe > 0.0:
        raise ParameterError("pe", f"must be > 0, got {pe}")
    if not 0.0 < p <= 1.0:
        raise ParameterError("p", f"must lie in (0, 1], got {p}")
    if not 0.0 < r <= 1.0:
        raise ParameterError("r", f"must lie in (0, 1], got {r}")
    return _bracket_scalar(pe, (1.0 - r) / r) / p


def omega(pe, p: float, r=1.0):
    """Travel time relative to pure advection over the same distance.

    ``omega * p`` rises from 0 (pe -> 0) to 1 (pe -> inf). Resting is not
    included; divide by (1 - s) to add it back.
    """
    if np.ndim(pe) == 0 and np.ndim(r) == 0:
        return _omega_scalar(float(pe), float(p), float(r))
    f = np.vectorize(lambda e, rr: _omega_scalar(float(e), float(p), float(rr)), otypes=[float])
    return f(pe, r)


def _edge(pred, lo: float, hi: float) -> float:
    """Smallest double in (lo, hi] where ``pred`` holds (pred(lo) false, pred(hi) true)."""
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi
        if pred(mid):
            hi = mid
        else:
            lo = mid


def peclet_from_omega(omega_measured: float, p: float, tol: float = 1e-14) -> float:
    """Invert ``omega(pe, p, r=1)`` for ``pe``.

    The search runs on log2(pe), starting in [-20, 40] and widening as
    needed. Because omega saturates, many doubles ``pe`` map to the same
    double omega at large ``pe``; the midpoint of that preimage is returned.
    """
    if not 0.0 < p <= 1.0:
        raise ParameterError("p", f"must lie in (0, 1], got {p}")
    w = float(omega_measured)
    if not math.isfinite(w) or w <= 0.0:
        raise ParameterError("omega", f"must be positive and finite, got {w}")
    if w * p > 1.0:
        raise ParameterError("omega", f"unattainable: omega*p = {w * p} > 1")
    if w * p == 1.0 or w >= 1.0 / p:
        raise ParameterError("omega", "omega = 1/p corresponds to pe = infinity")

    def F(pe: float) -> float:
        return _omega_scalar(pe, p, 1.0)

    def h(l2: float) -> float:
        return F(2.0 ** l2) - w

    lo, hi = -20.0, 40.0
    while h(lo) > 0.0:
        if lo <= -1000.0:
            raise ParameterError("omega", f"too small to invert: {w}")
        lo -= 40.0
    while h(hi) < 0.0:
        if hi >= 1000.0:
            raise ParameterError("omega", f"too close to 1/p to invert: {w}")
        hi += 40.0
    l2 = find_root_bracketed(h, lo, hi, tol=tol).root
    pe = 2.0 ** l2

    # Widen around the estimate until F straddles w, then locate both ends
    # of the set {pe : F(pe) == w}.
    a, b = pe, pe
    step = 1e-9
    while a > 0.0 and F(a) >= w:
        a = pe * (1.0 - step)
        step *= 4.0
        if step > 1.0:
            a = 0.0
    step = 1e-9
    while F(b) <= w:
        b = pe * (1.0 + step)
        step *= 4.0
    if a == 0.0:
        a = 2.0 ** lo
    left = _edge(lambda e: F(e) >= w, a, b)
    right = _edge(lambda e: F(e) > w, a, b)
    return 0.5 * (left + right)
