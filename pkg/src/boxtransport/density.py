"""Transient and steady-state densities in the closed box.

The x-direction density is the free drifting Gaussian with its mirror image
behind the back wall, plus the mass Q(t) that would have crossed the goal
wall, returned into the box as an exponential profile of rate h(t) and folded
by both x-walls. The y-direction density is the doubly reflected Gaussian.
All times are active (non-resting) times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConvergenceError, DegenerateError, ParameterError
from .model import EnclosureGeometry, MovementParams
from .numerics import erf, erfc, find_root_bracketed, image_series_terms

__all__ = [
    "GridSpec",
    "DensityField",
    "RefluxState",
    "passing_probability",
    "survival_probability",
    "x_marginal_free",
    "y_marginal",
    "q_redistributed",
    "reflux_rate_h",
    "reflux_state",
    "psi_series",
    "x_density",
    "density_at",
    "density_grid",
    "steady_state_paper",
    "steady_state_exact",
    "steady_state_cell_mass",
    "median_arrival_time",
    "q_nondim",
    "h_nondim",
    "density_nondim",
]

_SQRT_PI = math.sqrt(math.pi)
Reflux = Literal["exponential", "full"]


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 1:
                raise ParameterError(name, f"must be an integer >= 1, got {n}")
            object.__setattr__(self, name, int(n))

    def x_centers(self, geom: EnclosureGeometry) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * (geom.a / self.nx)

    def y_centers(self, geom: EnclosureGeometry) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * (geom.b / self.ny) - 0.5 * geom.b

    def cell_area(self, geom: EnclosureGeometry) -> float:
        return (geom.a / self.nx) * (geom.b / self.ny)


@dataclass(frozen=True)
class DensityField:
    """Density sampled at cell centres; ``values[i, j]`` is at ``(x[i], y[j])``."""

    grid: GridSpec
    t: float
    values: np.ndarray
    mass: float
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class RefluxState:
    q_mass: float
    h: float


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def _need_diffusion(params: MovementParams):
    if params.qD == 0.0:
        raise DegenerateError("D", "density needs qD > 0 (pure advection is a moving point mass)")


def _check_t(t, allow_zero=False):
    t = np.asarray(t, dtype=float)
    bad = (t < 0) if allow_zero else (t <= 0)
    if np.any(bad) or np.any(~np.isfinite(t)):
        if not allow_zero and np.any(t == 0):
            raise ParameterError("t", "t = 0: the initial condition is a point mass at (x0, y0)")
        raise ParameterError("t", "must be finite and > 0")
    return t


def _check_box(x, y, geom: EnclosureGeometry):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > geom.a):
        raise ParameterError("x", f"outside [0, a={geom.a}]")
    if y is None:
        return x, None
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 0.5 * geom.b):
        raise ParameterError("y", f"outside [-b/2, b/2] with b={geom.b}")
    return x, y


def passing_probability(x, t, params: MovementParams, x0: float):
    """Free-space mass beyond ``x`` at time ``t`` for a start at ``x0``.

    The free process is the drifting Gaussian reflected at the back wall.
    Evaluated as a sum of two erfc terms, which never cancel. ``t = 0`` gives
    0. With qD = 0 the step function of the ballistic front is returned.
    """
    x = np.asarray(x, dtype=float)
    t = _check_t(t, allow_zero=True)
    pv, qD = params.pv, params.qD
    front = x0 + pv * t
    if qD == 0.0:
        out = np.where(front > x, 1.0, np.where(front == x, 0.5, 0.0))
        return _out(np.where(t == 0, 0.0, out))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sqrt(4.0 * qD * t)
        A = (front - x) / s
        B = (front + x) / s
        out = 0.5 * erfc(-A) + 0.5 * erfc(B)
    return _out(np.where(t == 0, 0.0, out))


def survival_probability(x, t, params: MovementParams, x0: float):
    """``1 - passing_probability`` evaluated without cancellation."""
    x = np.asarray(x, dtype=float)
    t = _check_t(t, allow_zero=True)
    pv, qD = params.pv, params.qD
    front = x0 + pv * t
    if qD == 0.0:
        out = np.where(front > x, 0.0, np.where(front == x, 0.5, 1.0))
        return _out(np.where(t == 0, 1.0, out))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sqrt(4.0 * qD * t)
        A = (front - x) / s
        B = (front + x) / s
        out = np.where(A >= 0, 0.5 * (erfc(A) - erfc(B)), 0.5 * (erf(B) - erf(A)))
    return _out(np.where(t == 0, 1.0, np.clip(out, 0.0, 1.0)))


def q_redistributed(t, params: MovementParams, geom: EnclosureGeometry):
    """Q(t): probability that the free process has passed the goal wall."""
    return passing_probability(geom.a, t, params, geom.x0)


def x_marginal_free(x, t, params: MovementParams, x0: float):
    """Drifting Gaussian started at ``x0`` plus its image behind ``x = 0``."""
    _need_diffusion(params)
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    c = x0 + params.pv * t
    four_qdt = 4.0 * params.qD * t
    norm = 1.0 / np.sqrt(math.pi * four_qdt)
    return _out(norm * (np.exp(-(x - c) ** 2 / four_qdt) + np.exp(-(x + c) ** 2 / four_qdt)))


def _y_images(y, t, qD, y0, b, tol):
    spread = math.sqrt(4.0 * qD * t)
    K = image_series_terms(spread, b, tol)
    acc = np.zeros(np.shape(y))
    for k in range(-K, K + 1):
        acc += np.exp(-((y - y0 + 2 * k * b) / spread) ** 2)
        acc += np.exp(-((y + y0 + (2 * k + 1) * b) / spread) ** 2)
    return acc / (_SQRT_PI * spread)


def _y_cosines(y, t, qD, y0, b, tol):
    # Poisson-summed form of the same series: one cosine per mode.
    rate = (math.pi / b) ** 2 * qD * t
    n_max = max(1, math.ceil(math.sqrt(math.log(1.0 / tol) / rate)))
    acc = np.ones(np.shape(y))
    for n in range(1, n_max + 1):
        w = math.exp(-n * n * rate)
        if w == 0.0:
            break
        acc += 2.0 * w * np.cos(n * math.pi * (y + 0.5 * b) / b) * math.cos(
            n * math.pi * (y0 + 0.5 * b) / b)
    return acc / b


def y_marginal(y, t: float, params: MovementParams, geom: EnclosureGeometry, tol: float = 1e-12):
    """Gaussian in y between two reflecting walls at ``+-b/2``.

    Uses the Gaussian image sum while the spread is below the width and the
    equivalent cosine series afterwards; both are truncated so that every
    omitted term is below ``tol`` relative to the leading term.
    """
    _need_diffusion(params)
    t = float(_check_t(t))
    _, y = _check_box(0.0, y, geom)
    spread = math.sqrt(4.0 * params.qD * t)
    if spread <= geom.b:
        out = _y_images(y, t, params.qD, geom.y0, geom.b, tol)
    else:
        out = _y_cosines(y, t, params.qD, geom.y0, geom.b, tol)
    return _out(out)


def _h_shape(z):
    """erf z - 2 z^2 erfc z + (2z/sqrt(pi)) exp(-z^2); all terms are O(z) for small z."""
    return erf(z) - 2.0 * z * z * erfc(z) + (2.0 / _SQRT_PI) * z * np.exp(-z * z)


def reflux_rate_h(t, params: MovementParams):
    """Rate h(t) of the exponential reflux profile; tends to pv/qD for large t.

    With pv = 0 the small-drift limit (1/2) sqrt(pi/(qD t)) is returned.
    """
    _need_diffusion(params)
    t = _check_t(t)
    pv, qD = params.pv, params.qD
    if pv == 0.0:
        return _out(0.5 * np.sqrt(math.pi / (qD * t)))
    z = pv * np.sqrt(t) / (2.0 * math.sqrt(qD))
    return _out((pv / qD) / _h_shape(z))


def reflux_state(t: float, params: MovementParams, geom: EnclosureGeometry) -> RefluxState:
    return RefluxState(q_redistributed(t, params, geom), reflux_rate_h(t, params))


def _fold_exponential(x, h, a):
    """h cosh(hx)/sinh(ha) in a form that cannot overflow."""
    return h * (np.exp(h * (x - a)) + np.exp(-h * (x + a))) / (-np.expm1(-2.0 * h * a))


def _full_profile(u, t, params, h):
    """Reflux profile at depth ``u = a - x`` before folding (unit mass scale h)."""
    pv, qD = params.pv, params.qD
    c = pv * t
    s = math.sqrt(4.0 * qD * t)
    k = pv / qD
    return 0.5 * h * (np.exp(-k * u) * erfc((u - c) / s) + erfc((c + u) / s))


def psi_series(x, t: float, params: MovementParams, geom: EnclosureGeometry,
               reflux: Reflux = "exponential"):
    """Reflux density in the box: Q(t) times the folded reflux profile.

    ``reflux="exponential"`` (default) uses the exponential profile, which
    integrates to Q(t) exactly. ``reflux="full"`` folds the complete
    depth-dependent profile; it is offered for comparison only.
    """
    _need_diffusion(params)
    t = float(_check_t(t))
    x, _ = _check_box(x, None, geom)
    a = geom.a
    Q = q_redistributed(t, params, geom)
    h = reflux_rate_h(t, params)
    if reflux == "exponential":
        if h * a == 0.0:
            raise DegenerateError("a", "h*a = 0")
        return _out(Q * _fold_exponential(x, h, a))
    if reflux != "full":
        raise ParameterError("reflux", f"unknown mode {reflux!r}")
    s = math.sqrt(4.0 * params.qD * t)
    k = params.pv / params.qD
    reach = params.pv * t + 12.0 * s + (40.0 / k if k > 0 else 0.0)
    m_max = int(math.ceil(reach / (2.0 * a))) + 1
    acc = np.zeros(np.shape(x))
    for m in range(m_max + 1):
        acc += _full_profile(2 * m * a + (a - x), t, params, h)
        acc += _full_profile(2 * m * a + (a + x), t, params, h)
    return _out(Q * acc)


def x_density(x, t: float, params: MovementParams, geom: EnclosureGeometry,
              reflux: Reflux = "exponential"):
    """x-marginal of the composite density: free part plus reflux part."""
    x, _ = _check_box(x, None, geom)
    return _out(x_marginal_free(x, t, params, geom.x0) + psi_series(x, t, params, geom, reflux))


def density_at(x, y, t: float, params: MovementParams, geom: EnclosureGeometry,
               tol: float = 1e-12, reflux: Reflux = "exponential"):
    """Composite density P(x, y, t) per unit area."""
    x, y = _check_box(x, y, geom)
    return _out(x_density(x, t, params, geom, reflux) * y_marginal(y, t, params, geom, tol))


def density_grid(grid: GridSpec, t: float, params: MovementParams, geom: EnclosureGeometry,
                 tol: float = 1e-12, reflux: Reflux = "exponential") -> DensityField:
    """Density at every cell centre, built as an outer product of the marginals."""
    xs, ys = grid.x_centers(geom), grid.y_centers(geom)
    px = np.atleast_1d(x_density(xs, t, params, geom, reflux))
    py = np.atleast_1d(y_marginal(ys, t, params, geom, tol))
    values = np.outer(px, py)
    mass = float(values.sum() * grid.cell_area(geom))
    return DensityField(grid, float(t), values, mass, xs, ys)


def _steady_k(params: MovementParams) -> float:
    if params.pv == 0.0 or params.qD == 0.0:
        raise DegenerateError("v" if params.pv == 0.0 else "D",
                              "steady state needs pv > 0 and qD > 0")
    return params.pv / params.qD


def steady_state_paper(x, y, params: MovementParams, geom: EnclosureGeometry):
    """Large-time limit of the composite density: (k/b) cosh(kx)/sinh(ka), k = pv/qD."""
    k = _steady_k(params)
    x, y = _check_box(x, y, geom)
    return _out(_fold_exponential(x, k, geom.a) / geom.b * np.ones(np.shape(y)))


def steady_state_exact(x, y, params: MovementParams, geom: EnclosureGeometry):
    """Zero-flux stationary density k exp(k(x-a)) / (b (1 - exp(-ka)))."""
    k = _steady_k(params)
    x, y = _check_box(x, y, geom)
    v = k * np.exp(k * (x - geom.a)) / (geom.b * -math.expm1(-k * geom.a))
    return _out(v * np.ones(np.shape(y)))


def steady_state_cell_mass(grid: GridSpec, params: MovementParams, geom: EnclosureGeometry,
                           form: Literal["paper", "exact"] = "paper") -> np.ndarray:
    """Exact probability mass of each grid cell under a steady state."""
    k = _steady_k(params)
    a = geom.a
    edges = np.linspace(0.0, a, grid.nx + 1)
    if form == "paper":
        # antiderivative sinh(kx)/sinh(ka), written without overflow
        cdf = (np.exp(k * (edges - a)) - np.exp(-k * (edges + a))) / (-math.expm1(-2.0 * k * a))
    elif form == "exact":
        cdf = np.exp(k * (edges - a)) / (-math.expm1(-k * a))
    else:
        raise ParameterError("form", f"unknown steady state {form!r}")
    px = np.diff(cdf)
    return np.outer(px, np.full(grid.ny, 1.0 / grid.ny))


def median_arrival_time(params: MovementParams, geom: EnclosureGeometry, tol: float = 1e-13) -> float:
    """Time t_M at which Q(t_M) = 1/2."""
    a, x0 = geom.a, geom.x0
    pv, qD = params.pv, params.qD
    if x0 >= a:
        return 0.0
    if qD == 0.0:
        return (a - x0) / pv
    L = a - x0
    scales = [L * L / qD] + ([L / pv] if pv > 0 else [])
    lo, hi = math.log(1e-3 * min(scales)), math.log(10.0 * max(scales))

    def f(u):
        return q_redistributed(math.exp(u), params, geom) - 0.5

    for _ in range(200):
        if f(lo) < 0:
            break
        lo -= 5.0
    for _ in range(200):
        if f(hi) > 0:
            break
        hi += 5.0
    else:
        raise ConvergenceError("median arrival time: Q(t) never reaches 1/2")
    return math.exp(find_root_bracketed(f, lo, hi, tol=tol).root)


# Rescaled forms: lengths in units of 2qD/pv and time in units of 4qD/(pv)^2.

def q_nondim(theta, xi0: float, alpha: float):
    theta = np.asarray(theta, dtype=float)
    r = 2.0 * np.sqrt(theta)
    # erfc sum, not 1 + erf - erf, so small Q keeps its digits
    return _out(0.5 * erfc((alpha - xi0 - 2 * theta) / r) + 0.5 * erfc((xi0 + alpha + 2 * theta) / r))


def h_nondim(theta):
    theta = np.asarray(theta, dtype=float)
    z = np.sqrt(theta)
    return _out(2.0 / (erf(z) - 2.0 * theta * erfc(z) + 2.0 * np.sqrt(theta / math.pi) * np.exp(-theta)))


def density_nondim(xi, zeta, theta: float, xi0: float, zeta0: float, alpha: float, beta: float,
                   tol: float = 1e-12):
    """Composite density in rescaled variables (per unit rescaled area)."""
    xi = np.asarray(xi, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    norm = 1.0 / (2.0 * math.sqrt(math.pi * theta))
    free = norm * (np.exp(-(xi - xi0 - 2 * theta) ** 2 / (4 * theta))
                   + np.exp(-(xi + xi0 + 2 * theta) ** 2 / (4 * theta)))
    h = h_nondim(theta)
    psi = q_nondim(theta, xi0, alpha) * _fold_exponential(xi, h, alpha)
    K = image_series_terms(2.0 * math.sqrt(theta), beta, tol)
    ys = np.zeros(np.shape(zeta))
    for k in range(-K, K + 1):
        ys += np.exp(-(zeta - zeta0 + 2 * k * beta) ** 2 / (4 * theta))
        ys += np.exp(-(zeta + zeta0 + (2 * k + 1) * beta) ** 2 / (4 * theta))
    return _out((free + psi) * norm * ys)
