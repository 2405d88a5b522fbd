"""Lattice random-walk Monte Carlo used to check the analytic results.

Each step a walker rests with probability ``s``; otherwise it makes a
directed move with probability ``p`` and a unit lattice move in one of four
directions with probability ``q/4`` each. Time advances by
``tau = delta^2 / (4 D)`` per step, resting or not.

Random numbers come from a counter-based generator keyed by
``(seed, walker index, draw index)``, so results do not depend on how walkers
are split across threads or on which backend runs them.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..density import GridSpec
from ..errors import ParameterError
from ..mfpt import mean_time_limit, mean_time_to_goal
from ..model import EnclosureGeometry, MovementParams, SpeciesEnsemble
from . import _backend

__all__ = [
    "WalkMode",
    "Boundary",
    "SimConfig",
    "SimResult",
    "SimWarning",
    "walk_spec",
    "step_walker",
    "simulate_mfpt",
    "simulate_density",
    "simulate_race",
    "backend_name",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_UNIFORM_BITS = (4, 8, 16, 32)


class WalkMode(str, Enum):
    MIXED = "mixed_walk"
    BIASED = "biased_walk"


class Boundary(str, Enum):
    ABSORBING = "absorbing_goal"
    REFLECTING = "all_reflecting"


class SimWarning(UserWarning):
    pass


def backend_name() -> str:
    return _backend.NAME


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``t_max`` caps each walker's time in absorbing runs; when ``None`` it
    defaults to 20 times the analytic mean arrival time. ``threads`` and
    ``backend`` change speed only, never results.
    """

    delta: float
    walkers: int
    seed: int = 0
    mode: WalkMode = WalkMode.MIXED
    boundary: Boundary = Boundary.ABSORBING
    t_max: float | None = None
    threads: int = 1
    backend: str = "auto"
    simd: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", WalkMode(self.mode))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ParameterError("delta", f"must be > 0, got {self.delta}")
        if int(self.walkers) != self.walkers or self.walkers < 1:
            raise ParameterError("walkers", f"must be an integer >= 1, got {self.walkers}")
        object.__setattr__(self, "walkers", int(self.walkers))
        if int(self.seed) != self.seed or not 0 <= self.seed <= _MASK64:
            raise ParameterError("seed", "must be an integer in [0, 2^64)")
        object.__setattr__(self, "seed", int(self.seed))
        if self.t_max is not None and not self.t_max > 0:
            raise ParameterError("t_max", f"must be > 0, got {self.t_max}")
        if int(self.threads) != self.threads or self.threads < 1:
            raise ParameterError("threads", f"must be an integer >= 1, got {self.threads}")
        if self.backend not in ("auto", "compiled", "python"):
            raise ParameterError("backend", f"unknown backend {self.backend!r}")

    def step_tau(self, params: MovementParams) -> float:
        if params.D <= 0:
            raise ParameterError("D", "the lattice time step delta^2/(4D) needs D > 0")
        return self.delta ** 2 / (4.0 * params.D)

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "walkers": self.walkers,
            "seed": self.seed,
            "mode": self.mode.value,
            "boundary": self.boundary.value,
            "t_max": self.t_max,
        }


@dataclass
class SimResult:
    """Aggregated Monte Carlo estimates.

    For arrival-time runs ``mean`` is in elapsed time (resting included) and
    ``mean_active`` is the same estimate times (1 - s). For density runs
    ``mean`` is the mean abscissa. Race runs store per-species arrays.
    """

    mean: float | np.ndarray
    std_error: float | np.ndarray
    n_effective: int | np.ndarray
    censored_fraction: float | np.ndarray = 0.0
    mean_active: float | np.ndarray | None = None
    std_error_active: float | np.ndarray | None = None
    median: float | np.ndarray | None = None
    histogram: np.ndarray | None = None
    density: np.ndarray | None = None
    arrival_order_counts: dict | None = None
    t_grid: np.ndarray | None = None
    arrival_cdf: np.ndarray | None = None
    arrival_cdf_se: np.ndarray | None = None
    place_frequencies: np.ndarray | None = None
    place_se: np.ndarray | None = None
    samples: np.ndarray | None = field(default=None, repr=False)
    positions: tuple | None = field(default=None, repr=False)
    step_tau: float | np.ndarray | None = None
    t_actual: float | None = None
    species: tuple | None = None

    @property
    def valid(self) -> bool:
        """False when more than 1% of walkers were censored."""
        return bool(np.all(np.asarray(self.censored_fraction) < 0.01))


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _stream_base(seed: int, stream: int) -> int:
    """Independent key space for each species (stream) of a run."""
    return _mix64(seed ^ _mix64((stream + 1) * _GOLDEN))


def _category_cuts(probs: Sequence[Fraction]) -> tuple[list[int], int]:
    """Integer thresholds for the first five cumulative category probabilities.

    Uses the narrowest uniform width in which every threshold is exact;
    otherwise 32 bits with rounding to nearest.
    """
    cum, acc = [], Fraction(0)
    for pr in probs[:5]:
        acc += pr
        cum.append(acc)
    for bits in _UNIFORM_BITS:
        if all((c * 2 ** bits).denominator == 1 for c in cum):
            break
    scale = 2 ** bits
    return [min(round(c * scale), scale) for c in cum], bits


def walk_spec(params: MovementParams, geom: EnclosureGeometry, cfg: SimConfig) -> dict:
    """Step table and thresholds consumed by the walk kernels."""
    tau = cfg.step_tau(params)
    d = cfg.delta
    s, p = Fraction(params.s), Fraction(params.p)
    q = 1 - p
    active = 1 - s
    if cfg.mode is WalkMode.MIXED:
        probs = [s, active * p] + [active * q / 4] * 4
        directed = params.v * tau
    else:
        # Biased lattice walk: the directed share is folded into the east move.
        probs = [s, Fraction(0), active * (p + q / 4)] + [active * q / 4] * 3
        directed = d
    cut, bits = _category_cuts(probs)
    return {
        "sx": [0.0, directed, d, -d, 0.0, 0.0],
        "sy": [0.0, 0.0, 0.0, 0.0, d, -d],
        "cut": cut,
        "bits": bits,
        "a": geom.a,
        "two_a": 2.0 * geom.a,
        "b": geom.b,
        "half_b": 0.5 * geom.b,
        "tau": tau,
    }


def step_walker(state, params: MovementParams, geom: EnclosureGeometry, cfg: SimConfig,
                rng: np.random.Generator):
    """One step of a single walker; a plain reference for the vectorised kernels.

    Returns the new ``(x, y)``. In absorbing mode a walker that reaches the
    goal wall is returned at ``x = a``.
    """
    x, y = state
    d = cfg.delta
    if rng.random() < params.s:
        return x, y
    u = rng.random()
    if u < params.p:
        if cfg.mode is WalkMode.MIXED:
            x += params.v * cfg.step_tau(params)
        else:
            x += d
    else:
        dx, dy = ((d, 0.0), (-d, 0.0), (0.0, d), (0.0, -d))[rng.integers(4)]
        x += dx
        y += dy
    x = abs(x)
    if x >= geom.a:
        x = geom.a if cfg.boundary is Boundary.ABSORBING else 2.0 * geom.a - x
    half = 0.5 * geom.b
    if y > half:
        y = geom.b - y
    elif y < -half:
        y = -geom.b - y
    return x, y


def _warn_resolution(geom: EnclosureGeometry, cfg: SimConfig):
    if cfg.delta > geom.a / 100 or cfg.delta > geom.b / 20:
        warnings.warn(
            f"lattice step {cfg.delta} is coarse for a={geom.a}, b={geom.b}; "
            "results carry O(delta) bias",
            SimWarning,
            stacklevel=3,
        )


def _mean_time_estimate(params: MovementParams, geom: EnclosureGeometry) -> float:
    if params.pv > 0 and params.qD > 0:
        return mean_time_to_goal(params, geom, geom.x0)
    which = "advection_only" if params.qD == 0 else "diffusion_only"
    return mean_time_limit(params, geom, geom.x0, which)


def _arrival_times(params, geom, cfg, stream):
    kern = _backend.get(cfg.backend)
    spec = walk_spec(params, geom, cfg)
    tau = spec["tau"]
    t_max = cfg.t_max if cfg.t_max is not None else 20.0 * _mean_time_estimate(params, geom)
    max_steps = max(1, math.ceil(t_max / tau))
    times = kern.absorb(spec, geom.x0, _stream_base(cfg.seed, stream), 0, cfg.walkers,
                        max_steps, cfg.threads, cfg.simd)
    return np.asarray(times), tau


def _moments(t: np.ndarray):
    """Mean and standard error, exact zero spread for identical samples."""
    n = t.size
    if n == 0:
        return math.nan, math.nan
    shifted = t - t[0]
    mean = t[0] + shifted.mean()
    if n == 1:
        return float(mean), math.nan
    return float(mean), float(shifted.std(ddof=1) / math.sqrt(n))


def simulate_mfpt(params: MovementParams, geom: EnclosureGeometry, cfg: SimConfig) -> SimResult:
    """Mean time for walkers started at ``(x0, y0)`` to reach the goal wall."""
    if cfg.boundary is not Boundary.ABSORBING:
        raise ParameterError("boundary", "simulate_mfpt needs boundary='absorbing_goal'")
    _warn_resolution(geom, cfg)
    times, tau = _arrival_times(params, geom, cfg, 0)
    done = times[np.isfinite(times)]
    mean, se = _moments(done)
    active = 1.0 - params.s
    return SimResult(
        mean=mean,
        std_error=se,
        n_effective=int(done.size),
        censored_fraction=1.0 - done.size / times.size,
        mean_active=mean * active,
        std_error_active=se * active,
        median=float(np.median(times)),
        samples=times,
        step_tau=tau,
    )


def _steps_for(t: float, tau: float) -> int:
    n = t / tau
    k = round(n)
    return int(k) if abs(n - k) <= 1e-9 * max(1.0, n) else math.ceil(n)


def simulate_density(params: MovementParams, geom: EnclosureGeometry, cfg: SimConfig,
                     t_snapshot: float, grid: GridSpec) -> SimResult:
    """Occupancy histogram after the first step whose time reaches ``t_snapshot``."""
    if cfg.boundary is not Boundary.REFLECTING:
        raise ParameterError("boundary", "simulate_density needs boundary='all_reflecting'")
    if not t_snapshot > 0:
        raise ParameterError("t_snapshot", f"must be > 0, got {t_snapshot}")
    if not isinstance(grid, GridSpec):
        raise ParameterError("grid", "expected a GridSpec")
    _warn_resolution(geom, cfg)
    kern = _backend.get(cfg.backend)
    spec = walk_spec(params, geom, cfg)
    n_steps = _steps_for(t_snapshot, spec["tau"])
    xs, ys = kern.reflect(spec, geom.x0, geom.y0, _stream_base(cfg.seed, 0), 0, cfg.walkers,
                          n_steps, cfg.threads, cfg.simd)
    xs, ys = np.asarray(xs), np.asarray(ys)
    ix = np.minimum((xs * (grid.nx / geom.a)).astype(np.intp), grid.nx - 1)
    iy = np.minimum(((ys + 0.5 * geom.b) * (grid.ny / geom.b)).astype(np.intp), grid.ny - 1)
    counts = np.bincount(ix * grid.ny + iy, minlength=grid.nx * grid.ny).reshape(grid.nx, grid.ny)
    mean, se = _moments(xs)
    return SimResult(
        mean=mean,
        std_error=se,
        n_effective=cfg.walkers,
        histogram=counts,
        density=counts / (cfg.walkers * grid.cell_area(geom)),
        positions=(xs, ys),
        step_tau=spec["tau"],
        t_actual=n_steps * spec["tau"],
    )


def simulate_race(ensemble: SpeciesEnsemble, geom: EnclosureGeometry, cfg: SimConfig,
                  t_grid: Sequence[float]) -> SimResult:
    """True arrival order of one walker per species, repeated ``walkers`` times.

    ``place_frequencies[r, k, j]`` is the fraction of races in which species
    ``k`` finished in place ``r`` (0-based, up to third) and had arrived by
    ``t_grid[j]``. ``arrival_order_counts`` tallies finishing orders, with
    walkers that never arrived placed last in species order.
    """
    if cfg.boundary is not Boundary.ABSORBING:
        raise ParameterError("boundary", "simulate_race needs boundary='absorbing_goal'")
    if cfg.walkers < 1000:
        raise ParameterError("walkers", "race estimates need at least 1000 walkers per species")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) < 0):
        raise ParameterError("t_grid", "must be a one-dimensional ascending grid")
    _warn_resolution(geom, cfg)
    n, w = len(ensemble), cfg.walkers
    T = np.empty((n, w))
    taus = np.empty(n)
    for k, params in enumerate(ensemble.params):
        T[k], taus[k] = _arrival_times(params, geom, cfg, k)

    cdf = np.array([np.searchsorted(np.sort(T[k]), t_grid, side="right") / w for k in range(n)])
    cdf_se = np.sqrt(cdf * (1.0 - cdf) / w)

    order = np.argsort(T, axis=0, kind="stable")  # order[r, i]: species in place r of race i
    places = min(3, n)
    freq = np.zeros((places, n, t_grid.size))
    for r in range(places):
        for k in range(n):
            won = T[k][order[r] == k]
            freq[r, k] = np.searchsorted(np.sort(won), t_grid, side="right") / w
    place_se = np.sqrt(freq * (1.0 - freq) / w)

    names = ensemble.names
    tally = Counter(tuple(names[k] for k in order[:, i]) for i in range(w))
    means, ses, n_eff = np.empty(n), np.empty(n), np.empty(n, dtype=np.int64)
    for k in range(n):
        done = T[k][np.isfinite(T[k])]
        means[k], ses[k] = _moments(done)
        n_eff[k] = done.size
    s_frac = np.array([1.0 - p.s for p in ensemble.params])
    return SimResult(
        mean=means,
        std_error=ses,
        n_effective=n_eff,
        censored_fraction=1.0 - n_eff / w,
        mean_active=means * s_frac,
        std_error_active=ses * s_frac,
        median=np.median(T, axis=1),
        arrival_order_counts=dict(sorted(tally.items())),
        t_grid=t_grid,
        arrival_cdf=cdf,
        arrival_cdf_se=cdf_se,
        place_frequencies=freq,
        place_se=place_se,
        samples=T,
        step_tau=taus,
        species=tuple(names),
    )
