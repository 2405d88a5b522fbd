"""Arrival statistics for several species racing to the goal wall.

Each species arrives by time t with probability Q_i(t), the free-space mass
past the goal wall, and species are treated as independent. Place
probabilities beyond first use position-order integrals of the free
marginals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .density import passing_probability, q_redistributed, survival_probability, x_marginal_free
from .errors import DegenerateError, ParameterError
from .model import EnclosureGeometry, MovementParams, SpeciesEnsemble
from .numerics import integrate_semi_infinite

__all__ = [
    "CurveKind",
    "RaceCurve",
    "CompositionOptions",
    "PairOutcomes",
    "arrival_cdf",
    "passing_cdf",
    "prob_first_two",
    "pair_outcomes",
    "prob_first_of_n",
    "prob_exactly_one",
    "composition",
    "placement_integral",
    "prob_second",
    "prob_third",
    "race_curves",
]

DEGENERATE_TOL = 1e-12


class CurveKind(str, Enum):
    ARRIVAL_CDF = "arrival_cdf"
    FIRST_PLACE = "first_place"
    COMPOSITION = "composition"
    SECOND_PLACE = "second_place"
    THIRD_PLACE = "third_place"
    NEITHER = "neither"
    ALL_ARRIVED = "all_arrived"


@dataclass(frozen=True)
class RaceCurve:
    """``values[i, j]`` is series ``labels[i]`` at ``times[j]``."""

    kind: CurveKind
    times: np.ndarray
    labels: tuple[str, ...]
    values: np.ndarray


@dataclass(frozen=True)
class CompositionOptions:
    floor: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.floor < 1.0:
            raise ParameterError("floor", f"must lie in (0, 1), got {self.floor}")


@dataclass(frozen=True)
class PairOutcomes:
    """Outcomes by time t for two independent species."""

    first_only: float
    second_only: float
    neither: float
    both: float


def arrival_cdf(params: MovementParams, geom: EnclosureGeometry, t):
    """Q_i(t); the same function as :func:`boxtransport.density.q_redistributed`."""
    return q_redistributed(t, params, geom)


def _miss(params: MovementParams, geom: EnclosureGeometry, t):
    return survival_probability(geom.a, t, params, geom.x0)


def passing_cdf(params: MovementParams, geom: EnclosureGeometry, x, t):
    """Probability that the free process has passed abscissa ``x`` by ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ParameterError("t", "must be > 0")
    return passing_probability(x, t, params, geom.x0)


def pair_outcomes(s1: MovementParams, s2: MovementParams, geom: EnclosureGeometry, t) -> PairOutcomes:
    q1, q2 = arrival_cdf(s1, geom, t), arrival_cdf(s2, geom, t)
    m1, m2 = _miss(s1, geom, t), _miss(s2, geom, t)
    return PairOutcomes(q1 * m2, q2 * m1, m1 * m2, q1 * q2)


def prob_first_two(s1: MovementParams, s2: MovementParams, geom: EnclosureGeometry, t):
    """Probability that species 1 has arrived by ``t`` and species 2 has not."""
    return arrival_cdf(s1, geom, t) * _miss(s2, geom, t)


def _q_and_miss(ensemble: SpeciesEnsemble, geom, t):
    q = [arrival_cdf(p, geom, t) for p in ensemble.params]
    m = [_miss(p, geom, t) for p in ensemble.params]
    return q, m


def prob_first_of_n(ensemble: SpeciesEnsemble, k, geom: EnclosureGeometry, t):
    """Q_k(t) times the product of (1 - Q_i(t)) over the other species."""
    k = ensemble.index(k)
    q, m = _q_and_miss(ensemble, geom, t)
    out = q[k]
    for i, mi in enumerate(m):
        if i != k:
            out = out * mi
    return out


def prob_exactly_one(ensemble: SpeciesEnsemble, geom: EnclosureGeometry, t):
    """Sum of the first-of-n probabilities over all species."""
    return sum(prob_first_of_n(ensemble, k, geom, t) for k in range(len(ensemble)))


def composition(ensemble: SpeciesEnsemble, geom: EnclosureGeometry, t,
                opts: CompositionOptions | None = None) -> np.ndarray:
    """Population-weighted share of arrivals per species.

    Arrival probabilities below ``opts.floor`` are raised to the floor before
    weighting, so the shares fall back to population shares at early times.
    Returns an array with one row per species.
    """
    opts = opts or CompositionOptions()
    n = np.asarray(ensemble.populations, dtype=float)
    if n.sum() <= 0:
        raise ParameterError("N", "total population must be > 0")
    q = np.array([np.maximum(arrival_cdf(p, geom, t), opts.floor) for p in ensemble.params])
    w = n.reshape((-1,) + (1,) * (q.ndim - 1)) * q
    return w / w.sum(axis=0)


def placement_integral(ensemble: SpeciesEnsemble, k, others: Sequence, geom: EnclosureGeometry,
                       t: float, tol: float = 1e-10) -> float:
    """Integral over x >= a of P_k(x, t) times the passing probabilities of ``others``.

    Under independence this is the probability that species ``k`` is past
    the goal wall and every species in ``others`` is further along still.
    """
    k = ensemble.index(k)
    others = [ensemble.index(i) for i in others]
    if t <= 0:
        raise ParameterError("t", "must be > 0")
    pk = ensemble.params[k]
    a, x0 = geom.a, geom.x0
    op = [ensemble.params[i] for i in others]

    def passing(x):
        out = 1.0
        for p in op:
            out *= passing_probability(x, t, p, x0)
        return out

    centre = x0 + pk.pv * t
    if pk.qD == 0.0:
        return float(passing(centre)) if centre >= a else 0.0

    def integrand(x):
        return x_marginal_free(x, t, pk, x0) * passing(x)

    scale = math.sqrt(4.0 * pk.qD * t)
    return integrate_semi_infinite(integrand, a, scale, tol, center=centre).value


def _place_prefactor(ensemble, k, geom, t):
    q, m = _q_and_miss(ensemble, geom, t)
    if q[k] < DEGENERATE_TOL:
        raise DegenerateError("t", f"Q of species {ensemble.names[k]!r} is {q[k]:.3g}")
    for name, mi in zip(ensemble.names, m):
        if mi < DEGENERATE_TOL:
            raise DegenerateError("t", f"1 - Q of species {name!r} is {mi:.3g}")
    return math.prod(m) / (q[k] * m[k]), m


def prob_second(ensemble: SpeciesEnsemble, k, geom: EnclosureGeometry, t: float,
                tol: float = 1e-10) -> float:
    """Second-place expression built from one-species placement integrals."""
    k = ensemble.index(k)
    pref, m = _place_prefactor(ensemble, k, geom, t)
    total = 0.0
    for i in range(len(ensemble)):
        if i != k:
            total += placement_integral(ensemble, k, [i], geom, t, tol) / m[i]
    return total * pref


def prob_third(ensemble: SpeciesEnsemble, k, geom: EnclosureGeometry, t: float,
               tol: float = 1e-10) -> float:
    """Third-place expression; sums over ordered pairs of the other species."""
    if len(ensemble) < 3:
        raise ParameterError("species", "third place needs at least three species")
    k = ensemble.index(k)
    pref, m = _place_prefactor(ensemble, k, geom, t)
    rest = [i for i in range(len(ensemble)) if i != k]
    total = 0.0
    for i, j in itertools.permutations(rest, 2):
        total += placement_integral(ensemble, k, [i, j], geom, t, tol) / (m[i] * m[j])
    return total * pref


def race_curves(ensemble: SpeciesEnsemble, geom: EnclosureGeometry, time_grid: Iterable[float],
                kinds: Iterable = (), opts: CompositionOptions | None = None,
                tol: float = 1e-10) -> dict[CurveKind, RaceCurve]:
    """Evaluate the requested curve kinds on an ascending positive time grid.

    Second- and third-place values are ``nan`` at times where their
    denominators vanish (some Q within 1e-12 of 0 or 1).
    """
    times = np.asarray(list(time_grid), dtype=float)
    if times.ndim != 1 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ParameterError("times", "time grid must be positive and strictly ascending")
    kinds = [CurveKind(k) for k in kinds]
    names = tuple(ensemble.names)
    n = len(ensemble)
    out: dict[CurveKind, RaceCurve] = {}
    for kind in kinds:
        labels = names
        if kind is CurveKind.ARRIVAL_CDF:
            vals = np.array([arrival_cdf(p, geom, times) for p in ensemble.params])
        elif kind is CurveKind.FIRST_PLACE:
            vals = np.array([prob_first_of_n(ensemble, k, geom, times) for k in range(n)])
        elif kind is CurveKind.COMPOSITION:
            vals = composition(ensemble, geom, times, opts)
        elif kind in (CurveKind.NEITHER, CurveKind.ALL_ARRIVED):
            q, m = _q_and_miss(ensemble, geom, times)
            vals = np.prod(m if kind is CurveKind.NEITHER else q, axis=0)[None, :]
            labels = ("all",)
        else:
            fn = prob_second if kind is CurveKind.SECOND_PLACE else prob_third
            vals = np.full((n, times.size), np.nan)
            for k in range(n):
                for j, t in enumerate(times):
                    try:
                        vals[k, j] = fn(ensemble, k, geom, float(t), tol)
                    except DegenerateError:
                        pass
        out[kind] = RaceCurve(kind, times, labels, np.asarray(vals, dtype=float).reshape(len(labels), -1))
    return out
