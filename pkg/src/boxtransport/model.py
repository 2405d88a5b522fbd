"""Domain types, parameter validation and derived coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DegenerateError, ParameterError

__all__ = [
    "MovementParams",
    "DerivedCoefficients",
    "EnclosureGeometry",
    "NondimScale",
    "Species",
    "SpeciesEnsemble",
    "validate_params",
    "derived_coefficients",
    "nondimensionalize",
    "dimensionalize",
]


def _finite(field: str, value) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ParameterError(field, f"expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ParameterError(field, f"must be finite, got {x}")
    return x


@dataclass(frozen=True)
class MovementParams:
    """Behavioural parameters of one species.

    ``p`` is the fraction of active time spent moving in the directed
    fashion, ``s`` the fraction of all time spent resting, ``v`` the directed
    speed and ``D`` the diffusion coefficient of the searching motion.
    """

    p: float
    s: float
    v: float
    D: float

    def __post_init__(self):
        for name in ("p", "s", "v", "D"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError("p", f"out of [0,1]: {self.p}")
        if not 0.0 <= self.s < 1.0:
            raise ParameterError("s", f"out of [0,1): {self.s}")
        if self.v < 0.0:
            raise ParameterError("v", f"must be >= 0, got {self.v}")
        if self.D < 0.0:
            raise ParameterError("D", f"must be >= 0, got {self.D}")
        if self.pv == 0.0 and self.qD == 0.0:
            raise DegenerateError("p", "no transport: pv = 0 and qD = 0")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def pv(self) -> float:
        """Effective advection rate."""
        return self.p * self.v

    @property
    def qD(self) -> float:
        """Effective diffusion rate."""
        return self.q * self.D

    def as_dict(self) -> dict:
        return {"p": self.p, "s": self.s, "v": self.v, "D": self.D}


def validate_params(raw: Mapping) -> MovementParams:
    """Build checked :class:`MovementParams` from a mapping with keys p, s, v, D."""
    missing = [k for k in ("p", "s", "v", "D") if k not in raw]
    if missing:
        raise ParameterError(missing[0], "missing")
    return MovementParams(p=raw["p"], s=raw["s"], v=raw["v"], D=raw["D"])


@dataclass(frozen=True)
class DerivedCoefficients:
    phi: float
    eta: float
    pe_effective_advection: float
    pe_effective_diffusion: float

    @property
    def phi_infinite(self) -> bool:
        return math.isinf(self.phi)


def derived_coefficients(params: MovementParams) -> DerivedCoefficients:
    """phi = pv/(qD) and eta = 1/((1-s)qD); both are ``inf`` when qD = 0."""
    pv, qD = params.pv, params.qD
    if qD == 0.0:
        phi = eta = math.inf
    else:
        phi = pv / qD
        eta = 1.0 / ((1.0 - params.s) * qD)
    return DerivedCoefficients(phi, eta, pv, qD)


@dataclass(frozen=True)
class EnclosureGeometry:
    """Box ``[0, a] x [-b/2, b/2]`` with the goal wall at ``x = a``."""

    a: float
    b: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "x0", "y0"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.a <= 0.0:
            raise ParameterError("a", f"must be > 0, got {self.a}")
        if self.b <= 0.0:
            raise ParameterError("b", f"must be > 0, got {self.b}")
        if not 0.0 <= self.x0 <= self.a:
            raise ParameterError("x0", f"outside [0, a={self.a}]: {self.x0}")
        if not -0.5 * self.b <= self.y0 <= 0.5 * self.b:
            raise ParameterError("y0", f"outside [-b/2, b/2] with b={self.b}: {self.y0}")

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "x0": self.x0, "y0": self.y0}


@dataclass(frozen=True)
class NondimScale:
    xi: float
    zeta: float
    theta: float
    alpha: float | None = None
    beta: float | None = None


def _scales(params: MovementParams) -> tuple[float, float]:
    pv, qD = params.pv, params.qD
    if pv == 0.0 or qD == 0.0:
        field = "v" if pv == 0.0 else "D"
        raise DegenerateError(field, "scaling needs pv > 0 and qD > 0")
    return 2.0 * qD / pv, 4.0 * qD / (pv * pv)


def nondimensionalize(x, y, t, params: MovementParams,
                      geom: EnclosureGeometry | None = None) -> NondimScale:
    """Lengths in units of 2qD/pv and time in units of 4qD/(pv)^2."""
    length, time = _scales(params)
    alpha = beta = None
    if geom is not None:
        alpha, beta = geom.a / length, geom.b / length
    return NondimScale(x / length, y / length, t / time, alpha, beta)


def dimensionalize(scale: NondimScale, params: MovementParams):
    """Inverse of :func:`nondimensionalize`; returns ``(x, y, t)``."""
    length, time = _scales(params)
    return scale.xi * length, scale.zeta * length, scale.theta * time


@dataclass(frozen=True)
class Species:
    name: str
    params: MovementParams
    population: float = 1.0

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ParameterError("name", "species name must be a non-empty string")
        n = _finite("N", self.population)
        if n < 0:
            raise ParameterError("N", f"population must be >= 0, got {n}")
        object.__setattr__(self, "population", n)


@dataclass(frozen=True)
class SpeciesEnsemble:
    entries: tuple[Species, ...]

    def __init__(self, entries: Iterable[Species]):
        entries = tuple(entries)
        if not entries:
            raise ParameterError("species", "ensemble needs at least one entry")
        seen = set()
        for e in entries:
            if e.name in seen:
                raise ParameterError("name", f"duplicate species name {e.name!r}")
            seen.add(e.name)
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    @property
    def params(self) -> list[MovementParams]:
        return [e.params for e in self.entries]

    @property
    def populations(self) -> list[float]:
        return [e.population for e in self.entries]

    def index(self, key) -> int:
        if isinstance(key, str):
            try:
                return self.names.index(key)
            except ValueError:
                raise ParameterError("species", f"unknown species {key!r}") from None
        k = int(key)
        if not 0 <= k < len(self.entries):
            raise ParameterError("species", f"index {k} out of range")
        return k
