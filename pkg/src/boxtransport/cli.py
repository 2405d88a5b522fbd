"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 Monte Carlo
estimate unreliable (more than 1% of walkers censored).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .density import (GridSpec, density_grid, median_arrival_time, q_redistributed,
                      steady_state_cell_mass, steady_state_exact, steady_state_paper)
from .errors import BoxTransportError, ParameterError
from .mfpt import mean_time_limit, mean_time_to_goal, omega, peclet, peclet_from_omega
from .model import EnclosureGeometry, MovementParams, Species, SpeciesEnsemble, validate_params
from .race import CompositionOptions, CurveKind, race_curves

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_UNRELIABLE = 0, 2, 3, 4

DEFAULTS = {
    "a": 100.0, "b": 10.0, "x0": 0.0, "y0": 0.0,
    "p": 0.5, "s": 0.0, "v": 1.0, "D": 1.0,
}


class InputError(Exception):
    """Malformed command-line or file input (exit code 2)."""


class Unreliable(Exception):
    """Result computed but statistically unreliable (exit code 4)."""


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------- parsing

def _add_params(sp, geometry=True, movement=True):
    if geometry:
        sp.add_argument("--a", type=float, help="distance from back wall to goal wall")
        sp.add_argument("--b", type=float, help="enclosure width")
        sp.add_argument("--x0", type=float, help="start abscissa")
        sp.add_argument("--y0", type=float, help="start ordinate")
    if movement:
        sp.add_argument("--p", type=float, help="directed fraction of active time")
        sp.add_argument("--s", type=float, help="resting fraction of time")
        sp.add_argument("--v", type=float, help="directed speed")
        sp.add_argument("--D", type=float, help="diffusion coefficient")


def _add_output(sp, formats=("csv", "json")):
    sp.add_argument("--out", "-o", help="output path (default: stdout)")
    sp.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boxtransport", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", help="JSON file with default values for any flag")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("mfpt", help="mean time to reach the goal wall")
    _add_params(sp)
    sp.add_argument("--grid", type=int, help="evaluate on this many x points in [0, a]")
    _add_output(sp)

    sp = sub.add_parser("peclet", help="Peclet number, forward or from a relative travel time")
    sp.add_argument("--omega", type=float, help="relative travel time (inverse mode)")
    _add_params(sp, geometry=False)
    sp.add_argument("--a", type=float)
    sp.add_argument("--x", type=float, help="position for the forward mode")
    _add_output(sp, ("json", "csv"))

    sp = sub.add_parser("density", help="density on a grid at time t, or a steady state")
    _add_params(sp)
    sp.add_argument("--t", type=float, help="active time")
    sp.add_argument("--nx", type=int)
    sp.add_argument("--ny", type=int)
    sp.add_argument("--steady", choices=("paper", "exact"), help="emit a steady state instead")
    sp.add_argument("--reflux", choices=("exponential", "full"))
    sp.add_argument("--wall-clock", action="store_true", help="--t is elapsed time including rests")
    _add_output(sp, ("csv",))

    sp = sub.add_parser("median", help="median arrival time")
    _add_params(sp)
    sp.add_argument("--wall-clock", action="store_true", help="report elapsed time including rests")
    _add_output(sp, ("json", "csv"))

    sp = sub.add_parser("race", help="arrival statistics for several species")
    sp.add_argument("--species", help="JSON array of {name, N, p, s, v, D}")
    _add_params(sp, movement=False)
    sp.add_argument("--t-min", type=float)
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--log-time", action="store_true", help="log-spaced time grid")
    sp.add_argument("--kinds", help="comma-separated subset of " + ",".join(k.value for k in CurveKind))
    sp.add_argument("--floor", type=float, help="composition floor (default 1e-4)")
    _add_output(sp, ("csv",))

    sp = sub.add_parser("simulate", help="lattice-walk Monte Carlo")
    sp.add_argument("--mode", choices=("mfpt", "density", "race"))
    _add_params(sp)
    sp.add_argument("--walkers", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--walk", choices=("mixed_walk", "biased_walk"))
    sp.add_argument("--threads", type=int, default=1, help="worker threads (does not change results)")
    sp.add_argument("--t", type=float, help="snapshot time (density mode)")
    sp.add_argument("--nx", type=int)
    sp.add_argument("--ny", type=int)
    sp.add_argument("--histogram", help="write the occupancy histogram CSV here (density mode)")
    sp.add_argument("--species", help="species file (race mode)")
    sp.add_argument("--t-grid", help="comma-separated times (race mode)")
    _add_output(sp, ("json",))
    return ap


# ---------------------------------------------------------------- resolution

class Resolved:
    """Flag values with config-file and built-in fallbacks, recorded for echoing."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self.args, self.config, self.used = args, config, {}

    def get(self, key, default=None):
        val = getattr(self.args, key, None)
        if val is None:
            val = self.config.get(key, DEFAULTS.get(key, default))
        self.used[key] = val
        return val

    def require(self, key):
        val = self.get(key)
        if val is None:
            raise ParameterError(key, "required")
        return val


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{what} {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _movement(r: Resolved) -> MovementParams:
    return validate_params({k: r.get(k) for k in ("p", "s", "v", "D")})


def _geometry(r: Resolved) -> EnclosureGeometry:
    return EnclosureGeometry(r.get("a"), r.get("b"), r.get("x0"), r.get("y0"))


def load_species(path: str) -> SpeciesEnsemble:
    doc = _load_json(path, "species file")
    if not isinstance(doc, list) or not doc:
        raise InputError(f"species file {path}: expected a non-empty JSON array")
    entries = []
    for i, item in enumerate(doc):
        where = f"species file {path}: entry {i}"
        if not isinstance(item, dict):
            raise InputError(f"{where}: expected an object")
        missing = [k for k in ("name", "N", "p", "s", "v", "D") if k not in item]
        if missing:
            raise InputError(f"{where}: missing field {missing[0]!r}")
        n = item["N"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise InputError(f"{where}: field 'N' must be a non-negative integer")
        try:
            entries.append(Species(item["name"], validate_params(item), n))
        except ParameterError as exc:
            raise InputError(f"{where}: field {exc.field!r}: {exc}") from None
    try:
        return SpeciesEnsemble(entries)
    except ParameterError as exc:
        raise InputError(f"species file {path}: {exc}") from None


# ---------------------------------------------------------------- output

def _meta(command: str, r: Resolved, **extra) -> dict:
    meta = {"command": command, "parameters": dict(sorted(r.used.items()))}
    meta.update(extra)
    return meta


def _csv_text(meta: dict, header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _json_text(meta: dict, result: dict) -> str:
    return json.dumps({"metadata": meta, "result": result}, sort_keys=True, indent=2,
                      allow_nan=True) + "\n"


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _records(meta, fmt_, header, rows):
    if fmt_ == "csv":
        return _csv_text(meta, header, rows)
    recs = [dict(zip(header, (float(v) if isinstance(v, (float, np.floating)) else v for v in row)))
            for row in rows]
    return _json_text(meta, recs[0] if len(recs) == 1 else recs)


# ---------------------------------------------------------------- commands

def cmd_mfpt(args, r: Resolved) -> int:
    params, geom = _movement(r), _geometry(r)
    grid = r.get("grid")
    xs = np.linspace(0.0, geom.a, grid) if grid else np.array([geom.x0])
    if grid is not None and grid < 2:
        raise ParameterError("grid", "needs at least 2 points")
    if params.pv > 0 and params.qD > 0:
        form, W = "full", mean_time_to_goal(params, geom, xs)
    else:
        form = "advection_only" if params.qD == 0 else "diffusion_only"
        W = mean_time_limit(params, geom, xs, form)
    W = np.atleast_1d(W)
    rows = list(zip(xs.tolist(), W.tolist()))
    _emit(_records(_meta("mfpt", r, formula=form), args.format, ["x", "W"], rows), args.out)
    return EXIT_OK


def cmd_peclet(args, r: Resolved) -> int:
    w = r.get("omega")
    if w is not None:
        p = r.require("p")
        pe = peclet_from_omega(w, p)
        rows, header = [(w, p, pe, omega(pe, p))], ["omega", "p", "pe", "omega_check"]
        meta = _meta("peclet", r, mode="inverse")
    else:
        params = _movement(r)
        a = r.get("a")
        x = r.get("x", 0.0)
        ctx = peclet(params, EnclosureGeometry(a, 1.0), x)
        rows = [(ctx.pe, ctx.r, ctx.L, ctx.regime.value)]
        header = ["pe", "r", "L", "regime"]
        meta = _meta("peclet", r, mode="forward")
    _emit(_records(meta, args.format, header, rows), args.out)
    return EXIT_OK


def cmd_density(args, r: Resolved) -> int:
    params, geom = _movement(r), _geometry(r)
    grid = GridSpec(r.get("nx", 200), r.get("ny", 50))
    steady = r.get("steady")
    xs, ys = grid.x_centers(geom), grid.y_centers(geom)
    if steady:
        fn = steady_state_paper if steady == "paper" else steady_state_exact
        values = fn(xs[:, None], ys[None, :], params, geom)
        mass = float(steady_state_cell_mass(grid, params, geom, steady).sum())
        t = None
    else:
        t = r.get("t")
        if t is None:
            raise ParameterError("t", "required unless --steady is given")
        if t == 0:
            raise ParameterError("t", "t = 0: the initial condition is a point mass at (x0, y0)")
        if r.get("wall_clock", False):
            t = t * (1.0 - params.s)
        field = density_grid(grid, t, params, geom, reflux=r.get("reflux", "exponential"))
        values, mass = field.values, field.mass
    meta = _meta("density", r, t_active=t, mass=mass, mass_ok=abs(mass - 1.0) <= 1e-3)
    rows = ((x, y, values[i, j]) for i, x in enumerate(xs) for j, y in enumerate(ys))
    _emit(_csv_text(meta, ["x", "y", "p"], rows), args.out)
    if abs(mass - 1.0) > 1e-3:
        print(f"error: grid mass {mass} deviates from 1 by more than 1e-3", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_median(args, r: Resolved) -> int:
    params, geom = _movement(r), _geometry(r)
    tm = median_arrival_time(params, geom)
    q = q_redistributed(tm, params, geom) if params.qD > 0 else 0.5
    reported = tm / (1.0 - params.s) if r.get("wall_clock", False) else tm
    rows = [(reported, q)]
    _emit(_records(_meta("median", r), args.format, ["t_median", "Q_at_median"], rows), args.out)
    return EXIT_OK


def _time_grid(r: Resolved, t_max_default=None):
    t_max = r.get("t_max", t_max_default)
    if t_max is None:
        raise ParameterError("t_max", "required")
    steps = r.get("steps", 100)
    if steps < 1:
        raise ParameterError("steps", "must be >= 1")
    if r.get("log_time", False):
        t_min = r.get("t_min", t_max * 1e-3)
        return np.geomspace(t_min, t_max, steps)
    t_min = r.get("t_min", t_max / steps)
    return np.linspace(t_min, t_max, steps)


def cmd_race(args, r: Resolved) -> int:
    path = r.get("species")
    if not path:
        raise ParameterError("species", "required")
    ens = load_species(path)
    geom = _geometry(r)
    kinds = r.get("kinds", "arrival_cdf,first_place,composition")
    try:
        kinds = [CurveKind(k.strip()) for k in kinds.split(",") if k.strip()]
    except ValueError as exc:
        raise ParameterError("kinds", str(exc)) from None
    floor = r.get("floor", 1e-4)
    times = _time_grid(r)
    curves = race_curves(ens, geom, times, kinds, CompositionOptions(floor))
    rows = []
    for kind in kinds:
        c = curves[kind]
        for j, t in enumerate(c.times):
            for i, label in enumerate(c.labels):
                rows.append((float(t), label, kind.value, float(c.values[i, j])))
    meta = _meta("race", r, species=[dict(name=e.name, N=e.population, **e.params.as_dict())
                                     for e in ens])
    _emit(_csv_text(meta, ["time", "species", "kind", "value"], rows), args.out)
    return EXIT_OK


def _sim_config(r: Resolved, boundary: str):
    from .sim import SimConfig
    return SimConfig(
        delta=r.get("delta", 0.05),
        walkers=r.get("walkers", 10000),
        seed=r.get("seed", 0),
        mode=r.get("walk", "mixed_walk"),
        boundary=boundary,
        t_max=r.get("t_max"),
        threads=getattr(r.args, "threads", 1) or 1,
    )


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def cmd_simulate(args, r: Resolved) -> int:
    import warnings

    from .sim import SimWarning, simulate_density, simulate_mfpt, simulate_race

    mode = r.get("mode", "mfpt")
    geom = _geometry(r)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SimWarning)
        if mode == "mfpt":
            params = _movement(r)
            cfg = _sim_config(r, "absorbing_goal")
            res = simulate_mfpt(params, geom, cfg)
            out = {k: _jsonable(getattr(res, k)) for k in
                   ("mean", "std_error", "n_effective", "censored_fraction",
                    "mean_active", "std_error_active", "median", "step_tau")}
        elif mode == "density":
            params = _movement(r)
            cfg = _sim_config(r, "all_reflecting")
            grid = GridSpec(r.get("nx", 50), r.get("ny", 10))
            t = r.get("t")
            if t is None or not t > 0:
                raise ParameterError("t", "density mode needs a snapshot time > 0")
            res = simulate_density(params, geom, cfg, t, grid)
            out = {"mean_x": res.mean, "std_error_x": res.std_error, "walkers": res.n_effective,
                   "t_actual": res.t_actual, "step_tau": res.step_tau,
                   "histogram_total": int(res.histogram.sum())}
            hist = args.histogram  # an output path, kept out of the echoed metadata
            if hist:
                xs, ys = grid.x_centers(geom), grid.y_centers(geom)
                rows = ((x, y, int(res.histogram[i, j]), res.density[i, j])
                        for i, x in enumerate(xs) for j, y in enumerate(ys))
                meta = _meta("simulate", r)
                _emit(_csv_text(meta, ["x", "y", "count", "density"], rows), hist)
        elif mode == "race":
            path = r.get("species")
            if not path:
                raise ParameterError("species", "required in race mode")
            ens = load_species(path)
            cfg = _sim_config(r, "absorbing_goal")
            spec = r.get("t_grid")
            if not spec:
                raise ParameterError("t_grid", "required in race mode")
            try:
                grid_t = [float(x) for x in str(spec).split(",")]
            except ValueError:
                raise ParameterError("t_grid", f"not a list of numbers: {spec!r}") from None
            res = simulate_race(ens, geom, cfg, grid_t)
            out = {k: _jsonable(getattr(res, k)) for k in
                   ("species", "mean", "std_error", "n_effective", "censored_fraction", "median",
                    "t_grid", "arrival_cdf", "arrival_cdf_se", "place_frequencies", "place_se")}
            out["arrival_order_counts"] = [
                {"order": list(k), "count": v} for k, v in res.arrival_order_counts.items()]
        else:  # pragma: no cover - argparse restricts choices
            raise ParameterError("mode", f"unknown mode {mode!r}")
    meta = _meta("simulate", r)
    meta["warnings"] = [str(w.message) for w in caught]
    _emit(_json_text(meta, out), args.out)
    if not res.valid:
        raise Unreliable(f"censored fraction {res.censored_fraction} exceeds 1%")
    return EXIT_OK


COMMANDS = {
    "mfpt": cmd_mfpt,
    "peclet": cmd_peclet,
    "density": cmd_density,
    "median": cmd_median,
    "race": cmd_race,
    "simulate": cmd_simulate,
}


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        config = _load_json(args.config, "config file") if args.config else {}
        if not isinstance(config, dict):
            raise InputError("config file must hold a JSON object")
        return COMMANDS[args.command](args, Resolved(args, config))
    except (InputError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Unreliable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNRELIABLE
    except BoxTransportError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
