"""Command-line driver.

Subcommands: ``simulate``, ``orbit``, ``equilibria``, ``sweep`` and
``regime``. Each reads an optional JSON config (``--config``) whose fields
can be overridden by flags, and writes CSV/JSON into ``--out``.

Exit codes: 0 success, 1 config error, 2 blow-up, 3 analysis failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics, io, lion_dance, two_oscillator
from .errors import BlowUp, ConfigError, MaxStepsExceeded, NoReturn, NotWeak
from .integrate import IntegratorConfig, integrate
from .model import ModelParams, vector_field

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_ANALYSIS = 0, 1, 2, 3

_MODES = {"simulate": ("full", "reduced2", "lion"), "orbit": ("reduced2",),
          "equilibria": ("lion",), "sweep": ("lion",), "regime": ("lion",)}
_DEFAULT_MODE = {"simulate": "full", "orbit": "reduced2", "equilibria": "lion",
                 "sweep": "lion", "regime": "lion"}


class _Config:
    """A loaded config plus the raw text, so errors can cite a line."""

    def __init__(self, data: dict, text: str = "", source: str = "<flags>"):
        self.data = data
        self.text = text
        self.source = source

    def line_of(self, name: str):
        key = f'"{name}"'
        for i, line in enumerate(self.text.splitlines(), 1):
            if key in line:
                return i
        return None

    def error(self, name: str, msg: str) -> ConfigError:
        line = self.line_of(name)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: field '{name}': {msg}")

    def get(self, name, default=None, required=False):
        if name not in self.data or self.data[name] is None:
            if required:
                return self._missing(name)
            return default
        return self.data[name]

    def _missing(self, name):
        raise self.error(name, "missing required field")

    def number(self, name, default=None, required=False, positive=False, allow=()):
        val = self.get(name, default, required)
        if val is None or val in allow:
            return val
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise self.error(name, f"expected a finite number, got {val!r}")
        if positive and val <= 0:
            raise self.error(name, f"must be positive, got {val!r}")
        return float(val)

    def vector(self, name, required=False, length=None):
        val = self.get(name, None, required)
        if val is None:
            return None
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            val = [val]
        if not isinstance(val, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in val):
            raise self.error(name, f"expected a list of numbers, got {val!r}")
        if length is not None and len(val) != length:
            raise self.error(name, f"expected {length} values, got {len(val)}")
        return np.array(val, dtype=float)


def _load_config(args) -> _Config:
    data, text, source = {}, "", "<flags>"
    if args.config:
        source = args.config
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"{args.config}: cannot read config: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}:{exc.lineno}: invalid JSON: {exc.msg} "
                              f"(column {exc.colno})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: top level must be a JSON object")
    overrides = {
        "lambda": args.lam, "omega": args.omega, "n_osc": args.n_osc, "out": args.out,
    }
    for k, v in overrides.items():
        if v is not None:
            data[k] = v
    integ = dict(data.get("integrator") or {})
    for k, v in (("t_end", args.t_end), ("rtol", args.rtol), ("atol", args.atol)):
        if v is not None:
            integ[k] = v
    data["integrator"] = integ
    cfg = _Config(data, text, source)
    mode = cfg.get("mode", _DEFAULT_MODE[args.command])
    if mode not in _MODES[args.command]:
        raise cfg.error("mode", f"{args.command} needs mode in {_MODES[args.command]}, got {mode!r}")
    data["mode"] = mode
    return cfg


def _parse_omega(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --omega {text!r}") from exc
    return vals[0] if len(vals) == 1 else vals


def _parse_lambda(text):
    if text == "critical":
        return text
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --lambda {text!r}") from exc


def _integrator(cfg: _Config, t_end_default: float) -> IntegratorConfig:
    raw = cfg.get("integrator", {})
    if not isinstance(raw, dict):
        raise cfg.error("integrator", "expected an object")
    sub = _Config(raw, cfg.text, cfg.source)
    try:
        return IntegratorConfig(
            method=sub.get("method", "rk45_adaptive"),
            t_end=sub.number("t_end", t_end_default, positive=True),
            dt=sub.number("dt", None, positive=True),
            rtol=sub.number("rtol", 1e-9, positive=True),
            atol=sub.number("atol", 1e-12, positive=True),
            max_steps=int(sub.number("max_steps", 1_000_000, positive=True)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise cfg.error("integrator", str(exc)) from exc


def _out_dir(cfg: _Config) -> Path:
    out = cfg.get("out", "quatsync_out")
    if not isinstance(out, str) or not out:
        raise cfg.error("out", "expected a directory path")
    return Path(out)


def _echo(cfg: _Config) -> dict:
    return dict(cfg.data)


def _interleave(states: np.ndarray) -> np.ndarray:
    """Reorder flat ``[w.., x.., y.., z..]`` rows to ``w1,x1,y1,z1,w2,...``."""
    t, n4 = states.shape
    n = n4 // 4
    return states.reshape(t, 4, n).transpose(0, 2, 1).reshape(t, n4)


def _trajectory_rows(traj, output_dt):
    if output_dt and len(traj) > 1:
        t, s = traj.sample(output_dt)
    else:
        t, s = traj.times, traj.states
    return t, s


# simulate ---------------------------------------------------------------------------

def _initial_full(cfg: _Config, n: int) -> np.ndarray:
    init = cfg.get("initial", required=True)
    if not isinstance(init, dict):
        raise cfg.error("initial", "expected an object with w, x, y, z lists")
    sub = _Config(init, cfg.text, cfg.source)
    comps = [sub.vector(c, length=n) for c in "wxyz"]
    if comps[0] is None:
        raise sub.error("w", "missing required field")
    comps = [np.zeros(n) if c is None else c for c in comps]
    return np.concatenate(comps)


def cmd_simulate(cfg: _Config) -> int:
    mode = cfg.data["mode"]
    out = _out_dir(cfg)
    icfg = _integrator(cfg, 100.0)
    output_dt = cfg.number("output_dt", 0.1, positive=True)
    analysis = cfg.get("analysis", {}) or {}
    if mode == "full":
        omegas = cfg.vector("omega", required=True)
        lam = cfg.number("lambda", required=True)
        try:
            params = ModelParams(omegas, lam)
        except ValueError as exc:
            raise cfg.error("lambda" if "coupling" in str(exc) else "omega", str(exc)) from exc
        if cfg.get("rotating_frame", False):
            from .model import to_rotating_frame
            params = to_rotating_frame(params)
        s0 = _initial_full(cfg, params.n_osc)
        f = vector_field(params)
        header = io.trajectory_header(params.n_osc)
        reorder = _interleave
    else:
        lam = cfg.number("lambda", required=True, positive=True)
        omega = cfg.number("omega", required=True, positive=True)
        init = cfg.get("initial", required=True)
        if not isinstance(init, dict):
            raise cfg.error("initial", "expected an object with w and v")
        sub = _Config(init, cfg.text, cfg.source)
        s0 = np.array([sub.number("w", required=True), sub.number("v", required=True)])
        if mode == "reduced2":
            def f(t, s):
                return np.array(two_oscillator.rhs_n2(s, omega, lam))
        else:
            n = int(cfg.number("n_osc", 3))
            try:
                lp = lion_dance.LionParams(omega, lam, n)
            except ValueError as exc:
                raise cfg.error("n_osc", str(exc)) from exc

            def f(t, s):
                return np.array(lion_dance.rhs_lion(s, lp))
        header = ["t", "w", "v"]
        params = None

        def reorder(s):
            return s

    report = {"provenance": io.provenance(_echo(cfg), icfg.to_dict()), "mode": mode}
    try:
        traj = integrate(f, s0, icfg)
    except (BlowUp, MaxStepsExceeded) as exc:
        part = exc.trajectory
        t, s = part.times, part.states
        io.write_csv(out / "trajectory.csv", header, np.column_stack([t, reorder(s)]))
        report.update(status="blow_up" if isinstance(exc, BlowUp) else "max_steps",
                      message=str(exc), t_reached=float(t[-1]), meta=part.meta)
        io.write_json(out / "report.json", report)
        print(f"error: {exc} (partial trajectory written)", file=sys.stderr)
        return EXIT_BLOWUP if isinstance(exc, BlowUp) else EXIT_ANALYSIS
    t, s = _trajectory_rows(traj, output_dt)
    io.write_csv(out / "trajectory.csv", header, np.column_stack([t, reorder(s)]))
    report.update(status="ok", meta=traj.meta, final_state=traj.states[-1])
    if params is not None:
        sub = _Config(analysis, cfg.text, cfg.source) if isinstance(analysis, dict) else None
        if sub is None:
            raise cfg.error("analysis", "expected an object")
        sync = diagnostics.classify(
            traj, params,
            lock_bound=sub.number("lock_bound", 10.0, positive=True),
            sync_eps=sub.number("sync_eps", 1e-4, positive=True),
            tail_fraction=sub.number("tail_fraction", 0.2, positive=True),
            sample_dt=sub.number("sample_dt", diagnostics.SAMPLE_DT, positive=True))
        report["sync"] = sync.to_dict()
        report["lambda_c"] = float(np.ptp(params.omegas))
    io.write_json(out / "report.json", report)
    print(f"wrote {out / 'trajectory.csv'} and {out / 'report.json'}")
    return EXIT_OK


# orbit ------------------------------------------------------------------------------

def cmd_orbit(cfg: _Config, nested: int = 0) -> int:
    out = _out_dir(cfg)
    omega = cfg.number("omega", required=True, positive=True)
    lam = cfg.number("lambda", required=True, positive=True)
    icfg = _integrator(cfg, 1e3)
    init = cfg.get("initial", {"x": 1.0, "y": 1.05, "z": 0.0})
    if not isinstance(init, dict):
        raise cfg.error("initial", "expected an object")
    sub = _Config(init, cfg.text, cfg.source)
    if "v0" in init:
        v0 = sub.number("v0", positive=True)
        direction = (1.0, 0.0, 0.0)
    else:
        direction = tuple(sub.number(c, 0.0) for c in "xyz")
        v0 = math.sqrt(sum(c * c for c in direction))
    nested = int(cfg.number("nested", nested))
    try:
        orbit = two_oscillator.detect_periodic_orbit(v0, omega, lam, icfg)
    except NotWeak as exc:
        raise cfg.error("lambda", str(exc)) from exc
    except ValueError as exc:
        raise cfg.error("initial", str(exc)) from exc
    except NoReturn as exc:
        print(f"analysis failure: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except BlowUp as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    report = {"provenance": io.provenance(_echo(cfg), icfg.to_dict()), "orbit": orbit.to_dict()}
    if cfg.get("lift_check", True) and any(direction):
        report["lift_deviation"] = two_oscillator.lift_check(orbit, omega, lam, direction)
    t, w, v = orbit.samples(0.01)
    io.write_csv(out / "orbit.csv", ["t", "w", "v"], np.column_stack([t, w, v]))
    rings = []
    for i in range(1, nested + 1):
        vi = orbit.alpha + (v0 - orbit.alpha) * 2.0 ** (-i)
        try:
            ring = two_oscillator.detect_periodic_orbit(vi, omega, lam, icfg)
        except NoReturn as exc:
            print(f"analysis failure on ring {i}: {exc}", file=sys.stderr)
            return EXIT_ANALYSIS
        rings.append(ring.to_dict())
        t, w, v = ring.samples(0.01)
        io.write_csv(out / f"orbit_ring{i}.csv", ["t", "w", "v"], np.column_stack([t, w, v]))
    if rings:
        maxes = [orbit.max_v] + [r["max_v"] for r in rings]
        report["nested"] = rings
        report["strictly_nested"] = bool(all(a > b for a, b in zip(maxes, maxes[1:])))
    io.write_json(out / "orbit.json", report)
    print(f"period {orbit.period:.12g}, closure error {orbit.closure_error:.3e}")
    return EXIT_OK


# lion dance -------------------------------------------------------------------------

def _lion_params(cfg: _Config, lam=None) -> lion_dance.LionParams:
    omega = cfg.number("omega", 1.0, positive=True)
    n = cfg.number("n_osc", 3)
    if n != int(n) or n < 3:
        raise cfg.error("n_osc", f"expected an integer >= 3, got {n}")
    n = int(n)
    if lam is None:
        lam = cfg.number("lambda", required=True, positive=True, allow=("critical",))
    if lam == "critical":
        lam = lion_dance.lambda_critical(omega, n)
    return lion_dance.LionParams(omega, lam, n)


def _equilibria(p: lion_dance.LionParams, grid: dict):
    if p.n_osc == 3:
        eqs = lion_dance.find_equilibria_n3(p)
        return lion_dance.SweepResult(eqs, {"method": "cutting_curve"})
    return lion_dance.equilibrium_sweep(p, **grid)


def _grid(cfg: _Config) -> dict:
    raw = cfg.get("grid", {}) or {}
    sub = _Config(raw, cfg.text, cfg.source)
    return {"nw": int(sub.number("nw", 400, positive=True)),
            "nv": int(sub.number("nv", 200, positive=True)),
            "v_max": sub.number("v_max", 3.0, positive=True)}


def cmd_equilibria(cfg: _Config, field: bool = False) -> int:
    out = _out_dir(cfg)
    p = _lion_params(cfg)
    regime = lion_dance.classify_regime(p)
    res = _equilibria(p, _grid(cfg))
    report = {"provenance": io.provenance(_echo(cfg)), "lambda": p.lam,
              "regime": regime.to_dict(), "lambda_crit": regime.lambda_crit}
    report.update(res.to_dict())
    io.write_json(out / "equilibria.json", report)
    if field or cfg.get("field", False):
        io.write_csv(out / "field.csv", ["w", "v", "wdot", "vdot"],
                     np.column_stack(lion_dance.vector_field_grid(p)))
    print(f"{regime.tag}: {len(res.equilibria)} equilibria, {res.sink_count} sink(s)")
    return EXIT_OK


def _sweep_point(args):
    omega, lam, n, grid = args
    p = lion_dance.LionParams(omega, lam, n)
    res = _equilibria(p, grid)
    return lam, res.n_axis, res.n_interior, res.sink_count


def _workers() -> int:
    raw = os.environ.get("QUATSYNC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"QUATSYNC_THREADS must be an integer, got {raw!r}")


def cmd_sweep(cfg: _Config) -> int:
    out = _out_dir(cfg)
    raw = cfg.get("sweep", required=True)
    if not isinstance(raw, dict):
        raise cfg.error("sweep", "expected an object")
    sub = _Config(raw, cfg.text, cfg.source)
    lo = sub.number("lambda_min", required=True, positive=True)
    hi = sub.number("lambda_max", required=True, positive=True)
    step = sub.number("lambda_step", required=True, positive=True)
    if hi < lo:
        raise sub.error("lambda_max", "must be >= lambda_min")
    p0 = _lion_params(cfg, lam=lo)
    n_steps = int(math.floor((hi - lo) / step + 1e-9))
    lams = [round(lo + i * step, 12) for i in range(n_steps + 1)]
    regular = set(lams)
    lc = lion_dance.lambda_critical(p0.omega, p0.n_osc)
    if sub.get("include_critical", True) and lo <= lc <= hi:
        lams.append(lc)
    lams = sorted(set(lams))
    grid = _grid(cfg)
    jobs = [(p0.omega, lam, p0.n_osc, grid) for lam in lams]
    workers = _workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    io.write_csv(out / "sweep.csv", ["lambda", "n_axis_eq", "n_interior_eq", "n_sinks"], rows)
    on_grid = [r for r in rows if r[0] in regular]
    births = [(a[0], b[0]) for a, b in zip(on_grid, on_grid[1:]) if a[1] == 0 and b[1] > 0]
    report = {"provenance": io.provenance(_echo(cfg)), "lambda_crit": lc,
              "axis_birth_brackets": births, "n_points": len(rows)}
    io.write_json(out / "sweep.json", report)
    print(f"{len(rows)} coupling values; axis equilibria appear in {births}")
    return EXIT_OK


def cmd_regime(cfg: _Config) -> int:
    p = _lion_params(cfg)
    regime = lion_dance.classify_regime(p)
    report = {"provenance": io.provenance(_echo(cfg)), "lambda": p.lam, **regime.to_dict()}
    if cfg.get("out") is not None:
        io.write_json(_out_dir(cfg) / "regime.json", report)
    print(json.dumps(io.to_jsonable({"tag": regime.tag, "lambda": p.lam,
                                     "lambda_crit": regime.lambda_crit,
                                     "lambda_c": regime.lambda_c})))
    return EXIT_OK


# entry point ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quatsync", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, hlp in (("simulate", "integrate a model and write trajectory + report"),
                      ("orbit", "closed orbit of the two-oscillator planar flow"),
                      ("equilibria", "equilibria and stability of the Lion Dance flow"),
                      ("sweep", "equilibrium counts across a coupling range"),
                      ("regime", "classify a coupling value for the Lion Dance flow")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--lambda", dest="lam", type=_parse_lambda,
                        help="coupling strength (or 'critical' for the Lion Dance commands)")
        sp.add_argument("--omega", type=_parse_omega, help="frequency or comma-separated list")
        sp.add_argument("--n-osc", dest="n_osc", type=int)
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--rtol", type=float)
        sp.add_argument("--atol", type=float)
        sp.add_argument("--out", help="output directory")
        if name == "orbit":
            sp.add_argument("--nested", type=int, default=0, help="number of inner rings")
        if name == "equilibria":
            sp.add_argument("--field", action="store_true", help="also write field.csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "orbit":
            return cmd_orbit(cfg, args.nested)
        if args.command == "equilibria":
            return cmd_equilibria(cfg, args.field)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_regime(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
