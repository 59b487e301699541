"""Command-line front end.

    starjunction smatrix  [--config cfg.json] [--family kirchhoff|decoupled|alpha|beta|lattice] ...
    starjunction simulate [--config cfg.json] [--out series.csv]
    starjunction converge [--k 1.0] [--deltas 0.2 0.1 0.05 0.025]
    starjunction twomode  [--family alpha --alpha 1.0]
    starjunction validate [--seed 0]

Configuration comes from an optional JSON file; command-line flags override it.
Exit codes: 0 ok, 2 usage/config error, 3 experiment invalid, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic_smatrix as an
from . import discrete_smatrix as ds
from . import dynamics as dy
from . import observables as ob
from .errors import DomainError, ExperimentInvalid, IntegrationBlowUp, SpecError
from .graph_model import (
    DECOUPLED,
    KIRCHHOFF,
    AlphaFamily,
    BetaFamily,
    LatticeSpec,
    StarGraphSpec,
)
from .validation import run_validation

log = logging.getLogger("starjunction")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS = {
    "graph": {"rays": 3, "mass": 1.0},
    "lattice": {"delta": 0.05, "sites_per_ray": 4000, "dt": 0.0125},
    "family": {"kind": "kirchhoff"},
    "k_grid": {"start": 0.01, "stop": 10.0, "num": 1000},
    "packet": {"carrier_k": 2.0, "center": 25.0, "width": 2.5, "amplitude": [1.0, 0.0],
               "velocity_init": "spectral"},
    "stop": {"clearance": 10.0, "max_time": None, "junction_tol": 1e-4},
    "cadence": 50,
    "converge": {"k": 1.0, "deltas": [0.2, 0.1, 0.05, 0.025]},
    "twomode": {"k_grid": {"start": 0.25, "stop": 5.0, "num": 20}},
}

SMATRIX_HEADER = "k,re_R,im_R,re_T,im_T,theta,unitarity_residual"
CONVERGE_HEADER = "delta,abs_error,ratio"
TWOMODE_HEADER = "k1,k2,abs_energy_residual,abs_charge_residual"


def fmt(x) -> str:
    """17 significant digits in scientific notation, round-trip exact."""
    return f"{float(x):.16e}"


class UsageError(Exception):
    pass


# Configuration -----------------------------------------------------------------


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _grid(spec, name):
    if isinstance(spec, dict):
        try:
            ks = np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{name}: expected start/stop/num ({exc})") from None
    else:
        ks = np.asarray(spec, dtype=float)
    if ks.ndim != 1 or ks.size == 0:
        raise UsageError(f"{name} is empty")
    if np.any(~np.isfinite(ks)) or np.any(ks <= 0) or np.any(np.diff(ks) <= 0):
        raise UsageError(f"{name} must be strictly increasing and positive")
    return ks


@dataclass
class ScenarioConfig:
    """Resolved configuration; ``raw`` is echoed into every summary."""

    raw: dict

    @property
    def graph(self) -> StarGraphSpec:
        g = self.raw["graph"]
        return StarGraphSpec(int(g["rays"]), float(g["mass"]))

    @property
    def lattice(self) -> LatticeSpec:
        lat = self.raw["lattice"]
        return LatticeSpec(float(lat["delta"]), int(lat["sites_per_ray"]), float(lat["dt"]))

    @property
    def family_kind(self) -> str:
        return self.raw["family"]["kind"]

    @property
    def family(self):
        f = self.raw["family"]
        kind = f["kind"]
        if kind == "kirchhoff":
            return KIRCHHOFF
        if kind == "decoupled":
            return DECOUPLED
        if kind == "alpha":
            return AlphaFamily(float(f["alpha"]))
        if kind == "beta":
            return BetaFamily(float(f["beta"]))
        raise UsageError(f"family {kind!r} is not a junction family here")

    @property
    def k_grid(self) -> np.ndarray:
        return _grid(self.raw["k_grid"], "k_grid")

    @property
    def packet(self) -> dy.WavePacketSpec:
        p = self.raw["packet"]
        amp = p.get("amplitude", 1.0)
        amp = complex(*amp) if isinstance(amp, (list, tuple)) else complex(amp)
        return dy.WavePacketSpec(float(p["carrier_k"]), float(p["center"]), float(p["width"]),
                                 amp, p.get("velocity_init", "spectral"))

    @property
    def stop(self) -> dy.StopRule:
        s = self.raw["stop"]
        return dy.StopRule(float(s["clearance"]), s.get("max_time"), float(s["junction_tol"]),
                           int(self.raw["cadence"]))


def load_config(args) -> ScenarioConfig:
    raw = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            raw = _merge(raw, json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    overrides = {
        ("graph", "rays"): getattr(args, "rays", None),
        ("graph", "mass"): getattr(args, "mass", None),
        ("lattice", "delta"): getattr(args, "delta", None),
        ("lattice", "sites_per_ray"): getattr(args, "sites", None),
        ("lattice", "dt"): getattr(args, "dt", None),
        ("converge", "k"): getattr(args, "k", None),
        ("converge", "deltas"): getattr(args, "deltas", None),
        ("packet", "carrier_k"): getattr(args, "carrier_k", None),
        ("packet", "center"): getattr(args, "center", None),
        ("packet", "width"): getattr(args, "width", None),
        ("packet", "velocity_init"): getattr(args, "velocity_init", None),
    }
    for (section, key), value in overrides.items():
        if value is not None:
            raw[section][key] = value
    if getattr(args, "family", None):
        raw["family"] = {"kind": args.family}
    for key in ("alpha", "beta"):
        if getattr(args, key, None) is not None:
            raw["family"][key] = getattr(args, key)
    if getattr(args, "cadence", None) is not None:
        raw["cadence"] = args.cadence
    k_min, k_max, num_k = (getattr(args, a, None) for a in ("k_min", "k_max", "num_k"))
    if any(v is not None for v in (k_min, k_max, num_k)):
        target = raw["twomode"] if args.command == "twomode" else raw
        grid = dict(target["k_grid"]) if isinstance(target["k_grid"], dict) else {}
        grid.update({k: v for k, v in (("start", k_min), ("stop", k_max), ("num", num_k)) if v is not None})
        target["k_grid"] = grid
    return ScenarioConfig(raw)


# Output ---------------------------------------------------------------------------


class _Sink:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path in (None, "-"):
            self.fh = sys.stdout
        else:
            self.fh = open(self.path, "w", newline="")
        return self

    def row(self, *cells):
        self.fh.write(",".join(cells) + "\n")

    def __exit__(self, *exc):
        if self.fh is not sys.stdout:
            self.fh.close()
        else:
            self.fh.flush()


def _emit_summary(summary, args):
    text = json.dumps(summary, indent=2, sort_keys=True, default=str)
    if args.out not in (None, "-"):
        Path(str(args.out) + ".summary.json").write_text(text + "\n")
    if not args.quiet:
        print(text, file=sys.stderr)


# Subcommands -------------------------------------------------------------------------


def cmd_smatrix(cfg: ScenarioConfig, args) -> int:
    graph, ks = cfg.graph, cfg.k_grid
    s = graph.ray_count
    if cfg.family_kind == "lattice":
        delta = cfg.lattice.delta
        if ks[-1] * delta >= math.pi:
            raise UsageError(f"lattice table needs k*delta < pi; max is {ks[-1] * delta:.4g}")
        amps = [ds.discrete_reflection(k, delta, s) for k in ks]
    else:
        family = cfg.family
        amps = [an.family_amplitudes(family, k, graph) for k in ks]
    with _Sink(args.out) as out:
        out.row(SMATRIX_HEADER)
        for a in amps:
            R, T = a.reflection, a.transmission
            out.row(fmt(a.k), fmt(R.real), fmt(R.imag), fmt(T.real), fmt(T.imag), fmt(a.phase),
                    fmt(an.unitarity_residual(R, s)))
    worst = max(abs(an.unitarity_residual(a.reflection, s)) for a in amps)
    _emit_summary({"config": cfg.raw, "rows": len(amps), "max_abs_unitarity_residual": worst}, args)
    return EXIT_OK


def simulation_header(s: int) -> str:
    cols = ["t", "E_total", "Q_total"]
    cols += [f"E_ray{q}" for q in range(s)] + [f"Q_ray{q}" for q in range(s)]
    cols += ["E_junction", "energy_balance", "charge_balance"]
    return ",".join(cols)


def cmd_simulate(cfg: ScenarioConfig, args) -> int:
    graph, lattice, packet, stop = cfg.graph, cfg.lattice, cfg.packet, cfg.stop
    family = cfg.family
    rows = []

    def record(i, t, st):
        e_rays = ob.ray_energies(st, graph, lattice)
        q_rays = ob.ray_charges(st, graph, lattice)
        e_j = ob.junction_energy(st, graph, lattice, family)
        return [t, float(np.sum(e_rays)) + e_j,
                float(np.sum(q_rays)) + ob.junction_charge(st, lattice),
                *e_rays, *q_rays, e_j,
                ob.junction_energy_balance(st, graph, lattice, family),
                ob.junction_charge_balance(st, graph, lattice, family)]

    series = dy.Observer(record, every=stop.cadence, records=rows)
    m = dy.run_scattering_experiment(graph, lattice, packet, stop, family, extra_observers=[series])
    with _Sink(args.out) as out:
        out.row(simulation_header(graph.ray_count))
        for r in rows:
            out.row(*(fmt(v) for v in r))
    energies = np.array([r[1] for r in rows])
    summary = {"config": cfg.raw, **m.summary(),
               "energy_column_relative_spread": float(np.ptp(energies) / energies[0])}
    _emit_summary(summary, args)
    return EXIT_OK


def fitted_order(deltas, errors) -> float:
    deltas, errors = np.asarray(deltas, float), np.asarray(errors, float)
    if np.any(errors <= 0):
        return float("nan")
    return float(np.polyfit(np.log(deltas), np.log(errors), 1)[0])


def cmd_converge(cfg: ScenarioConfig, args) -> int:
    c = cfg.raw["converge"]
    k = float(c["k"])
    deltas = sorted((float(d) for d in c["deltas"]), reverse=True)
    if len(deltas) < 3 or len(set(deltas)) != len(deltas):
        raise UsageError("converge needs at least three distinct delta values")
    if not k > 0 or deltas[-1] <= 0 or k * deltas[0] > 0.3:
        raise UsageError(f"converge regime needs k > 0, delta > 0 and k*delta <= 0.3 (got {k * deltas[0]:.4g})")
    s = cfg.graph.ray_count
    errors = [ds.continuum_limit_error(k, d, s) for d in deltas]
    order = fitted_order(deltas, errors)
    with _Sink(args.out) as out:
        out.row(CONVERGE_HEADER)
        for i, (d, e) in enumerate(zip(deltas, errors)):
            out.row(fmt(d), fmt(e), fmt(errors[i - 1] / e) if i and e > 0 else "")
        out.row("fitted_order", fmt(order), "")
    _emit_summary({"config": cfg.raw, "k": k, "deltas": deltas, "errors": errors,
                   "fitted_order": order,
                   "first_order_prediction": [ds.first_order_error(k, d, s) for d in deltas]}, args)
    return EXIT_OK


def cmd_twomode(cfg: ScenarioConfig, args) -> int:
    graph = cfg.graph
    family = cfg.family
    ks = _grid(cfg.raw["twomode"]["k_grid"], "twomode k_grid")
    s, m = graph.ray_count, graph.mass
    R = {k: an.family_amplitudes(family, k, graph).reflection for k in ks}
    worst_e = worst_q = 0.0
    with _Sink(args.out) as out:
        out.row(TWOMODE_HEADER)
        for i, k1 in enumerate(ks):
            for k2 in ks[i + 1:]:
                spec = an.TwoModeSpec(k1, k2, R[k1], R[k2])
                e = abs(an.energy_cross_residual(spec, m, s))
                q = abs(an.charge_cross_residual(spec, s))
                worst_e, worst_q = max(worst_e, e), max(worst_q, q)
                out.row(fmt(k1), fmt(k2), fmt(e), fmt(q))
    _emit_summary({"config": cfg.raw, "max_abs_energy_residual": worst_e,
                   "max_abs_charge_residual": worst_q}, args)
    return EXIT_OK


def cmd_validate(cfg: ScenarioConfig, args) -> int:
    results = run_validation(args.seed)
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    with _Sink(args.out) as out:
        for line in lines:
            out.fh.write(line + "\n")
    return EXIT_OK if ok else EXIT_NUMERIC


COMMANDS = {
    "smatrix": cmd_smatrix,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "twomode": cmd_twomode,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starjunction", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file")
    common.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomised suites")
    common.add_argument("--quiet", action="store_true", help="suppress the summary on stderr")
    common.add_argument("--rays", type=int)
    common.add_argument("--mass", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--sites", type=int)
    common.add_argument("--dt", type=float)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("smatrix", parents=[common], help="tabulate R, T and theta over k")
    p.add_argument("--family", choices=["kirchhoff", "decoupled", "alpha", "beta", "lattice"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.add_argument("--num-k", type=int)

    p = sub.add_parser("simulate", parents=[common], help="wave-packet scattering run")
    p.add_argument("--family", choices=["kirchhoff", "decoupled"])
    p.add_argument("--carrier-k", type=float)
    p.add_argument("--center", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--velocity-init", choices=["spectral", "narrowband"])
    p.add_argument("--cadence", type=int)

    p = sub.add_parser("converge", parents=[common], help="lattice-to-continuum convergence")
    p.add_argument("--k", type=float)
    p.add_argument("--deltas", type=float, nargs="+")

    p = sub.add_parser("twomode", parents=[common], help="two-mode cross residuals")
    p.add_argument("--family", choices=["kirchhoff", "decoupled", "alpha", "beta"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.add_argument("--num-k", type=int)

    sub.add_parser("validate", parents=[common], help="run the built-in invariant suite")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (UsageError, SpecError, DomainError, KeyError) as exc:
        print(f"starjunction {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExperimentInvalid as exc:
        print(f"starjunction {args.command}: experiment invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (IntegrationBlowUp, FloatingPointError) as exc:
        print(f"starjunction {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
