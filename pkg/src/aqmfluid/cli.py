"""Command-line front end: ``run``, ``sweep``, ``optimize`` and ``replay``.

Exit codes: 0 on success, 1 when a simulation fails, 2 for usage or
configuration errors. The output directory is ``--output``, else the
``AQMFLUID_OUTPUT_DIR`` environment variable, else the config's
``[output] directory``.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import config as cfg
from .fluid import SimulationError
from .ga import evolve
from .neural import RbfSpec
from .scenarios import (CONTROLLER_NAMES, build_controller, get_scenario, run_scenario,
                        sweep, write_summary, write_sweep, write_timeseries)
from .tuning import ga_pso, tune_weights

OUTPUT_ENV = "AQMFLUID_OUTPUT_DIR"


class UsageError(Exception):
    pass


def _say(*parts):
    print(*parts, flush=True)


def _load_doc(path) -> cfg.ConfigDocument:
    if path is None:
        return cfg.ConfigDocument()
    try:
        return cfg.load(path)
    except FileNotFoundError:
        raise UsageError(f"cannot read config file: {path}") from None


def _output_dir(args, doc) -> Path:
    out = Path(args.output or os.environ.get(OUTPUT_ENV) or doc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _controller_kwargs(doc: cfg.ConfigDocument, name: str) -> dict:
    kw = dict(pi=doc.pi, rem=doc.rem, ared=doc.ared, control_period=doc.control_period)
    if name in ("rbf", "irbf"):
        kw.update(rbf=doc.rbf, windup=doc.windup, trapezoid=doc.trapezoid)
    return kw


def _write_manifest(out: Path, command: str, arguments: dict, doc, outputs: list) -> Path:
    manifest = {
        "tool": "aqmfluid",
        "version": __version__,
        "command": command,
        "arguments": arguments,
        "seed": doc.seed,
        "config": cfg.dumps(doc),
        "outputs": sorted(str(Path(p).name) for p in outputs),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _write_rows(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else repr(v) for v in row])
    return path


# --- commands --------------------------------------------------------------

def cmd_run(doc: cfg.ConfigDocument, out: Path, scenario: str, controller: str | None,
            weights: str | None = None) -> int:
    name = controller or doc.discipline
    if name not in CONTROLLER_NAMES:
        raise UsageError(f"unknown controller {name!r} (known: {', '.join(CONTROLLER_NAMES)})")
    try:
        scn = get_scenario(scenario)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    if weights is not None:
        wdoc = _load_doc(weights)
        if wdoc.rbf is None:
            raise UsageError(f"{weights} has no [rbf] section")
        doc = replace(doc, rbf=wdoc.rbf)
    ctrl = build_controller(name, scn.network(doc.network), scn.q_target,
                            **_controller_kwargs(doc, name))
    run = run_scenario(scn, ctrl, base=doc.network, sample_period=doc.sample_period)
    outputs = [write_timeseries(run, out / "timeseries.csv"), write_summary([run], out / "summary.csv")]
    _write_manifest(out, "run", {"scenario": scenario, "controller": name}, doc, outputs)
    _say(f"scenario={scn.name} controller={name} {run.summary.line()}")
    return 0


def cmd_sweep(doc: cfg.ConfigDocument, out: Path, kind: str, controllers: list[str],
              grid=None) -> int:
    if not controllers:
        raise UsageError("at least one controller is required")
    for name in controllers:
        if name not in CONTROLLER_NAMES:
            raise UsageError(f"unknown controller {name!r}")
    rows = []
    for name in controllers:
        rows += sweep(kind, name, grid, base=doc.network, sample_period=doc.sample_period,
                      **_controller_kwargs(doc, name))
    for r in rows:
        if r.error:
            _say(f"warning: {r.controller} at x={r.x} failed: {r.error}")
    path = write_sweep(rows, out / "sweep.csv")
    _write_manifest(out, "sweep", {"kind": kind, "controllers": controllers,
                                   "grid": list(grid) if grid else None}, doc, [path])
    _say(f"sweep {kind}: {len(rows)} runs -> {path}")
    return 0


def _surrogate_fitness(n: int) -> float:
    return float(-(n - 5) ** 2)


def cmd_optimize(doc: cfg.ConfigDocument, out: Path, mode: str, neurons: int | None = None,
                 controller: str | None = None, surrogate: bool = False) -> int:
    name = controller or (doc.discipline if doc.discipline in ("rbf", "irbf") else "irbf")
    if name not in ("rbf", "irbf"):
        raise UsageError("optimize tunes 'rbf' or 'irbf' controllers")
    integral = name == "irbf"
    outputs = []
    progress = _progress(doc.pso.max_iterations)
    if mode == "pso":
        n = neurons or (doc.rbf.n if doc.rbf else 5)
        template = doc.rbf if doc.rbf is not None and doc.rbf.n == n else RbfSpec.evenly_spaced(n)
        spec, result = tune_weights(template, integral, doc.pso, doc.tuning_horizon,
                                    doc.network, callback=progress)
    elif mode == "ga-pso":
        if surrogate:
            ga_result = evolve(doc.ga, _surrogate_fitness)
            outputs.append(_write_rows(out / "ga_trace.csv", ("generation", "best_n", "best_F"),
                                       ga_result.trace))
            _write_manifest(out, "optimize", {"mode": mode, "surrogate": True}, doc, outputs)
            _say(f"ga surrogate: best_n={ga_result.best_n} best_F={ga_result.best_fitness}")
            return 0
        res = ga_pso(doc.ga, doc.pso, integral, doc.inner, doc.tuning_horizon, doc.network)
        spec, result = res.spec, res.pso
        outputs.append(_write_rows(out / "ga_trace.csv", ("generation", "best_n", "best_F"),
                                   res.ga.trace))
        _say(f"ga: best_n={res.ga.best_n} best_F={res.ga.best_fitness}")
    else:
        raise UsageError(f"unknown mode {mode!r}")
    outputs.append(_write_rows(out / "convergence.csv", ("iteration", "best_cost"),
                               enumerate(result.trace)))
    tuned = replace(doc, discipline=name, rbf=spec)
    outputs.append(cfg.save(tuned, out / "rbf_spec.cfg"))
    _write_manifest(out, "optimize", {"mode": mode, "neurons": spec.n, "controller": name}, doc,
                    outputs)
    _say(f"pso: best IAE={result.best_cost:.6f} (initial {result.trace[0]:.6f}) "
         f"weights={', '.join(f'{w:.4f}' for w in spec.weights)}"
         + (f" integral_gain={spec.integral_gain:.6g}" if integral else ""))
    return 0


def _progress(total):
    step = max(total // 10, 1)

    def report(k, best, swarm):
        if (k + 1) % step == 0 or k + 1 == total:
            _say(f"  iteration {k + 1}/{total}: best IAE {best:.6f}")
    return report


def cmd_replay(manifest_path, out: Path | None) -> int:
    try:
        manifest = json.loads(Path(manifest_path).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest {manifest_path}: {exc}") from None
    doc = cfg.loads(manifest["config"])
    out = out or Path(manifest_path).parent
    out.mkdir(parents=True, exist_ok=True)
    a = manifest["arguments"]
    command = manifest["command"]
    if command == "run":
        return cmd_run(doc, out, a["scenario"], a["controller"])
    if command == "sweep":
        return cmd_sweep(doc, out, a["kind"], a["controllers"], a.get("grid"))
    if command == "optimize":
        if a.get("surrogate"):
            return cmd_optimize(doc, out, a["mode"], surrogate=True)
        return cmd_optimize(doc, out, a["mode"], a.get("neurons"), a.get("controller"))
    raise UsageError(f"unknown command in manifest: {command!r}")


# --- argument parsing ------------------------------------------------------

def _csv_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqmfluid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="config file or preset name (table2_rbf, table2_irbf, "
                                        "table3_baselines)")
        p.add_argument("--output", help="output directory")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")

    p = sub.add_parser("run", help="simulate one scenario with one controller")
    common(p)
    p.add_argument("--scenario", required=True, help="s1, s2, s3-short or s3-long")
    p.add_argument("--controller", help=f"one of {', '.join(CONTROLLER_NAMES)}")
    p.add_argument("--weights", help="config document whose [rbf] section supplies the weights")

    p = sub.add_parser("sweep", help="utilization/loss over connections or delays")
    common(p)
    p.add_argument("--kind", required=True, choices=("connections", "delay"))
    p.add_argument("--controllers", type=_csv_list, default=["pi", "ared", "irbf"],
                   help="comma-separated controller names")
    p.add_argument("--grid", type=lambda s: [float(x) for x in _csv_list(s)],
                   help="comma-separated grid (connections, or delays in ms)")

    p = sub.add_parser("optimize", help="tune RBF weights by PSO, optionally with GA structure search")
    common(p)
    p.add_argument("--mode", required=True, choices=("pso", "ga-pso"))
    p.add_argument("--neurons", type=int, help="hidden-layer size for --mode pso")
    p.add_argument("--controller", choices=("rbf", "irbf"))
    p.add_argument("--particles", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--horizon", type=float, help="tuning horizon (s)")
    p.add_argument("--generations", type=int)
    p.add_argument("--surrogate", action="store_true",
                   help="score structures with -(n-5)^2 instead of simulations")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--output", help="output directory (defaults to the manifest's)")
    return parser


def _apply_overrides(doc: cfg.ConfigDocument, args) -> cfg.ConfigDocument:
    if getattr(args, "seed", None) is not None:
        doc = replace(doc, seed=args.seed)
    if args.command == "optimize":
        pso_kw = {}
        if args.particles:
            pso_kw["swarm_size"] = args.particles
        if args.iterations is not None:
            pso_kw["max_iterations"] = args.iterations
        if pso_kw:
            doc = replace(doc, pso=replace(doc.pso, **pso_kw))
        if args.horizon:
            doc = replace(doc, tuning_horizon=args.horizon)
        if args.generations:
            doc = replace(doc, ga=replace(doc.ga, generations=args.generations))
    return doc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            return cmd_replay(args.manifest, Path(args.output) if args.output else None)
        doc = _apply_overrides(_load_doc(args.config), args)
        out = _output_dir(args, doc)
        if args.command == "run":
            return cmd_run(doc, out, args.scenario, args.controller, args.weights)
        if args.command == "sweep":
            if not args.controllers:
                parser.error("--controllers must name at least one controller")
            return cmd_sweep(doc, out, args.kind, args.controllers, args.grid)
        return cmd_optimize(doc, out, args.mode, args.neurons, args.controller, args.surrogate)
    except SimulationError as exc:
        print(f"aqmfluid: simulation failed: {exc}", file=sys.stderr)
        return 1
    except (UsageError, cfg.ConfigError, KeyError, ValueError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"aqmfluid: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
