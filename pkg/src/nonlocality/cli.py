"""Command-line entry point.

Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 guard violation,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import threading
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import fixtures, report, simulate
from .analysis import (
    MissingSettings,
    SignalingInput,
    chained_nonlocal_content,
    epr2_local_content,
    predictability_bound,
)
from .functionals import (
    BellFunctional,
    InvalidN,
    OutOfRangeTau,
    TooManySettings,
    algebraic_bound,
    by_name,
    chained,
    local_bound,
    lplus1pr_bound,
)
from .optimize import InvalidObservable, NonConvergence, SeesawConfig, seesaw, seesaw_mes, seesaw_planar
from .quantum import InvalidSetting, InvalidState, behavior_of, chained_settings, circle_settings, elegant_settings
from .scenario import (
    Behavior,
    InfeasibleCorrelators,
    InvalidProbability,
    Scenario,
    ScenarioMismatch,
    SignalingDetected,
    behavior_from_correlators,
    correlators_of,
    pr_box,
    uniform_behavior,
)
from .simplex import LpFailure

EXIT_IO, EXIT_USAGE, EXIT_GUARD, EXIT_NUMERIC = 1, 2, 3, 4

GUARD_ERRORS = (TooManySettings, InvalidN, OutOfRangeTau, InvalidProbability, SignalingDetected,
                InfeasibleCorrelators, ScenarioMismatch, SignalingInput, MissingSettings,
                InvalidState, InvalidSetting, InvalidObservable)
NUMERIC_ERRORS = (LpFailure, NonConvergence, FloatingPointError, np.linalg.LinAlgError)


class UsageError(Exception):
    pass


class Writer:
    """The only code path that touches the filesystem; writes are serialized."""

    def __init__(self):
        self._lock = threading.Lock()
        self.written: list[Path] = []

    def write(self, path: str | Path, text: str) -> Path:
        path = Path(path)
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
            self.written.append(path)
        return path


def _round(obj, digits: int):
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) or obj == 0 else float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist(), digits)
    if isinstance(obj, np.generic):
        return _round(obj.item(), digits)
    return obj


def _plain(obj, digits: int, indent: str = "") -> str:
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            if isinstance(v, dict):
                lines.append(f"{indent}{k}:")
                lines.append(_plain(v, digits, indent + "  "))
            else:
                lines.append(f"{indent}{k}: {_plain(v, digits)}")
        return "\n".join(lines)
    if isinstance(obj, float):
        return f"{obj:.{digits}g}"
    if isinstance(obj, list):
        return "[" + ", ".join(_plain(v, digits) for v in obj) + "]"
    return str(obj)


def _emit(args, writer: Writer, payload: dict) -> None:
    if args.json:
        text = json.dumps(_round(payload, args.digits), indent=2)
    else:
        text = _plain(_round(payload, args.digits), args.digits)
    if args.out:
        writer.write(args.out, text + "\n")
    else:
        print(text)


# -- functional selection ----------------------------------------------------

def _functional(args) -> BellFunctional:
    if args.file:
        return BellFunctional.from_json(json.loads(Path(args.file).read_text()))
    if not args.name:
        raise UsageError("give --name or --file")
    try:
        return by_name(args.name, n=args.n, tau=args.tau)
    except KeyError as e:
        raise UsageError(str(e.args[0])) from None


def cmd_bound(args, writer: Writer) -> None:
    f = _functional(args)
    if args.kind == "local":
        res = local_bound(f)
        payload = {"functional": f.name, "kind": "local", "value": res.value, "witness": res.witness}
    elif args.kind == "lplus1pr":
        res = lplus1pr_bound(f)
        payload = {"functional": f.name, "kind": "lplus1pr", "value": res.value, "witness": res.witness}
    else:
        payload = {"functional": f.name, "kind": "algebraic", "value": algebraic_bound(f)}
    _emit(args, writer, payload)


def _seesaw_config(args) -> SeesawConfig:
    kw = {"seed": args.seed, "max_iters": args.max_iters}
    if args.restarts is not None:
        kw["restarts"] = args.restarts
    elif args.restriction == "mes":
        kw["restarts"] = 256
    if args.tol is not None:
        kw["tol"] = args.tol
    return SeesawConfig(**kw)


def cmd_qmax(args, writer: Writer) -> None:
    f = _functional(args)
    cfg = _seesaw_config(args)
    with warnings.catch_warnings():
        if args.strict:
            warnings.simplefilter("error", NonConvergence)
        run = {"none": seesaw, "planar": seesaw_planar, "mes": seesaw_mes}[args.restriction]
        res = run(f, cfg)
    payload = {"functional": f.name, "restriction": args.restriction, "value": res.value,
               "converged": res.converged, "iterations": res.iterations,
               "restarts": cfg.restarts, "strategy": res.strategy.to_json()}
    if args.restriction == "mes":
        payload["note"] = "d = 2 search; evidence, not proof"
    _emit(args, writer, payload)


IDEAL_BEHAVIORS = ("tsirelson", "pr", "uniform", "chained", "elegant")


def _behavior(args) -> Behavior:
    if args.file:
        return Behavior.from_json(Path(args.file).read_text())
    if args.counts:
        b, _ = simulate.estimate_behavior(simulate.CountRecord.load(args.counts))
        # finite statistics break no-signaling slightly; project onto correlators
        return behavior_from_correlators(correlators_of(b))
    if args.ideal == "tsirelson":
        return behavior_of(circle_settings(0.0))
    if args.ideal == "pr":
        return pr_box()
    if args.ideal == "uniform":
        return uniform_behavior(Scenario(2, 2))
    if args.ideal == "chained":
        if args.n is None:
            raise UsageError("--ideal chained needs --n")
        return behavior_of(chained_settings(args.n))
    if args.ideal == "elegant":
        return behavior_of(elegant_settings())
    raise UsageError("give --file, --counts or --ideal")


def cmd_epr2(args, writer: Writer) -> None:
    res = epr2_local_content(_behavior(args))
    payload = {"q_min": res.q_min, "local_weight": 1 - res.q_min, "status": res.status, "pivots": res.pivots}
    if args.full:
        payload.update(res.to_json())
    _emit(args, writer, payload)


def cmd_chained(args, writer: Writer) -> None:
    if args.table3:
        rows = []
        for r in fixtures.load("table3").rows:
            p = predictability_bound(r["I_n"], r["nu_n"])
            rows.append({"n": r["n"], "I_n": r["I_n"], "delta": p.delta, "published": r["delta_n"],
                         "within_2nu": abs(p.delta - r["delta_n"]) <= 2 * r["nu_n"]})
        _emit(args, writer, {"rows": rows} if args.json else {f"n={r['n']}": r for r in rows})
        return
    if args.value is not None:
        value, source = args.value, "given"
    elif args.n is not None:
        chained(args.n)  # validates n
        value, source = args.n * (1 - math.cos(math.pi / (2 * args.n))), "ideal two-qubit"
    else:
        raise UsageError("give --value, --n or --table3")
    p = predictability_bound(value, args.bias)
    _emit(args, writer, {"I_n": value, "source": source, "q_min": chained_nonlocal_content(value),
                         "delta": p.delta, "delta_unbiased": p.unbiased, "bias": p.bias})


def _overrides(args) -> simulate.Overrides:
    kw = {"seed": args.seed, "visibility": args.visibility, "white_fraction": args.white_fraction,
          "rate": args.rate, "duration": args.duration, "randomize_order": not args.no_shuffle}
    if args.jitter is not None:
        kw["angle_jitter"] = math.radians(args.jitter)
    return simulate.Overrides(**kw)


def cmd_simulate(args, writer: Writer) -> None:
    ov = _overrides(args)
    kw = {}
    if args.experiment == "circle":
        kw["points"] = args.points
    elif args.experiment == "chained":
        kw["n_max"] = args.nmax
    elif args.experiment == "tilted":
        if args.taus:
            kw["taus"] = args.taus
        elif not args.from_fixture:
            kw["taus"] = fixtures.load("table2").column("tau")
    table = simulate.reproduce(args.experiment, ov, **kw)

    summary = {"experiment": table.experiment, "overrides": asdict(ov), "rows": table.rows}
    if args.out:
        out = Path(args.out)
        writer.write(out / f"{table.experiment}.csv", table.to_csv())
        writer.write(out / f"{table.experiment}.json", json.dumps(summary, indent=2))
        for k, rec in enumerate(table.records):
            stem = out / "counts" / f"{table.experiment}_{k:03d}"
            writer.write(stem.with_suffix(".csv"), rec.to_csv())
            writer.write(stem.with_suffix(".json"), json.dumps(rec.sidecar(), indent=2))
        print(f"wrote {len(writer.written)} files to {out}")
    elif args.json:
        print(json.dumps(_round(summary, args.digits), indent=2))
    else:
        print(",".join(table.columns))
        for r in table.rows:
            print(",".join(_plain(_round(r[c], args.digits), args.digits) for c in table.columns))


def cmd_report(args, writer: Writer) -> None:
    checks = report.build(seed=args.seed, digits=args.digits)
    text = report.render(checks, seed=args.seed)
    if args.json:
        text = json.dumps([asdict(c) for c in checks], indent=2, ensure_ascii=False) + "\n"
    if args.out:
        writer.write(args.out, text)
        print(f"wrote {args.out}: {sum(c.passed for c in checks)}/{len(checks)} checks pass")
    else:
        sys.stdout.write(text)


# -- parser ------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--out", help="output file (directory for simulate)")
    p.add_argument("--tol", type=float, help="numerical tolerance override")
    p.add_argument("--digits", type=int, default=6, help="significant digits in printed numbers")
    p.add_argument("--config", help="JSON file whose keys mirror flag names")
    return p


def _functional_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--name", help="chsh, chsh_prime, tilted, chained, m3322, m4322, elegant")
    p.add_argument("--n", type=int, help="number of settings for chained")
    p.add_argument("--tau", type=float, help="tilt parameter for tilted")
    p.add_argument("--file", help="functional JSON file")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = _common()
    parser = argparse.ArgumentParser(prog="nonlocality", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = subs["bound"] = sub.add_parser("bound", parents=[common], help="local, L+1PR or algebraic bound")
    _functional_args(p)
    p.add_argument("--kind", choices=("local", "algebraic", "lplus1pr"), default="local")
    p.set_defaults(func=cmd_bound)

    p = subs["qmax"] = sub.add_parser("qmax", parents=[common], help="two-qubit optimum by seesaw")
    _functional_args(p)
    p.add_argument("--restriction", choices=("none", "planar", "mes"), default="none")
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iters", type=int, default=3000)
    p.add_argument("--strict", action="store_true", help="treat non-convergence as a failure")
    p.set_defaults(func=cmd_qmax)

    p = subs["epr2"] = sub.add_parser("epr2", parents=[common], help="nonlocal content q_min")
    p.add_argument("--file", help="behavior JSON file")
    p.add_argument("--counts", help="count record stem (CSV plus optional JSON sidecar)")
    p.add_argument("--ideal", choices=IDEAL_BEHAVIORS)
    p.add_argument("--n", type=int)
    p.add_argument("--full", action="store_true", help="include the decomposition")
    p.set_defaults(func=cmd_epr2)

    p = subs["chained"] = sub.add_parser("chained", parents=[common], help="q_min and predictability from I_n")
    p.add_argument("--value", type=float, help="measured I_n")
    p.add_argument("--n", type=int, help="use the ideal two-qubit I_n")
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--table3", action="store_true", help="recompute every published row")
    p.set_defaults(func=cmd_chained)

    p = subs["simulate"] = sub.add_parser("simulate", parents=[common], help="Monte Carlo experiment")
    p.add_argument("experiment", choices=simulate.EXPERIMENTS)
    p.add_argument("--points", type=int, default=180)
    p.add_argument("--nmax", type=int, default=45)
    p.add_argument("--taus", type=float, nargs="+")
    p.add_argument("--from-fixture", choices=("table2",), help="take state angles from the table")
    p.add_argument("--visibility", type=float, default=simulate.MEASURED_VISIBILITY)
    p.add_argument("--white-fraction", type=float, default=1.0)
    p.add_argument("--jitter", type=float, help="setting jitter in degrees on the Bloch sphere")
    p.add_argument("--rate", type=float, default=simulate.DEFAULT_RATE, help="coincidences per second")
    p.add_argument("--duration", type=float, help="seconds per setting pair")
    p.add_argument("--no-shuffle", action="store_true", help="acquire setting pairs in order")
    p.set_defaults(func=cmd_simulate)

    p = subs["report"] = sub.add_parser("report", parents=[common], help="Markdown comparison report")
    p.set_defaults(func=cmd_report)
    return parser, subs


def parse(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            parser.error(f"cannot read config {args.config}: {e}")
        if not isinstance(cfg, dict):
            parser.error("config must be a JSON object")
        sp = subs[args.command]
        known = {a.dest for a in sp._actions}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - known - {"config"})
        if unknown:
            parser.error(f"unknown config keys for {args.command}: {unknown}")
        # command-line flags win over the config file
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse(argv)
    except SystemExit as e:
        return int(e.code or 0)
    writer = Writer()
    try:
        args.func(args, writer)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GUARD_ERRORS as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_GUARD
    except NUMERIC_ERRORS as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError, fixtures.FixtureCorrupted) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        # remaining ValueErrors come from out-of-range flag values
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
