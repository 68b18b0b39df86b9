"""Command-line front end.

Exit codes: 0 success, 2 input or schema error, 3 domain or precondition
error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from .cost_model import Scenario, long_run_cost
from .errors import DomainError, NumericError, PreconditionError, SchemaError
from .fleet import FleetSpec, amortized_connection_comparison, independent_optima, uniform_policy
from .optimizer import optimal_interval, sweep_lambda, sweep_refresh_cost
from .random_schedule import Uniform, compare_random_vs_fixed, distribution_from_dict
from .simulator import FixedSchedule, RandomSchedule, SimConfig, schedule_from_dict, simulate

log = logging.getLogger("freshopt")

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3, 4


@dataclass(frozen=True)
class ScenarioFile:
    """Parsed scenario document; every part is optional except where a command needs it."""

    scenario: Scenario | None
    schedule: Any
    sim: dict[str, Any]
    fleet: FleetSpec | None


def _line_of(text: str, key: str, start: int = 0) -> int | None:
    pos = text.find(f'"{key}"', start)
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def _locate(text: str, section: str | None, exc: Exception) -> int | None:
    """Best-effort source line for a validation error inside ``section``."""
    start = 0
    if section is not None:
        pos = text.find(f'"{section}"')
        start = max(pos, 0)
    msg = str(exc)
    candidates = re.findall(r"'([A-Za-z_]+)'", msg) + re.findall(r"^([A-Za-z_]+) ", msg)
    names = {"lam": "lambda", "mean": "mean"}
    for cand in candidates:
        line = _line_of(text, names.get(cand, cand), start)
        if line is not None:
            return line
    return _line_of(text, section, 0) if section else None


def load_scenario_file(path: str) -> ScenarioFile:
    """Read and validate a scenario document.

    The file is a Scenario object, optionally extended with ``schedule``,
    ``sim`` ({"seed", "cycles", "block_size"}) and ``fleet``. A fleet-only
    file may put ``elements``/``mesh`` at the top level.

    Raises:
        SchemaError: unreadable file, malformed JSON, or invalid contents; the
            message carries the source line where it can be found.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
    if not isinstance(doc, dict):
        raise SchemaError("scenario file must contain a JSON object", 1)

    def parse(section: str | None, fn, value):
        try:
            return fn(value)
        except SchemaError as exc:
            if exc.line is not None:
                raise
            raise SchemaError(str(exc), _locate(text, section, exc)) from None
        except DomainError as exc:
            raise SchemaError(str(exc), _locate(text, section, exc)) from None

    scn_doc = doc.get("scenario", doc if "lambda" in doc else None)
    scenario = None
    if scn_doc is not None:
        scenario = parse("scenario" if "scenario" in doc else None, Scenario.from_dict, scn_doc)
    schedule = None
    if "schedule" in doc:
        schedule = parse("schedule", schedule_from_dict, doc["schedule"])
    sim = doc.get("sim", {})
    if not isinstance(sim, dict):
        raise SchemaError("sim must be an object", _line_of(text, "sim"))
    for key in ("seed", "cycles", "block_size"):
        if key in sim and (not isinstance(sim[key], int) or isinstance(sim[key], bool)):
            raise SchemaError(f"sim.{key} must be an integer", _line_of(text, key))
    fleet = None
    if "fleet" in doc:
        fleet = parse("fleet", FleetSpec.from_dict, doc["fleet"])
    elif "elements" in doc or "mesh" in doc:
        fleet = parse(None, FleetSpec.from_dict, doc)
    return ScenarioFile(scenario, schedule, sim, fleet)


def _require_scenario(sf: ScenarioFile) -> Scenario:
    if sf.scenario is None:
        raise SchemaError("file has no scenario (lambda, refresh_cost, age_cost)")
    return sf.scenario


def _dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=True)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _emit(args, rows: list[dict[str, Any]], single: bool = False) -> None:
    if args.output == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row.values()])
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(_dumps(rows[0] if single else rows) + "\n")


def _parse_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise SchemaError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _parse_dist(text: str):
    """Distribution from inline JSON or from a file holding it."""
    raw = text
    if not text.lstrip().startswith("{"):
        try:
            with open(text, encoding="utf-8") as fh:
                raw = fh.read()
        except OSError as exc:
            raise SchemaError(f"cannot read distribution file {text}: {exc.strerror}") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid distribution JSON: {exc.msg}", exc.lineno) from None
    try:
        return distribution_from_dict(doc)
    except DomainError as exc:
        raise SchemaError(str(exc)) from None


def cmd_optimize(args) -> int:
    scn = _require_scenario(load_scenario_file(args.scenario))
    policy = optimal_interval(scn, force_numeric=args.force_numeric)
    log.info("optimum found by %s", policy.method.value)
    _emit(args, [policy.to_dict()], single=True)
    return EXIT_OK


def cmd_curve(args) -> int:
    if not (0.0 < args.t_min < args.t_max) or not math.isfinite(args.t_max):
        raise SchemaError(f"need 0 < t-min < t-max, got {args.t_min} and {args.t_max}")
    if args.points < 2:
        raise SchemaError(f"--points must be >= 2, got {args.points}")
    scn = _require_scenario(load_scenario_file(args.scenario))
    grid = np.geomspace(args.t_min, args.t_max, args.points)
    grid[0], grid[-1] = args.t_min, args.t_max
    rows = []
    for T in grid:
        rep = long_run_cost(scn, float(T))
        rows.append(
            {
                "T": rep.interval,
                "total": rep.total,
                "refresh_component": rep.refresh_component,
                "age_component": rep.age_component,
            }
        )
    _emit(args, rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sf = load_scenario_file(args.scenario)
    scn = _require_scenario(sf)
    seed = args.seed if args.seed is not None else sf.sim.get("seed")
    if seed is None:
        raise SchemaError("a seed is required (--seed or sim.seed)")
    cycles = args.cycles if args.cycles is not None else sf.sim.get("cycles", 100_000)
    if args.interval is not None:
        schedule = FixedSchedule(args.interval)
    elif args.dist is not None:
        schedule = RandomSchedule(_parse_dist(args.dist))
    elif sf.schedule is not None:
        schedule = sf.schedule
    else:
        schedule = FixedSchedule(optimal_interval(scn).t_star)
        log.info("no schedule given; simulating the optimal fixed interval %r", schedule.interval)
    kw = {}
    if "block_size" in sf.sim:
        kw["block_size"] = sf.sim["block_size"]
    try:
        cfg = SimConfig(seed=seed, n_cycles=cycles, schedule=schedule, **kw)
    except DomainError as exc:
        raise SchemaError(str(exc)) from None
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            result = simulate(scn, cfg, threads=args.threads, trace=fh)
    else:
        result = simulate(scn, cfg, threads=args.threads)
    out = result.to_dict()
    out["seed"] = seed
    out["schedule"] = schedule.to_dict()
    if args.output == "csv":
        flat = {k: v for k, v in out.items() if not isinstance(v, dict)}
        flat.update({f"breakdown_{k}": v for k, v in out["breakdown"].items()})
        _emit(args, [flat], single=True)
    else:
        sys.stdout.write(_dumps(out) + "\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    scn = _require_scenario(load_scenario_file(args.scenario))
    if args.uniform_deltas is not None:
        center = args.center if args.center is not None else optimal_interval(scn).t_star
        rows = []
        for delta in _parse_list(args.uniform_deltas):
            res = compare_random_vs_fixed(scn, Uniform.around(center, delta))
            rows.append(
                {"delta": delta, "c_h": res.c_h.total, "c_fixed": res.c_fixed.total, "gap": res.gap}
            )
        _emit(args, rows)
        return EXIT_OK
    if args.dist is None:
        raise SchemaError("compare needs --dist or --uniform-deltas")
    res = compare_random_vs_fixed(scn, _parse_dist(args.dist))
    row = {
        "c_h": res.c_h.total,
        "c_fixed": res.c_fixed.total,
        "gap": res.gap,
        "mean_interval": res.c_fixed.interval,
    }
    _emit(args, [row], single=True)
    return EXIT_OK


def cmd_fleet(args) -> int:
    sf = load_scenario_file(args.scenario)
    if sf.fleet is None:
        raise SchemaError("file has no fleet (fleet, elements or mesh)")
    fs = sf.fleet
    t_star, total = uniform_policy(fs)
    uniform, non_uniform = amortized_connection_comparison(fs)
    out = {
        "t_star": t_star,
        "total_cost": total,
        "amortized_conn": {"uniform": uniform, "non_uniform": non_uniform},
        "per_element_t_star": [p.t_star for p in independent_optima(fs)],
    }
    if args.output == "csv":
        _emit(
            args,
            [
                {
                    "t_star": t_star,
                    "total_cost": total,
                    "amortized_conn_uniform": uniform,
                    "amortized_conn_non_uniform": non_uniform,
                }
            ],
            single=True,
        )
    else:
        sys.stdout.write(_dumps(out) + "\n")
    return EXIT_OK


def _cmd_sweep(args, name: str, fn) -> int:
    scn = _require_scenario(load_scenario_file(args.scenario))
    rows = []
    for value, policy in fn(scn, _parse_list(args.values)):
        row = {name: value}
        row.update(policy.to_dict())
        rows.append(row)
    _emit(args, rows)
    return EXIT_OK


def cmd_sweep_lambda(args) -> int:
    return _cmd_sweep(args, "lambda", sweep_lambda)


def cmd_sweep_cost(args) -> int:
    return _cmd_sweep(args, "refresh_cost", sweep_refresh_cost)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freshopt", description="Optimal cache refresh intervals under Poisson updates."
    )
    parser.add_argument("--output", choices=("json", "csv"), help="default: csv for curve, else json")
    parser.add_argument("--quiet", action="store_true", help="suppress informational messages")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="optimal refresh interval")
    p.add_argument("scenario")
    p.add_argument("--force-numeric", action="store_true", help="skip the linear closed form")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("curve", help="cost curve on a log-spaced grid")
    p.add_argument("scenario")
    p.add_argument("--t-min", type=float, required=True)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--points", type=int, default=50)
    p.set_defaults(func=cmd_curve, output_default="csv")

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the long-run cost")
    p.add_argument("scenario")
    p.add_argument("--cycles", type=int)
    p.add_argument("--seed", type=int)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--interval", type=float, help="fixed refresh interval")
    group.add_argument("--dist", help="random interval distribution (JSON or file)")
    p.add_argument("--threads", type=int, help="worker threads (default FRESHOPT_THREADS)")
    p.add_argument("--trace", help="write per-cycle CSV trace to this file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="random-interval cost vs the fixed interval of equal mean")
    p.add_argument("scenario")
    p.add_argument("--dist", help="interval distribution (JSON or file)")
    p.add_argument("--uniform-deltas", help="comma-separated half-widths for U(T-d, T+d)")
    p.add_argument("--center", type=float, help="T for --uniform-deltas (default: optimum)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("fleet", help="uniform interval for a fleet of elements")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_fleet)

    for name, func, help_ in (
        ("sweep-lambda", cmd_sweep_lambda, "optimum across update rates"),
        ("sweep-cost", cmd_sweep_cost, "optimum across refresh costs"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("scenario")
        p.add_argument("--values", required=True, help="comma-separated ascending values")
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.output is None:
        args.output = getattr(args, "output_default", "json")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("freshopt: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"freshopt: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PreconditionError, DomainError) as exc:
        print(f"freshopt: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericError as exc:
        print(f"freshopt: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
