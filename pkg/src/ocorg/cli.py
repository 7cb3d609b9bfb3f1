"""Command-line entry point.

    ocorg run --config scenario.json [--set key=value]... [--trace out.csv] [--summary out.json]
    ocorg gen-example --seed 7 --out scenario.json

Exit codes: 0 success, 2 infeasible initialization, 3 configuration error,
4 numerical failure.
"""

import argparse
import json
import logging
import sys
import time
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from .errors import ConfigError, InfeasibleInitialization, OcorgError
from .scenario import build_scenario, dump_config, generate_example, load_config
from .sim import regret_report, run_closed_loop

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("ocorg")


def _version():
    try:
        return version("ocorg")
    except PackageNotFoundError:
        return "unknown"


def _cause_chain(exc):
    parts = []
    while exc is not None:
        where = exc.where if isinstance(exc, OcorgError) else type(exc).__name__
        parts.append(f"{where}: {exc}")
        exc = exc.__cause__
    return "\n  caused by ".join(parts)


def summarize(scenario, trace, report, runtime, export_mas=False):
    summary = report.to_dict()
    summary.update({
        "T": trace.T,
        "determination_index": scenario.mas.determination_index,
        "mas_rows": scenario.mas.set.n_rows,
        "min_alpha": float(trace.alpha.min()),
        "max_constraint_margin": float(trace.constraint_margin.max()),
        "runtime": runtime,
    })
    if export_mas:
        summary["mas"] = scenario.mas.set.to_dict()
    return summary


def cmd_run(args):
    config = load_config(args.config, args.set)
    run = config.get("run", {})
    start = time.perf_counter()
    scenario, T = build_scenario(config)
    trace = run_closed_loop(scenario, T)
    report = regret_report(scenario, trace)
    runtime = time.perf_counter() - start

    trace_path = args.trace or run.get("trace", "trace.csv")
    summary_path = args.summary or run.get("summary", "summary.json")
    trace.write_csv(trace_path)
    summary = summarize(scenario, trace, report, runtime, run.get("export_mas", False))
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, default=_json_default)
        fh.write("\n")
    log.info("T=%d regret=%.6g path_length=%.6g min_alpha=%.3g bound %s",
             T, report.regret, report.path_length, report.epsilon_hat,
             "holds" if report.bound_holds else "FAILS")
    return EXIT_OK


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def cmd_gen_example(args):
    config = generate_example(args.seed, T=args.T)
    text = dump_config(config)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="ocorg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write trace + summary")
    run.add_argument("--config", required=True)
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config entry (dotted key, JSON value)")
    run.add_argument("--trace", help="CSV trace path (default: run.trace or trace.csv)")
    run.add_argument("--summary", help="JSON summary path (default: run.summary or summary.json)")
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("gen-example", help="write a random five-state example scenario")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, help="output path, '-' for stdout")
    gen.add_argument("--T", type=int, default=1000, help="horizon written into the run block")
    gen.set_defaults(func=cmd_gen_example)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {_cause_chain(exc)}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleInitialization as exc:
        print(f"infeasible initialization: {_cause_chain(exc)}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OcorgError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {_cause_chain(exc)}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
