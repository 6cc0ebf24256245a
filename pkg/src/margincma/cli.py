"""Command-line experiment runner.

Two subcommands: `run` executes a seeded trial batch and writes a per-trial
CSV (plus a metadata sidecar and optional per-trial trace CSVs); `summarize`
aggregates a per-trial CSV into the plot-ready summary format. A JSON config
file may supply any `run` field; explicit command-line options override it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    ALGORITHM_NAMES,
    ConfigError,
    RunConfig,
    aggregate,
    read_records,
    run_batch,
    write_metadata,
    write_records,
    write_summary,
    write_trace,
)
from .benchmarks import PROBLEM_NAMES

_RUN_DEFAULTS = {
    "n_co": None,
    "trials": 50,
    "seed": 1,
    "budget_mult": 1e5,
    "target": 1e-10,
    "eig_floor": 1e-30,
    "jobs": 1,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="margincma",
        description="Benchmark harness for margin-corrected CMA-ES optimizers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch of seeded trials")
    run.add_argument("--config", type=Path, help="JSON file with run fields")
    run.add_argument("--algo", choices=ALGORITHM_NAMES)
    run.add_argument("--problem", choices=PROBLEM_NAMES)
    run.add_argument("--dim", type=int)
    run.add_argument("--n-co", type=int, dest="n_co")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--budget-mult", type=float, dest="budget_mult")
    run.add_argument("--target", type=float)
    run.add_argument("--eig-floor", type=float, dest="eig_floor")
    run.add_argument("--no-postprocess", action="store_true")
    run.add_argument("--ablate-mean-v", action="store_true", dest="ablate_mean_v")
    run.add_argument("--trace", action="store_true")
    run.add_argument("--out", type=Path)
    run.add_argument("--jobs", type=int)

    summarize = sub.add_parser("summarize", help="aggregate a per-trial CSV")
    summarize.add_argument("--in", type=Path, dest="input", required=True)
    summarize.add_argument("--out", type=Path, required=True)
    return parser


def _merge_run_options(args: argparse.Namespace) -> tuple[RunConfig, Path]:
    file_options = {}
    if args.config is not None:
        file_options = json.loads(args.config.read_text())

    def pick(name, default):
        cli_value = getattr(args, name, None)
        if cli_value is not None:
            return cli_value
        return file_options.get(name, default)

    for required in ("algo", "problem", "dim"):
        if pick(required, None) is None:
            raise ConfigError(f"missing required option --{required}")
    out = pick("out", None)
    if out is None:
        raise ConfigError("missing required option --out")

    config = RunConfig(
        algo=pick("algo", None),
        problem=pick("problem", None),
        dim=int(pick("dim", None)),
        n_co=pick("n_co", _RUN_DEFAULTS["n_co"]),
        trials=int(pick("trials", _RUN_DEFAULTS["trials"])),
        base_seed=int(pick("seed", _RUN_DEFAULTS["seed"])),
        budget_mult=float(pick("budget_mult", _RUN_DEFAULTS["budget_mult"])),
        target=float(pick("target", _RUN_DEFAULTS["target"])),
        eig_floor=float(pick("eig_floor", _RUN_DEFAULTS["eig_floor"])),
        postprocess=not (args.no_postprocess or file_options.get("no_postprocess", False)),
        ablate_mean_v=args.ablate_mean_v or file_options.get("ablate_mean_v", False),
        trace=args.trace or file_options.get("trace", False),
        jobs=int(pick("jobs", _RUN_DEFAULTS["jobs"])),
    )
    return config, Path(out)


def _cmd_run(args: argparse.Namespace) -> int:
    config, out = _merge_run_options(args)
    out.parent.mkdir(parents=True, exist_ok=True)
    records = run_batch(config)
    write_records(out, records)
    write_metadata(out.with_suffix(out.suffix + ".meta.json"), config)
    if config.trace:
        for record in records:
            if record.trace is not None:
                write_trace(out.with_suffix(f".trace.{record.trial}.csv"), record)
    successes = sum(r.success for r in records)
    print(
        f"{config.algo} on {config.problem} dim={config.dim}: "
        f"{successes}/{config.trials} successful trials -> {out}"
    )
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    records = read_records(args.input)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_summary(args.out, aggregate(records))
    print(f"summary of {len(records)} records -> {args.out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_summarize(args)
    except (ConfigError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
