"""Command-line entry point.

Subcommands, each taking a single config-file argument:

    gpbench run <config>       full benchmark scenario -> CSV
    gpbench simulate <config>  write a simulated dataset CSV
    gpbench fit <config>       parameter estimation, prints estimates
    gpbench predict <config>   prediction scores for the configured splits

Exit codes: 0 success, 1 config error, 2 partial failures present.
"""

import argparse
import sys

from .bench import (ConfigError, Scenario, _dataset_for_rep, parse_config,
                    run_scenario, scenario_from_config)
from .simulate import write_csv


def _load(path):
    return scenario_from_config(parse_config(path))


def _cmd_run(path):
    sc = _load(path)
    return run_scenario(sc)


def _cmd_simulate(path):
    cfg = parse_config(path)
    sc = scenario_from_config({**cfg, "methods.exact": "true"}) \
        if not _has_methods(cfg) else scenario_from_config(cfg)
    data, _, _ = _dataset_for_rep(sc, 0)
    out = cfg.get("run.output", "dataset.csv")
    write_csv(data, out)
    print(f"wrote {len(data.y)} rows to {out}")
    return 0


def _has_methods(cfg):
    return any(k.startswith("methods.") for k in cfg)


def _single_task_scenario(path, tasks):
    cfg = parse_config(path)
    cfg["tasks"] = ",".join(tasks)
    return scenario_from_config(cfg)


def _cmd_fit(path):
    sc = _single_task_scenario(path, ["estimate"])
    return run_scenario(sc)


def _cmd_predict(path):
    sc = _single_task_scenario(
        path, ["predict_train", "predict_interp", "predict_extrap"])
    return run_scenario(sc)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="gpbench",
        description="Gaussian-process approximation benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("run", "execute a benchmark scenario"),
            ("simulate", "write a simulated dataset CSV"),
            ("fit", "estimate covariance parameters"),
            ("predict", "score predictions on the configured splits")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a key = value config file")
    args = parser.parse_args(argv)

    handler = {"run": _cmd_run, "simulate": _cmd_simulate,
               "fit": _cmd_fit, "predict": _cmd_predict}[args.command]
    try:
        return handler(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
