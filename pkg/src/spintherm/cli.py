"""Experiment runner.

Subcommands:

* ``run --config <path> [--seed <u64>] [--out <dir>] [--jobs <n>]`` —
  execute the configured experiment(s), write reports, exit 0 when every
  assertion passed, 1 on assertion failure, 2 on usage or config errors.
* ``list`` — registered experiments with their topics.
* ``validate --config <path>`` — schema-check a config without running.

Config files are JSON with one flat, documented key set; unknown keys are
hard errors (a silent typo would corrupt physics parameters). The
``SPINTHERM_OUT`` environment variable supplies the default output
directory. Result tables are deterministic given (config, seed); wall-clock
metadata goes to a separate file so reports stay byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import ConfigError
from .experiments import REGISTRY, experiment_defaults, run_experiment

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2

_SCHEMA_TYPES = {
    "experiment": (str, list),
    "seed": int,
    "out": str,
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def validate_config(cfg: dict) -> list:
    """Return the experiment names; raise ConfigError on any schema problem."""
    if "experiment" not in cfg:
        raise ConfigError("missing required key 'experiment'")
    names = cfg["experiment"]
    if isinstance(names, str):
        names = [names]
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise ConfigError("'experiment' must be a name or list of names")
    for name in names:
        if name not in REGISTRY:
            known = ", ".join(sorted(REGISTRY))
            raise ConfigError(f"unknown experiment {name!r}; known: {known}")
    if "seed" not in cfg:
        raise ConfigError("missing required key 'seed'")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("'seed' must be a nonnegative integer")
    allowed = set(_SCHEMA_TYPES)
    for name in names:
        allowed |= set(experiment_defaults(name))
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    for key, value in cfg.items():
        if key in _SCHEMA_TYPES:
            if not isinstance(value, _SCHEMA_TYPES[key]):
                raise ConfigError(f"{key!r} has wrong type")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key!r} must be numeric")
    return names


def config_roundtrip(cfg: dict) -> dict:
    """parse -> serialize -> parse identity transform."""
    return json.loads(json.dumps(cfg, sort_keys=True))


def _write_csv(path: Path, table) -> None:
    lines = [",".join(table.columns)]
    for row in table.rows:
        lines.append(",".join(str(x) for x in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def run_config(cfg: dict, out_dir, jobs: int = 1) -> int:
    names = validate_config(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()

    def _one(name):
        t0 = time.time()
        result = run_experiment(name, cfg)
        return name, result, time.time() - t0

    if jobs > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_one, names))
    else:
        outcomes = [_one(n) for n in names]

    report = {"config": config_roundtrip(cfg), "experiments": {}}
    timing = {}
    all_ok = True
    for name, result, elapsed in outcomes:
        rows = []
        for a in result.assertions:
            if not a.claim:
                raise ConfigError(f"assertion {a.name!r} carries no claim text")
            rows.append(
                {"name": a.name, "claim": a.claim, "passed": a.passed, "detail": a.detail}
            )
            status = "PASS" if a.passed else "FAIL"
            print(f"[{status}] {name}/{a.name}: {a.detail}")
            all_ok &= a.passed
        report["experiments"][name] = {
            "assertions": rows,
            "tables": [t.name for t in result.tables],
        }
        timing[name] = round(elapsed, 3)
        for t in result.tables:
            _write_csv(out / f"{name}__{t.name}.csv", t)
    (out / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", newline="\n"
    )
    (out / "run_meta.json").write_text(
        json.dumps(
            {"wall_clock_s": round(time.time() - started, 3), "per_experiment_s": timing},
            sort_keys=True,
            indent=2,
        )
        + "\n",
        newline="\n",
    )
    return EXIT_OK if all_ok else EXIT_ASSERTION


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="spintherm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run configured experiments")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--jobs", type=int, default=1)

    sub.add_parser("list", help="list registered experiments")

    p_val = sub.add_parser("validate", help="schema-check a config")
    p_val.add_argument("--config", required=True)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0

    if args.command == "list":
        for name in sorted(REGISTRY):
            print(f"{name}: {REGISTRY[name].topic}")
        return EXIT_OK

    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            validate_config(cfg)
            print("config ok")
            return EXIT_OK
        if args.seed is not None:
            cfg["seed"] = args.seed
        out_dir = args.out or os.environ.get("SPINTHERM_OUT", "spintherm-out")
        return run_config(cfg, out_dir, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
