"""Command line: ``simulate``, ``sweep`` and ``trajectory``.

Exit codes: 0 success, 1 configuration error, 2 runtime fault.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .env import ConfigError
from .harness import (
    ExperimentConfig,
    emit_csv,
    emit_json,
    load_config,
    resolve,
    run_experiment,
    summary,
)
from .policy import LmDseeParams, lmdsee_trajectory

log = logging.getLogger("nsbandit")

EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _base_config(path) -> ExperimentConfig:
    return load_config(path) if path else ExperimentConfig()


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    env = cfg.env
    if args.env is not None:
        env = dataclasses.replace(env, kind=args.env)
    if args.nu is not None:
        env = dataclasses.replace(env, nu=args.nu)
    if args.kappa is not None:
        env = dataclasses.replace(env, kappa=args.kappa)
    policy = cfg.policy
    if args.policy is not None:
        policy = dataclasses.replace(policy, name=args.policy)
    top = {}
    for flag, key in (("T", "horizon"), ("reps", "replications"), ("seed", "master_seed"),
                      ("out_csv", "out_csv"), ("out_json", "out_json")):
        value = getattr(args, flag, None)
        if value is not None:
            top[key] = value
    return dataclasses.replace(cfg, env=env, policy=policy, **top)


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def with_param(cfg: ExperimentConfig, name: str, value) -> ExperimentConfig:
    """Set a dotted config key such as ``env.nu`` or ``policy.lam``."""
    d = cfg.to_dict()
    node = d
    *parents, leaf = name.split(".")
    for p in parents:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"unknown parameter {name!r}")
        node = node[p]
    if leaf not in node:
        raise ConfigError(f"unknown parameter {name!r}")
    node[leaf] = value
    return ExperimentConfig.from_dict(d)


def _suffixed(path, param: str, value) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{param}={value}{p.suffix}"))


def _run_and_write(cfg: ExperimentConfig) -> int:
    result = run_experiment(cfg)
    if cfg.out_csv:
        emit_csv(result, cfg.out_csv)
    if cfg.out_json:
        emit_json(result, cfg.out_json)
    print(json.dumps(summary(result), sort_keys=True))
    if result.failures:
        for f in result.failures:
            log.error("replication %s: %s", f["replication"], f["error"])
        return EXIT_RUNTIME
    return 0


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(_base_config(args.config), args)
    resolve(cfg)
    return _run_and_write(cfg)


def cmd_sweep(args) -> int:
    base = _apply_overrides(_base_config(args.config), args)
    values = [v for v in args.values.split(",") if v != ""]
    if not values:
        raise ConfigError("--values is empty")
    out_csv = base.out_csv or "sweep.csv"
    out_json = base.out_json or "sweep.json"
    cfgs = []
    for raw in values:
        cfg = with_param(base, args.param, _parse_value(raw))
        cfg = dataclasses.replace(
            cfg, out_csv=_suffixed(out_csv, args.param, raw), out_json=_suffixed(out_json, args.param, raw)
        )
        resolve(cfg)
        cfgs.append(cfg)
    code = 0
    for cfg in cfgs:
        code = max(code, _run_and_write(cfg))
    return code


def cmd_trajectory(args) -> int:
    cfg = _apply_overrides(_base_config(args.config), args)
    if cfg.policy.name != "lmdsee":
        raise ConfigError("trajectory export needs policy.name = 'lmdsee'")
    r = resolve(cfg)
    params = LmDseeParams(cfg.n_arms, r["rho"], r["a"], r["b"], r["l"], r["gamma"])
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "phase", "t_start", "t_end"])
        for ph in lmdsee_trajectory(params, cfg.horizon):
            w.writerow(list(ph))
    return 0


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config (defaults used if omitted)")
    p.add_argument("--policy", choices=["lmdsee", "swucbsharp", "ucb", "dsee", "random"])
    p.add_argument("--env", choices=["abrupt", "slow"])
    p.add_argument("--nu", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--T", type=int, help="horizon")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsbandit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment")
    _common(sim)
    sim.add_argument("--out-csv")
    sim.add_argument("--out-json")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="one experiment per value of a config parameter")
    _common(sw)
    sw.add_argument("--param", required=True, help="dotted key, e.g. env.nu or policy.lam")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--out-csv")
    sw.add_argument("--out-json")
    sw.set_defaults(func=cmd_sweep)

    tr = sub.add_parser("trajectory", help="export the LM-DSEE phase schedule")
    _common(tr)
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_trajectory)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"runtime fault: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
