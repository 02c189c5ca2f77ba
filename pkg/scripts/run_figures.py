"""Regret and bound-ratio curves for both policies in both environments.

Writes one CSV/JSON pair per (environment, parameter, policy) into --out-dir,
plus a small summary table on stdout. Defaults are the desk-scale settings
(T = 1e5, M = 20); use --T/--reps to shrink for a quick look.
"""

import argparse
import json
from pathlib import Path

from nsbandit.harness import EnvSpec, ExperimentConfig, PolicySpec, emit_csv, emit_json, run_experiment, summary

SETTINGS = [
    ("abrupt", 0.2),
    ("abrupt", 0.4),
    ("slow", 0.5),
    ("slow", 1.0),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--T", type=int, default=100_000)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--policies", default="lmdsee,swucbsharp")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for kind, value in SETTINGS:
        env = EnvSpec(kind=kind, nu=value) if kind == "abrupt" else EnvSpec(kind=kind, kappa=value)
        for name in args.policies.split(","):
            stem = f"{kind}_{value}_{name}"
            cfg = ExperimentConfig(
                env=env,
                policy=PolicySpec(name=name),
                horizon=args.T,
                replications=args.reps,
                master_seed=args.seed,
                out_csv=str(out / f"{stem}.csv"),
                out_json=str(out / f"{stem}.json"),
            )
            res = run_experiment(cfg)
            emit_csv(res, cfg.out_csv)
            emit_json(res, cfg.out_json)
            s = summary(res)
            rows.append((stem, s["final_mean_regret"], s["final_std_regret"], s["final_bound_ratio"]))
            print(json.dumps({"run": stem, **s}, sort_keys=True), flush=True)

    print(f"\n{'run':<28}{'R(T)':>12}{'sd':>10}{'ratio':>10}")
    for stem, r, sd, ratio in rows:
        print(f"{stem:<28}{r:>12.1f}{sd:>10.1f}{ratio:>10.4f}")


if __name__ == "__main__":
    main()
