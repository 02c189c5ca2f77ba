"""Final regret of SW-UCB# against the window scale lambda, abrupt environment.

    python scripts/window_sweep.py --nu 0.2 --lams 2,4,8,12.3,20 --T 20000 --reps 5
"""

import argparse

from nsbandit.harness import EnvSpec, ExperimentConfig, PolicySpec, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nu", type=float, default=0.2)
    ap.add_argument("--lams", default="2,4,8,12.3,20")
    ap.add_argument("--T", type=int, default=20_000)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("lambda,final_mean_regret,final_std_regret")
    for lam in map(float, args.lams.split(",")):
        cfg = ExperimentConfig(
            env=EnvSpec(kind="abrupt", nu=args.nu),
            policy=PolicySpec(name="swucbsharp", lam=lam),
            horizon=args.T,
            replications=args.reps,
            master_seed=args.seed,
        )
        agg = run_experiment(cfg).aggregate
        print(f"{lam},{agg.mean[-1]:.3f},{agg.std[-1]:.3f}", flush=True)


if __name__ == "__main__":
    main()
