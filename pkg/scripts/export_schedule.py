"""Print the LM-DSEE epoch table (exploration length, epoch length) for a config."""

import argparse

from nsbandit.harness import ExperimentConfig, load_config, resolve
from nsbandit.policy import LmDseeParams, epoch_length, exploration_length


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--epochs", type=int, default=10)
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    r = resolve(cfg)
    p = LmDseeParams(cfg.n_arms, r["rho"], r["a"], r["b"], r["l"], r["gamma"])
    print(f"rho={p.rho:.4f} l={p.l} gamma={'slow rule' if p.gamma is None else f'{p.gamma:.4f}'}")
    print("epoch,L,epoch_length,exploit_length")
    t = 0
    for k in range(1, args.epochs + 1):
        L, n = exploration_length(k, p), epoch_length(k, p)
        print(f"{k},{L},{n},{max(0, n - p.n_arms * L)}")
        t += n
    print(f"# {args.epochs} epochs cover {t} steps")


if __name__ == "__main__":
    main()
