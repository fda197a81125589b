"""Fourier vs orthogonal vs random basis at matched n, each at its best lr."""

import argparse
import sys

import numpy as np

from fourierft.cli import parallel_map
from fourierft.train import LR_GRID, SWEEP_SEEDS, ExperimentConfig, best_lr, lr_sweep


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--train-outer", action="store_true")
    args = p.parse_args(argv)

    cfg = ExperimentConfig(epochs=args.epochs, train_outer=args.train_outer)
    print("basis,lr,mean_final_accuracy,mean_final_loss,mean_first_perfect_epoch")
    for kind in ("fourier", "orthogonal", "random"):
        sweep = lr_sweep(kind, args.n, SWEEP_SEEDS, LR_GRID, cfg, parallel_map)
        lr = best_lr(sweep)
        runs = sweep[lr]
        epochs = [r.first_perfect_epoch for r in runs if r.first_perfect_epoch is not None]
        print(f"{kind},{lr:g},{np.mean([r.final_accuracy for r in runs]):.5f},"
              f"{np.mean([r.final_loss for r in runs]):.3e},{np.mean(epochs) if epochs else float('nan'):.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
