"""Final synthetic accuracy as the trainable budget grows: n for the spectral
adapter, r for LoRA, with matching parameter counts (n = 128 r)."""

import argparse
import sys

import numpy as np

from fourierft.cli import parallel_map
from fourierft.train import SWEEP_SEEDS, ExperimentConfig, lr_sweep


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--ranks", default="1,2,4,8")
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--lr", type=float, default=3e-2)
    args = p.parse_args(argv)

    cfg = ExperimentConfig(epochs=args.epochs)
    print("params,method,size,mean_final_accuracy,mean_final_loss")
    for r in (int(v) for v in args.ranks.split(",")):
        for method, size in (("fourier", 128 * r), ("lora", r)):
            runs = lr_sweep(method, size, SWEEP_SEEDS, [args.lr], cfg, parallel_map)[args.lr]
            print(f"{128 * r},{method},{size},{np.mean([x.final_accuracy for x in runs]):.5f},"
                  f"{np.mean([x.final_loss for x in runs]):.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
