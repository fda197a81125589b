"""``fourierft`` command line.

Exit codes: 0 success, 1 runtime or check failure, 2 usage error.  Every
experiment command writes its outputs under ``--out`` together with a
``config.json`` sidecar; only the sidecar carries a timestamp.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .adapter import merge as merge_adapter
from .budget import PRESETS, UnknownPresetError, budget, compare_reference, format_bytes
from .checkpoint import AdapterConfig, CheckpointError, load, read_raw_matrix, save, write_raw_matrix
from .gradcheck import fourier_gradcheck, model_gradcheck
from .sampling import NO_BIAS, BiasSpec, bandpass_probability, sample_entries
from .train import (
    LR_GRID,
    SWEEP_SEEDS,
    DivergenceError,
    ExperimentConfig,
    best_lr,
    lr_sweep,
    run_synthetic,
)

DEFAULT_SEED = 2024
DEFAULT_LR = 3e-2
GRADCHECK_LIMIT = 1e-4


class UsageError(Exception):
    pass


def parallel_map(fn, items):
    """Ordered map over independent runs, capped by ``SPFT_THREADS``."""
    items = list(items)
    workers = int(os.environ.get("SPFT_THREADS", os.cpu_count() or 1))
    workers = max(1, min(workers, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def parse_shape(text: str) -> tuple[int, int]:
    try:
        d1, d2 = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"shape must look like 64x64, got {text!r}") from None
    if d1 < 1 or d2 < 1:
        raise argparse.ArgumentTypeError("shape dims must be >= 1")
    return d1, d2


def parse_list(conv):
    def parse(text: str):
        try:
            return [conv(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    return parse


def _bias(args) -> BiasSpec:
    if getattr(args, "f_c", None) is None:
        return NO_BIAS
    return BiasSpec.bandpass(args.f_c, args.bandwidth)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jsonable(v):
    if isinstance(v, BiasSpec):
        return asdict(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Path):
        return str(v)
    return v


def write_sidecar(out: Path, args, **extra) -> None:
    config = {k: _jsonable(v) for k, v in vars(args).items() if k != "func"}
    config.update({k: _jsonable(v) for k, v in extra.items()})
    config["version"] = __version__
    config["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- budget

def cmd_budget(args) -> int:
    if args.reference:
        rows = []
        for c in compare_reference():
            r = c.report
            rows.append([r.preset, r.method, r.size, r.trainable_params, c.printed_params, r.bytes,
                         c.printed_bytes, "yes" if c.matches else "no", c.note])
        header = ["preset", "method", "size", "params", "printed_params", "bytes", "printed_bytes", "match", "note"]
        if args.format == "csv":
            sys.stdout.write(_csv_text(header, rows))
        else:
            for row in rows:
                line = f"{row[0]:<14} {row[1]:<8} {row[2]:>6} {row[3]:>10} (printed {row[4]:>6}) {row[7]}"
                print(line + (f"  NOTE: {row[8]}" if row[8] else ""))
        return 0

    if (args.lora_r is None) == (args.fourier_n is None):
        raise UsageError("give exactly one of --lora-r or --fourier-n (or --reference)")
    if (args.d is None) != (args.layers is None):
        raise UsageError("--d and --layers go together")
    if args.preset is None and args.d is None:
        presets = list(PRESETS)
    else:
        presets = [args.preset]
    method_kw = {"lora_r": args.lora_r} if args.lora_r is not None else {"fourier_n": args.fourier_n}
    reports = [budget(p, d=args.d, layers=args.layers, **method_kw) for p in presets]

    if args.format == "csv":
        rows = [[r.preset or "custom", r.d, r.layers, r.method, r.size, r.trainable_params, r.bytes,
                 r.params_with_entries] for r in reports]
        sys.stdout.write(_csv_text(["preset", "d", "layers", "method", "size", "params", "bytes",
                                    "params_with_entries"], rows))
        return 0
    for r in reports:
        label = r.preset or f"d={r.d} L_t={r.layers}"
        tag = f"r={r.size}" if r.method == "lora" else f"n={r.size}"
        line = f"{label} {r.method} {tag}: {r.describe()}"
        if r.method == "fourier":
            line += (f" (coefficients only); {r.params_with_entries} params, "
                     f"{format_bytes(4 * r.params_with_entries)} with explicit entries")
        print(line)
    return 0


# ---------------------------------------------------------------- training

def _experiment_config(args, **over) -> ExperimentConfig:
    cfg = ExperimentConfig(
        epochs=args.epochs,
        optimizer=args.optimizer,
        alpha=args.alpha,
        base=args.base,
        train_outer=args.train_outer,
        zero_init=args.zero_init,
        bias=_bias(args),
    )
    return replace(cfg, **over)


def _size(args) -> int:
    if args.method == "lora":
        if args.r is None:
            raise UsageError("--method lora needs --r")
        return args.r
    if args.n is None:
        raise UsageError(f"--method {args.method} needs --n")
    return args.n


def cmd_train_synthetic(args) -> int:
    out = _out_dir(args)
    size = _size(args)
    cfg = _experiment_config(args)
    lr = args.lr
    sweep_summary = None
    if args.sweep_lr:
        sweep = lr_sweep(args.method, size, [args.seed], LR_GRID, cfg, parallel_map)
        lr = best_lr(sweep)
        sweep_summary = {str(k): v[0].final_accuracy for k, v in sweep.items()}
    try:
        result, log, model, data = run_synthetic(args.method, size, args.seed, lr, cfg)
    except DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 1
    (out / "log.csv").write_text(log.to_csv())
    (out / "dataset.csv").write_text(data.to_csv())
    method = {"fourier": "fourier", "lora": "lora"}.get(args.method, "general-basis")
    alpha = model.adapter.alpha_lora if args.method == "lora" else model.adapter.alpha
    adapter_cfg = AdapterConfig(method, size, alpha, args.seed, cfg.bias,
                                args.method if method == "general-basis" else "fourier")
    save([("hidden", model.adapter)], adapter_cfg, out / "adapter.spft")
    write_sidecar(out, args, resolved_lr=lr, adapter_params=result.adapter_params, lr_sweep=sweep_summary,
                  wall_clock=log.wall_clock)
    reached = result.first_perfect_epoch
    print(f"{args.method} size={size} lr={lr:g}: final accuracy {result.final_accuracy:.4f}, "
          f"final loss {result.final_loss:.6f}, adapter params {result.adapter_params}, "
          f"first epoch at 100%: {reached if reached is not None else 'never'}")
    return 0


def _run_rows(results):
    return [[r.method, r.size, r.seed, f"{r.lr:g}", repr(r.final_accuracy), repr(r.final_loss),
             "" if r.first_perfect_epoch is None else r.first_perfect_epoch] for r in results]


RUN_HEADER = ["method", "size", "seed", "lr", "final_accuracy", "final_loss", "first_perfect_epoch"]


def cmd_ablate_basis(args) -> int:
    out = _out_dir(args)
    cfg = _experiment_config(args)
    lrs = LR_GRID if args.sweep_lr else [args.lr]
    rows, summary = [], []
    for kind in ("fourier", "orthogonal", "random"):
        sweep = lr_sweep(kind, args.n, args.seeds, lrs, cfg, parallel_map)
        lr = best_lr(sweep)
        rows += _run_rows(sweep[lr])
        acc = float(np.mean([r.final_accuracy for r in sweep[lr]]))
        summary.append([kind, args.n, f"{lr:g}", len(args.seeds), repr(acc)])
        print(f"{kind:<10} n={args.n} lr={lr:g} mean final accuracy {acc:.4f}")
    (out / "ablation.csv").write_text(_csv_text(RUN_HEADER, rows))
    (out / "ablation_summary.csv").write_text(
        _csv_text(["basis", "n", "lr", "seeds", "mean_final_accuracy"], summary))
    write_sidecar(out, args)
    return 0


def cmd_sweep_bias(args) -> int:
    out = _out_dir(args)
    rows = []
    for label in args.f_c_values:
        bias = NO_BIAS if label == "none" else BiasSpec.bandpass(float(label), args.bandwidth)
        cfg = replace(_experiment_config(args), bias=bias)
        results = parallel_map(_bias_job, [(args.method, args.n, s, args.lr, cfg) for s in args.seeds])
        acc = float(np.mean([r.final_accuracy for r in results]))
        loss = float(np.mean([r.final_loss for r in results]))
        rows.append([label, args.bandwidth if label != "none" else "", len(args.seeds), repr(acc), repr(loss)])
        print(f"f_c={label:<6} mean final accuracy {acc:.4f}")
    (out / "bias_sweep.csv").write_text(
        _csv_text(["f_c", "bandwidth", "seeds", "mean_final_accuracy", "mean_final_loss"], rows))
    write_sidecar(out, args)
    return 0


def _bias_job(job):
    return run_synthetic(*job)[0]


# ---------------------------------------------------------------- utilities

def cmd_gradcheck(args) -> int:
    d1, d2 = args.shape
    n = min(args.n, d1 * d2)
    err = fourier_gradcheck(d1, d2, n, args.batch, args.instances, args.seed, args.h, args.wrong_sign)
    worst = err
    print(f"fourier_grad_coeffs {d1}x{d2} n={n}: max rel err {err:.3e}")
    if not args.skip_model:
        for method, size in (("fourier", 32), ("lora", 2), ("orthogonal", 32), ("random", 32)):
            errs = model_gradcheck(method, size, seed=args.seed, h=args.h)
            e = max(errs.values())
            worst = max(worst, e)
            print(f"toy model ({method}): max rel err {e:.3e}")
    ok = worst <= GRADCHECK_LIMIT
    print(f"{'PASS' if ok else 'FAIL'}: max rel err {worst:.3e} (limit {GRADCHECK_LIMIT:g})")
    return 0 if ok else 1


def write_pgm(path: Path, m: np.ndarray) -> None:
    top = m.max()
    scaled = np.zeros(m.shape) if top <= 0 else m / top
    pixels = np.clip(np.rint(scaled * 255), 0, 255).astype(np.uint8)
    header = f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + pixels.tobytes())


def cmd_sample_entries(args) -> int:
    out = _out_dir(args)
    d1, d2 = args.shape
    bias = _bias(args)
    entries = sample_entries(args.seed, d1, d2, args.n, bias)
    (out / "entries.csv").write_text(_csv_text(["j", "k"], zip(entries.rows.tolist(), entries.cols.tolist())))
    if bias.mode == "bandpass":
        prob = bandpass_probability(d1, d2, bias)
        if args.format == "pgm":
            write_pgm(out / "probmap.pgm", prob)
        else:
            (out / "probmap.csv").write_text("\n".join(",".join(repr(v) for v in row) for row in prob.tolist()) + "\n")
    write_sidecar(out, args)
    print(f"{entries.n} entries on {d1}x{d2} written to {out / 'entries.csv'}")
    return 0


def cmd_merge(args) -> int:
    adapters, _ = load(args.checkpoint)
    if not adapters:
        raise CheckpointError("checkpoint has no layers")
    if args.layer is None:
        if len(adapters) != 1:
            raise UsageError(f"checkpoint has {len(adapters)} layers; pick one with --layer")
        name, ad = adapters[0]
    else:
        found = dict(adapters)
        if args.layer not in found:
            raise UsageError(f"no layer {args.layer!r}; available: {', '.join(found)}")
        name, ad = args.layer, found[args.layer]
    w0 = read_raw_matrix(args.base)
    merged = merge_adapter(ad, w0)
    size = write_raw_matrix(args.out, merged)
    print(f"merged layer {name!r} ({ad.d1}x{ad.d2}) into {args.out} ({size} bytes)")
    return 0


# ---------------------------------------------------------------- parser

def _add_training_flags(p, epochs: int = 2000):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--lr", type=float, default=DEFAULT_LR)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--alpha", type=float, default=None, help="scaling (default: 300, or 1 for lora)")
    p.add_argument("--base", choices=("gaussian", "zero", "identity"), default="gaussian",
                   help="frozen hidden weight")
    p.add_argument("--train-outer", action="store_true", help="also train the input/output layers")
    p.add_argument("--zero-init", action="store_true", help="start spectral coefficients at zero")
    p.add_argument("--out", default="runs/latest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourierft", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("budget", help="trainable parameters and bytes per preset")
    p.add_argument("--preset")
    p.add_argument("--d", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--lora-r", type=int)
    p.add_argument("--fourier-n", type=int)
    p.add_argument("--reference", action="store_true", help="compare against the reference rows")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("train-synthetic", help="8-class synthetic experiment for one adapter")
    p.add_argument("--method", choices=("fourier", "lora", "random", "orthogonal"), default="fourier")
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--f-c", type=float)
    p.add_argument("--bandwidth", type=float, default=8.0)
    p.add_argument("--sweep-lr", action="store_true", help="pick the lr from the grid by final accuracy")
    _add_training_flags(p)
    p.set_defaults(func=cmd_train_synthetic)

    p = sub.add_parser("ablate-basis", help="fourier vs orthogonal vs random basis at matched n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seeds", type=parse_list(int), default=list(SWEEP_SEEDS))
    p.add_argument("--sweep-lr", action="store_true")
    _add_training_flags(p)
    p.set_defaults(func=cmd_ablate_basis)

    p = sub.add_parser("sweep-bias", help="final accuracy across favored central frequencies")
    p.add_argument("--method", choices=("fourier", "random", "orthogonal"), default="fourier")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--f-c-values", type=parse_list(str), default=["none", "0", "8", "16", "24"])
    p.add_argument("--bandwidth", type=float, default=8.0)
    p.add_argument("--seeds", type=parse_list(int), default=[DEFAULT_SEED])
    _add_training_flags(p, epochs=500)
    p.set_defaults(func=cmd_sweep_bias)

    p = sub.add_parser("gradcheck", help="analytic vs central-difference gradients")
    p.add_argument("--shape", type=parse_shape, default=(16, 16))
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--h", type=float, default=1e-6)
    p.add_argument("--skip-model", action="store_true")
    p.add_argument("--wrong-sign", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sample-entries", help="spectral entries and band-pass probability maps")
    p.add_argument("--shape", type=parse_shape, default=(768, 768))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--f-c", type=float)
    p.add_argument("--bandwidth", type=float, default=200.0)
    p.add_argument("--format", choices=("pgm", "csv"), default="pgm")
    p.add_argument("--out", default="runs/entries")
    p.set_defaults(func=cmd_sample_entries)

    p = sub.add_parser("merge", help="add a checkpointed weight change to a raw base weight")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--layer")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, UnknownPresetError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        parser.print_usage(sys.stderr)
        print(f"fourierft {args.command}: error: {msg}", file=sys.stderr)
        return 2
    except (CheckpointError, ValueError, OSError) as exc:
        print(f"fourierft {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
