"""Command-line entry point: ``maxout-mlp {train,eval,gradcheck,make-fixtures}``.

Exit statuses: 0 success, 1 gradient check above threshold, 2 invalid
configuration, 3 data/checkpoint/IO error, 4 training diverged.
"""

import argparse
import json
import struct
import sys
import time
from pathlib import Path

import numpy as np

from . import data as data_mod
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import dump_config, load_config, load_data
from .exceptions import ConfigError, DataError, DivergenceError
from .gradcheck import check_network
from .network import MaxoutNetwork
from .protocol import evaluate, run_full_protocol

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3, 4


def _err(msg):
    print(msg, file=sys.stderr)


def _load_config(args, check_data=True):
    try:
        return load_config(args.config, seed=args.seed, out=getattr(args, "out", None),
                           check_data=check_data)
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
    except OSError as exc:
        _err(f"cannot read config: {exc}")
    return None


def _make_run_dir(base, seed):
    stamp = time.strftime("%Y%m%d-%H%M%S")
    base = Path(base)
    base.mkdir(parents=True, exist_ok=True)
    for i in range(1000):
        path = base / (f"run-{stamp}-seed{seed}" + (f"-{i}" if i else ""))
        try:
            path.mkdir()
            return path
        except FileExistsError:
            continue
    raise OSError(f"could not create a fresh run directory under {base}")


def cmd_train(args):
    cfg = _load_config(args)
    if cfg is None:
        return EXIT_CONFIG
    say = (lambda *a: None) if args.quiet else print
    try:
        run_dir = _make_run_dir(cfg.output.dir, cfg.seed)
        dump_config(cfg, run_dir / "config.yaml")
        trainer, test_report, p1, p2 = run_full_protocol(cfg, run_dir / "metrics.csv")
        save_checkpoint(run_dir / "phase1.npz", trainer.model, cfg.to_dict(), p1.checkpoint)
        save_checkpoint(run_dir / "final.npz", trainer.model, cfg.to_dict())
    except DivergenceError as exc:
        _err(f"training diverged: {exc}")
        return EXIT_DIVERGED
    except (DataError, OSError) as exc:
        _err(f"data error: {exc}")
        return EXIT_DATA
    report = {
        "test": test_report.as_dict(),
        "phase1": {"best_epoch": p1.best_epoch, "best_valid_errors": p1.best_valid_errors,
                   "recorded_train_mean_ll": p1.recorded_train_mean_ll,
                   "epochs_run": p1.epochs_run, "stop_reason": p1.stop_reason},
        "phase2": {"status": p2.status, "stop_index": p2.stop_index,
                   "epochs_run": p2.epochs_run, "last_epoch": p2.last_epoch,
                   "final_valid_mean_ll": p2.final_valid_mean_ll},
        "n_updates": trainer.n_updates,
    }
    with open(run_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    say(f"run directory: {run_dir}")
    say(f"phase 1: best epoch {p1.best_epoch} ({p1.best_valid_errors} validation errors), "
        f"recorded train mean log-likelihood {p1.recorded_train_mean_ll:.6f}")
    say(f"phase 2: {p2.status} after {p2.epochs_run} epoch(s)")
    say(f"test: {test_report.errors} errors / {test_report.n} "
        f"({100 * test_report.error_rate:.2f}%), mean log-likelihood {test_report.mean_ll:.6f}")
    return EXIT_OK


def cmd_eval(args):
    try:
        net, _ = load_checkpoint(args.checkpoint)
    except CheckpointError as exc:
        _err(str(exc))
        return EXIT_DATA
    images, labels = args.images, args.labels
    try:
        if images is not None and labels is not None:
            ds = data_mod.load_dataset(images, labels, "test", net.dtype)
        elif args.config is not None:
            cfg = _load_config(args)
            if cfg is None:
                return EXIT_CONFIG
            if cfg.data.kind == "mnist":
                paths = cfg.data.resolved_paths()
                ds = data_mod.load_dataset(images or paths["test_images"],
                                           labels or paths["test_labels"], "test", net.dtype)
            else:
                # toy sets are regenerated from the seed
                ds = load_data(cfg)[2]
        else:
            _err("pass --images and --labels, or --config naming the test data")
            return EXIT_CONFIG
        if ds.images.shape[1] != net.input_dim:
            raise DataError(f"inputs have {ds.images.shape[1]} features, network expects "
                            f"{net.input_dim}")
        report = evaluate(net, ds)
    except (DataError, OSError) as exc:
        _err(f"data error: {exc}")
        return EXIT_DATA
    if not args.quiet:
        print(f"errors: {report.errors} / {report.n} ({100 * report.error_rate:.2f}%)")
        print(f"mean log-likelihood: {report.mean_ll:.6f}")
    print(json.dumps(report.as_dict(), sort_keys=True))
    return EXIT_OK


def cmd_gradcheck(args):
    cfg = _load_config(args, check_data=False)
    if cfg is None:
        return EXIT_CONFIG
    g = cfg.gradcheck
    eps = args.eps if args.eps is not None else g.eps
    threshold = g.linear_threshold if g.pool_size == 1 else g.threshold
    rng = np.random.default_rng([cfg.seed, 4])
    input_keep = cfg.dropout.input_keep if g.dropout else 1.0
    hidden_keep = cfg.dropout.hidden_keep if g.dropout else 1.0
    worst = 0.0
    for i in range(g.n_networks):
        net = MaxoutNetwork(g.input_dim, g.hidden_units, g.pool_size, g.n_classes,
                            input_keep, hidden_keep, cfg.dropout.inverted,
                            dtype=np.float64, random_state=rng)
        X = rng.standard_normal((g.batch_size, g.input_dim))
        y = rng.integers(0, g.n_classes, g.batch_size)
        report = check_network(net, X, y, eps, g.tie_tolerance, rng)
        worst = max(worst, report.max_error)
        if not args.quiet:
            print(f"network {i}")
            print(report.table())
    ok = worst < threshold
    print(f"max relative error {worst:.3e} (threshold {threshold:g}): "
          f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_THRESHOLD


def fixture_files():
    """Name -> (bytes, expected outcome) for the IDX loader fixtures."""
    n = 3
    pixels = ((np.arange(n)[:, None] * 31 + np.arange(784)[None, :] * 7) % 256).astype(np.uint8)
    images = struct.pack(">IIII", data_mod.IMAGE_MAGIC, n, 28, 28) + pixels.tobytes()
    labels = struct.pack(">II", data_mod.LABEL_MAGIC, n) + bytes([7, 0, 9])
    return {
        "images.idx": (images, "ok"),
        "labels.idx": (labels, "ok"),
        "zeros-images.idx": (struct.pack(">IIII", data_mod.IMAGE_MAGIC, 1, 28, 28)
                             + bytes(784), "ok"),
        "seven-labels.idx": (struct.pack(">II", data_mod.LABEL_MAGIC, 1) + bytes([7]), "ok"),
        "wrong-magic-images.idx": (struct.pack(">I", data_mod.LABEL_MAGIC) + images[4:],
                                   "FormatError"),
        "wrong-magic-labels.idx": (struct.pack(">I", data_mod.IMAGE_MAGIC) + labels[4:],
                                   "FormatError"),
        "truncated-images.idx": (images[:-10], "LengthError"),
        "truncated-labels.idx": (labels[:-1], "LengthError"),
        "truncated-header-images.idx": (images[:10], "LengthError"),
        "out-of-range-labels.idx": (struct.pack(">II", data_mod.LABEL_MAGIC, 2)
                                    + bytes([3, 12]), "DataError"),
    }


def cmd_make_fixtures(args):
    out = Path(args.out)
    manifest = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, (blob, expected) in fixture_files().items():
            (out / name).write_bytes(blob)
            kind = "labels" if "labels" in name else "images"
            manifest[name] = {"kind": kind, "expect": expected}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True)
                                           + "\n")
    except OSError as exc:
        _err(f"cannot write fixtures: {exc}")
        return EXIT_DATA
    if not args.quiet:
        print(f"wrote {len(manifest)} fixtures to {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="maxout-mlp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", type=Path, help="YAML run configuration")
        p.add_argument("--seed", type=int, help="override the configured seed")
        if out:
            p.add_argument("--out", type=Path, help="base output directory")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("train", help="run the two-phase protocol and evaluate on test")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on an IDX dataset")
    common(p, out=False)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--images", type=Path)
    p.add_argument("--labels", type=Path)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of a small network")
    common(p, out=False)
    p.add_argument("--eps", type=float, help="override gradcheck.eps")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("make-fixtures", help="write tiny valid and corrupt IDX files")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_make_fixtures)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
