"""CLI: train the studied MNIST architectures and export models plus seed sets."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .data import load_mnist
from .export import export_seeds
from .train import ARCH_LARGE, ARCH_SMALL, TrainSpec, train_and_export

logger = logging.getLogger("mnist_trainer")

_NAMED_ARCHS = {
    "small": ARCH_SMALL,
    "large": ARCH_LARGE,
}


def _parse_arch(text: str) -> tuple[int, ...]:
    if text in _NAMED_ARCHS:
        return _NAMED_ARCHS[text]
    try:
        return tuple(int(w) for w in text.split("-"))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"architecture must be 'small', 'large', or dash-separated widths, got {text!r}"
        )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mnist-trainer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train an MLP on MNIST and export the model file")
    tr.add_argument("--arch", type=_parse_arch, default="small",
                    help="hidden widths: 'small' (64-32-64), 'large' (84-42-64-42-84), or e.g. 32-16")
    tr.add_argument("--epochs", type=int, default=30)
    tr.add_argument("--lr", type=float, default=0.01)
    tr.add_argument("--batch-size", type=int, default=128)
    tr.add_argument("--rng-seed", type=int, default=0)
    tr.add_argument("--data-dir", help="directory with the MNIST IDX files")
    tr.add_argument("--out", required=True, help="model file to write")

    ex = sub.add_parser("export-seeds", help="export correctly-classified test items")
    ex.add_argument("--model", required=True, help="exported model file")
    ex.add_argument("--count", type=int, default=1000)
    ex.add_argument("--rng-seed", type=int, default=0)
    ex.add_argument("--data-dir", help="directory with the MNIST IDX files")
    ex.add_argument("--out", required=True, help="dataset file to write")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "train":
            arch = args.arch if isinstance(args.arch, tuple) else _parse_arch(args.arch)
            train, test = load_mnist(args.data_dir)
            spec = TrainSpec(
                hidden=arch,
                epochs=args.epochs,
                lr=args.lr,
                batch_size=args.batch_size,
                rng_seed=args.rng_seed,
            )
            metrics = train_and_export(
                spec, train.images, train.labels, test.images, test.labels, args.out
            )
            print(
                f"train_acc={metrics['train_acc']:.4f} test_acc={metrics['test_acc']:.4f} "
                f"params={metrics['param_count']} epochs={metrics['epochs_run']}"
            )
        else:
            _, test = load_mnist(args.data_dir)
            ids = export_seeds(
                args.model, test.images, test.labels, args.count, args.out, args.rng_seed
            )
            print(f"exported {len(ids)} seeds")
        return 0
    except FileNotFoundError as exc:
        logger.error("%s", exc)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
