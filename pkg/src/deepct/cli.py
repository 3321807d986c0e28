"""Command-line entry point.

Subcommands: `coverage` (measure an existing suite, dataset, or signature
file), `generate` (random or coverage-guided test generation), and
`make-fixture` (deterministic pseudo-random model synthesis). Exit codes:
0 success, 1 usage error, 2 input-format error, 3 runtime failure. All
diagnostics go to stderr; data is written to files only.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .coverage import CoverageTable, signature_of
from .generation import (
    GenBudget,
    ReportRow,
    RobustnessReport,
    Seed,
    check_seeds,
    ct_testgen,
    layer_breakdown,
    random_run,
    robustness_summary,
    table_metrics,
)
from .model import (
    LayerSpec,
    ModelFormatError,
    build_model,
    forward_with_trace,
    load_model,
    param_count,
)
from .report_io import (
    FormatError,
    read_dataset,
    read_signatures,
    read_suite,
    write_model,
    write_report,
    write_suite,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FORMAT = 2
EXIT_RUNTIME = 3

logger = logging.getLogger("deepct")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    model_path: str
    seeds_path: str
    t: int
    d: float
    method: str
    out_report: str
    out_suite: str
    p_values: list[float] = field(default_factory=lambda: [0.5, 0.75])
    n: Optional[int] = None
    time_limit_s: float = math.inf
    rng_seed: int = 0
    max_solves_per_layer: int = 100_000
    epsilon: float = 1e-4
    dump_lp_dir: Optional[str] = None

    def __post_init__(self):
        if self.t not in (1, 2, 3):
            raise ValueError("t must be 1, 2 or 3")
        if not self.d > 0:
            raise ValueError("d must be positive")
        if any(not 0.0 <= p <= 1.0 for p in self.p_values):
            raise ValueError("every p threshold must lie in [0, 1]")
        if self.method not in ("random", "ct"):
            raise ValueError("method must be 'random' or 'ct'")


def _build_parser() -> _Parser:
    parser = _Parser(prog="deepct", description=__doc__)
    parser.add_argument("--version", action="version", version=f"deepct {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    cov = sub.add_parser("coverage", help="measure coverage of existing tests")
    cov.add_argument("--model", help="model file (needed with --suite/--dataset)")
    cov.add_argument("--suite", help="suite file to measure")
    cov.add_argument("--dataset", help="dataset file of raw inputs to measure")
    cov.add_argument("--signatures", help="precomputed activation-signature file")
    cov.add_argument("--t", type=int, default=2, choices=(1, 2, 3))
    cov.add_argument("--p", type=float, action="append", help="completeness threshold, repeatable")
    cov.add_argument("--out-report", required=True)

    gen = sub.add_parser("generate", help="generate perturbed tests around seeds")
    gen.add_argument("--model", required=True)
    gen.add_argument("--seeds", required=True, help="dataset file of correctly-labeled seeds")
    gen.add_argument("--t", type=int, default=2, choices=(1, 2, 3))
    gen.add_argument("--d", type=float, default=0.15, help="L-inf perturbation budget")
    gen.add_argument("--method", required=True, choices=("random", "ct"))
    gen.add_argument("--n", type=int, help="random tests per seed (method random)")
    gen.add_argument("--time-limit-s", type=float, default=math.inf, help="per-seed limit")
    gen.add_argument("--rng-seed", type=int, default=0)
    gen.add_argument("--max-solves-per-layer", type=int, default=100_000)
    gen.add_argument("--epsilon", type=float, default=1e-4, help="strict-activation margin")
    gen.add_argument("--p", type=float, action="append", help="completeness threshold, repeatable")
    gen.add_argument("--workers", type=int, help="override DEEPCT_THREADS worker cap")
    gen.add_argument("--dump-lp-dir", help="write each encoded LP as plain text here")
    gen.add_argument("--out-report", required=True)
    gen.add_argument("--out-suite", required=True)

    fix = sub.add_parser("make-fixture", help="write a deterministic pseudo-random model")
    fix.add_argument("widths", help="dash-separated widths, e.g. 36-16-8-16-4")
    fix.add_argument("--rng-seed", type=int, default=0)
    fix.add_argument("--out", required=True)
    return parser


def _seeds_from_dataset(model, path: str) -> list[Seed]:
    records = read_dataset(path, input_dim=model.input_dim)
    return [Seed(input=rec.x, label=rec.label, id=rec.id) for rec in records]


def _run_config(args) -> RunConfig:
    return RunConfig(
        model_path=args.model,
        seeds_path=args.seeds,
        t=args.t,
        d=args.d,
        method=args.method,
        out_report=args.out_report,
        out_suite=args.out_suite,
        p_values=args.p or [0.5, 0.75],
        n=args.n,
        time_limit_s=args.time_limit_s,
        rng_seed=args.rng_seed,
        max_solves_per_layer=args.max_solves_per_layer,
        epsilon=args.epsilon,
        dump_lp_dir=args.dump_lp_dir,
    )


def _coverage_report(meta, model_label, method, table, p_values, n_records, n_adv) -> RobustnessReport:
    agg = table_metrics(table, p_values)
    row = ReportRow(
        model=model_label,
        method=method,
        layer=None,
        sparse_pct=agg["sparse_pct"],
        dense_pct=agg["dense_pct"],
        completeness_pct=agg["completeness_pct"],
        accumulated_tests=n_records,
        adversarial_ratio_pct=100.0 * n_adv / n_records if n_records else 0.0,
        per_layer=layer_breakdown(table, p_values),
    )
    return RobustnessReport(meta=meta, rows=[row], verdicts=[], cross_model=None)


def cmd_coverage(args) -> int:
    chosen = [name for name in ("suite", "dataset", "signatures") if getattr(args, name)]
    if len(chosen) != 1:
        logger.error("exactly one of --suite, --dataset, --signatures is required")
        return EXIT_USAGE
    p_values = args.p or [0.5, 0.75]
    if any(not 0.0 <= p <= 1.0 for p in p_values):
        logger.error("every --p must lie in [0, 1]")
        return EXIT_USAGE
    n_adv = 0
    model_params = None
    if chosen[0] == "signatures":
        entries = read_signatures(args.signatures)
        if not entries:
            logger.error("signature file is empty")
            return EXIT_FORMAT
        widths = tuple(len(b) for b in entries[0][1])
        table = CoverageTable(widths, args.t)
        for _, sig in entries:
            table.update(sig)
        n_records = len(entries)
        model_label = "-"
    else:
        if not args.model:
            logger.error("--model is required with --suite/--dataset")
            return EXIT_USAGE
        model = load_model(args.model)
        model_params = param_count(model)
        table = CoverageTable(model.hidden_widths, args.t)
        if chosen[0] == "suite":
            tests = read_suite(args.suite)
            inputs = [t.input for t in tests]
            n_adv = sum(1 for t in tests if t.adversarial)
        else:
            inputs = [rec.x for rec in read_dataset(args.dataset, input_dim=model.input_dim)]
        for x in inputs:
            _, trace = forward_with_trace(model, x)
            table.update(signature_of(trace))
        n_records = len(inputs)
        model_label = args.model
    meta = {
        "tool_version": __version__,
        "command": "coverage",
        "t": args.t,
        "p_values": p_values,
        "input": chosen[0],
        "records": n_records,
    }
    if model_params is not None:
        meta["model_param_count"] = model_params
    report = _coverage_report(meta, model_label, "coverage", table, p_values, n_records, n_adv)
    write_report(report, args.out_report)
    logger.info("coverage report written to %s", args.out_report)
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.method == "random" and not args.n:
        logger.error("--n is required with --method random")
        return EXIT_USAGE
    if args.method == "ct" and args.n:
        logger.error("--n only applies to --method random")
        return EXIT_USAGE
    try:
        cfg = _run_config(args)
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    model = load_model(cfg.model_path)
    seeds = _seeds_from_dataset(model, cfg.seeds_path)
    if not seeds:
        logger.error("seed file is empty")
        return EXIT_FORMAT
    try:
        check_seeds(model, seeds)
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_FORMAT
    budget = GenBudget(
        rng_seed=cfg.rng_seed,
        t=cfg.t,
        d=cfg.d,
        time_limit_s=cfg.time_limit_s,
        max_solves_per_layer=cfg.max_solves_per_layer,
    )
    if cfg.method == "random":
        run = random_run(model, seeds, cfg.n, budget, model_name=cfg.model_path)
    else:
        run = ct_testgen(
            model,
            seeds,
            budget,
            epsilon=cfg.epsilon,
            workers=args.workers,
            dump_lp_dir=cfg.dump_lp_dir,
            model_name=cfg.model_path,
        )
    meta = {
        "tool_version": __version__,
        "command": "generate",
        "method": cfg.method,
        "model": cfg.model_path,
        "model_param_count": param_count(model),
        "t": cfg.t,
        "d": cfg.d,
        "rng_seed": cfg.rng_seed,
        "time_limit_s": "inf" if math.isinf(cfg.time_limit_s) else cfg.time_limit_s,
        "max_solves_per_layer": cfg.max_solves_per_layer,
        "epsilon": cfg.epsilon,
        "p_values": cfg.p_values,
        "seed_count": len(seeds),
    }
    if cfg.n is not None:
        meta["n_per_seed"] = cfg.n
    report = robustness_summary([run], p_values=cfg.p_values, meta=meta)
    write_suite(run.tests, cfg.out_suite)
    write_report(report, cfg.out_report)
    logger.info(
        "%s: %d tests (%d adversarial) over %d seeds; suite %s, report %s",
        cfg.method, len(run.tests), len(run.adversarial), len(seeds),
        cfg.out_suite, cfg.out_report,
    )
    return EXIT_OK


def make_fixture_model(widths: Sequence[int], rng_seed: int):
    """Deterministic toy model: uniform [-0.5, 0.5] weights scaled by 1/sqrt(fan_in)."""
    widths = [int(w) for w in widths]
    if len(widths) < 3:
        raise ValueError("need at least input, one hidden, and output widths")
    if any(w < 1 for w in widths):
        raise ValueError("all widths must be positive")
    rng = np.random.default_rng(rng_seed)
    layers = []
    for i in range(1, len(widths)):
        fan_in, out = widths[i - 1], widths[i]
        scale = 1.0 / math.sqrt(fan_in)
        layers.append(
            LayerSpec(
                weights=rng.uniform(-0.5, 0.5, size=(out, fan_in)) * scale,
                bias=rng.uniform(-0.5, 0.5, size=out) * scale,
                activation="linear" if i == len(widths) - 1 else "relu",
            )
        )
    return build_model(widths[0], layers)


def cmd_make_fixture(args) -> int:
    try:
        widths = [int(w) for w in args.widths.split("-")]
    except ValueError:
        logger.error("widths must look like 36-16-8-16-4")
        return EXIT_USAGE
    try:
        model = make_fixture_model(widths, args.rng_seed)
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    write_model(model, args.out)
    logger.info(
        "fixture %s (%d parameters) written to %s", model.describe(), param_count(model), args.out
    )
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    handlers = {
        "coverage": cmd_coverage,
        "generate": cmd_generate,
        "make-fixture": cmd_make_fixture,
    }
    try:
        return handlers[args.command](args)
    except (ModelFormatError, FormatError) as exc:
        logger.error("%s", exc)
        return EXIT_FORMAT
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_FORMAT
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.error("runtime failure: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
