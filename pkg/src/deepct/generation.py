"""Coverage-guided and random test generation, plus the robustness oracle.

The guided generator walks each seed's hidden layers in order: it derives the
layer's uncovered (combination, configuration) targets from the coverage
table, picks targets uniformly at random under a per-seed deterministic RNG,
encodes each as an LP over the seed's activation region, and turns optimal
solutions into new tests. Generated tests immediately feed the table, so one
test can retire many targets; infeasible or failed targets count as processed
and are dropped. Every generated test stays inside the L-inf budget box by
construction; a test whose predicted class differs from the seed label is an
adversarial witness that the model is not d-locally-robust at that seed.

Seeds are processed independently (private table copies, per-seed RNG streams)
and merged in seed order, so serial and parallel runs produce identical
output.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .coverage import CoverageTable, signature_of
from .encoder import (
    EncodingParams,
    affine_range_over_box,
    encode_target,
    input_box,
    propagate_affine,
)
from .lp import LPStatus, SimplexError, format_lp, solve
from .model import NetworkModel, classify, forward_with_trace

__all__ = [
    "Seed",
    "GeneratedTest",
    "GenBudget",
    "MethodRun",
    "ReportRow",
    "RobustnessReport",
    "is_adversarial",
    "random_testgen",
    "random_run",
    "ct_testgen",
    "robustness_summary",
    "table_metrics",
    "layer_breakdown",
    "worker_count",
]

logger = logging.getLogger(__name__)

CtTarget = tuple[int, tuple[int, ...], tuple[int, ...]]  # (layer, combo, config)


@dataclass(frozen=True)
class Seed:
    """A correctly-classified input around which perturbed tests are generated."""

    input: np.ndarray
    label: int
    id: str


@dataclass
class GeneratedTest:
    input: np.ndarray
    seed_id: str
    kind: str  # "random" | "ct"
    target: Optional[CtTarget]  # set iff kind == "ct"
    distance: float  # L-inf distance to the seed, <= d by construction
    predicted_class: int
    adversarial: bool  # predicted class differs from the seed label


@dataclass(frozen=True)
class GenBudget:
    rng_seed: int
    t: int
    d: float
    time_limit_s: float = math.inf
    max_solves_per_layer: int = 100_000

    def __post_init__(self):
        if self.t not in (1, 2, 3):
            raise ValueError(f"t must be 1, 2 or 3, got {self.t}")
        if not self.d > 0:
            raise ValueError(f"d must be positive, got {self.d}")
        if not self.time_limit_s > 0:
            raise ValueError("time limit must be positive")
        if self.max_solves_per_layer < 1:
            raise ValueError("max_solves_per_layer must be positive")


def _id_entropy(seed_id: str) -> int:
    digest = hashlib.blake2b(str(seed_id).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _seed_rng(rng_seed: int, seed_id: str) -> np.random.Generator:
    # Stream depends only on (budget RNG seed, seed id): parallel == serial.
    return np.random.default_rng([int(rng_seed), _id_entropy(seed_id)])


def linf_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def is_adversarial(model: NetworkModel, seed: Seed, candidate: np.ndarray, d: float) -> bool:
    """True iff candidate stays within the budget and flips the predicted class.

    A true result witnesses that the model is not d-locally-robust at the seed.
    """
    if linf_distance(candidate, seed.input) > d:
        return False
    return classify(model, candidate) != seed.label


def check_seeds(model: NetworkModel, seeds: Sequence[Seed]):
    for seed in seeds:
        got = classify(model, seed.input)
        if got != seed.label:
            raise ValueError(
                f"seed {seed.id!r} violates the seed invariant: label {seed.label}, "
                f"model predicts {got}"
            )


def _finish_test(model, seed, x_new, kind, target) -> GeneratedTest:
    pred = classify(model, x_new)
    return GeneratedTest(
        input=x_new,
        seed_id=seed.id,
        kind=kind,
        target=target,
        distance=linf_distance(x_new, seed.input),
        predicted_class=pred,
        adversarial=pred != seed.label,
    )


# ---------------------------------------------------------------------------
# random baseline
# ---------------------------------------------------------------------------


def random_testgen(
    model: NetworkModel, seed: Seed, n: int, d: float, rng: np.random.Generator
) -> list[GeneratedTest]:
    """n tests, each component uniform in [x_j - d, x_j + d] then clipped to [0, 1]."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    x = seed.input
    draws = rng.uniform(x - d, x + d, size=(n, x.shape[0]))
    np.clip(draws, 0.0, 1.0, out=draws)
    return [_finish_test(model, seed, draws[i], "random", None) for i in range(n)]


# ---------------------------------------------------------------------------
# guided generation (per-seed worker + merge)
# ---------------------------------------------------------------------------


@dataclass
class _SeedOutcome:
    seed_id: str
    tests: list[GeneratedTest]
    snapshots: list[CoverageTable]  # private table state after each hidden layer
    cumulative_tests: list[int]
    cumulative_adv: list[int]
    stats: Counter


def _run_seed(
    model: NetworkModel,
    base_table: CoverageTable,
    seed: Seed,
    budget: GenBudget,
    epsilon: float,
    dump_lp_dir: Optional[str],
) -> _SeedOutcome:
    rng = _seed_rng(budget.rng_seed, seed.id)
    params = EncodingParams(d=budget.d, epsilon=epsilon)
    table = base_table.copy()
    _, seed_trace = forward_with_trace(model, seed.input)
    seed_sig = signature_of(seed_trace)
    lo_box, hi_box = input_box(seed.input, budget.d)
    deadline = time.monotonic() + budget.time_limit_s

    tests: list[GeneratedTest] = []
    snapshots, cum_tests, cum_adv = [], [], []
    stats: Counter = Counter()

    for layer in range(len(model.hidden_layers)):
        # The working set's coverage is already folded in: the table is
        # updated the moment each test is generated.
        targets = table.uncovered_targets(layer)
        # Exact affine range of this layer's pre-activations over the box:
        # a target bit no point in the box can realize makes the LP infeasible
        # outright, so skip the simplex for it.
        forms = propagate_affine(model, seed_sig, layer)
        mins, maxs = affine_range_over_box(forms[layer], lo_box, hi_box)
        solves = 0
        while targets and solves < budget.max_solves_per_layer:
            if time.monotonic() > deadline:
                stats["time_limit_hits"] += 1
                break
            pick = int(rng.integers(len(targets)))
            combo, config = targets[pick]
            if any(
                (b == 1 and maxs[k] < params.epsilon - 1e-7) or (b == 0 and mins[k] > 1e-7)
                for k, b in zip(combo, config)
            ):
                # Processed like any infeasible target, but without a solve,
                # so it does not consume the per-layer LP budget.
                stats["lp_infeasible"] += 1
                stats["prescreened"] += 1
                targets.pop(pick)
                continue
            solves += 1
            lp = encode_target(model, seed.input, seed_sig, layer, combo, config, params)
            if dump_lp_dir is not None:
                name = f"seed{_id_entropy(seed.id):016x}_l{layer}_n{stats['lp_solves']:05d}.lp"
                Path(dump_lp_dir, name).write_text(format_lp(lp), encoding="utf-8")
            try:
                sol = solve(lp)
            except SimplexError as exc:
                stats["lp_pathologies"] += 1
                logger.warning(
                    "seed %s layer %d target %s/%s: %s (target skipped)",
                    seed.id, layer, combo, config, exc,
                )
                targets.pop(pick)
                continue
            stats["lp_solves"] += 1
            if sol.status is LPStatus.OPTIMAL:
                x_new = np.clip(sol.x[: model.input_dim], lo_box, hi_box)
                test = _finish_test(model, seed, x_new, "ct", (layer, combo, config))
                tests.append(test)
                _, trace = forward_with_trace(model, x_new)
                table.update(signature_of(trace))
                attempted = (combo, config)
                targets = [
                    tg
                    for tg in targets
                    if tg != attempted and not table.is_covered(layer, tg[0], tg[1])
                ]
            else:
                stats["lp_infeasible" if sol.status is LPStatus.INFEASIBLE else "lp_unbounded"] += 1
                targets.pop(pick)
        snapshots.append(table.copy())
        cum_tests.append(len(tests))
        cum_adv.append(sum(1 for t in tests if t.adversarial))
    return _SeedOutcome(seed.id, tests, snapshots, cum_tests, cum_adv, stats)


def _run_seed_packed(args) -> _SeedOutcome:
    return _run_seed(*args)


def worker_count(requested: Optional[int], n_tasks: int) -> int:
    """Worker cap: explicit request, else DEEPCT_THREADS, else logical cores."""
    if requested is None:
        env = os.environ.get("DEEPCT_THREADS", "").strip()
        requested = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(int(requested), n_tasks))


@dataclass
class MethodRun:
    """One generation run of one method on one model: tests plus coverage rows."""

    method: str  # "random" | "ct"
    model_name: str
    tests: list[GeneratedTest]
    adversarial: list[GeneratedTest]
    layer_labels: list[Optional[int]]  # 1-based hidden layers; None = whole net
    per_layer_tables: list[CoverageTable]
    per_layer_test_counts: list[int]
    per_layer_adv_counts: list[int]
    seed_flags: dict[str, bool]  # seed id -> adversarial example found
    stats: dict = field(default_factory=dict)

    @property
    def final_table(self) -> CoverageTable:
        return self.per_layer_tables[-1]


def base_coverage_table(model: NetworkModel, seeds: Sequence[Seed], t: int) -> CoverageTable:
    table = CoverageTable(model.hidden_widths, t)
    for seed in seeds:
        _, trace = forward_with_trace(model, seed.input)
        table.update(signature_of(trace))
    return table


def ct_testgen(
    model: NetworkModel,
    seeds: Sequence[Seed],
    budget: GenBudget,
    *,
    epsilon: float = 1e-4,
    workers: Optional[int] = None,
    dump_lp_dir: Optional[str] = None,
    model_name: str = "model",
) -> MethodRun:
    """Coverage-guided generation over all seeds; deterministic for a fixed budget.

    Returns the accumulated suite, the adversarial subset, and per-layer merged
    coverage snapshots (seed signatures included) backing the report rows.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    check_seeds(model, seeds)
    base = base_coverage_table(model, seeds, budget.t)
    if dump_lp_dir is not None:
        Path(dump_lp_dir).mkdir(parents=True, exist_ok=True)

    args = [(model, base, seed, budget, epsilon, dump_lp_dir) for seed in seeds]
    n_workers = worker_count(workers, len(seeds))
    if n_workers == 1:
        outcomes = [_run_seed_packed(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(_run_seed_packed, args))

    n_hidden = len(model.hidden_layers)
    tables, test_counts, adv_counts = [], [], []
    for layer in range(n_hidden):
        merged = base
        for out in outcomes:
            merged = merged.merge(out.snapshots[layer])
        tables.append(merged)
        test_counts.append(sum(out.cumulative_tests[layer] for out in outcomes))
        adv_counts.append(sum(out.cumulative_adv[layer] for out in outcomes))

    tests = [t for out in outcomes for t in out.tests]
    stats: Counter = Counter()
    for out in outcomes:
        stats.update(out.stats)
    return MethodRun(
        method="ct",
        model_name=model_name,
        tests=tests,
        adversarial=[t for t in tests if t.adversarial],
        layer_labels=list(range(1, n_hidden + 1)),
        per_layer_tables=tables,
        per_layer_test_counts=test_counts,
        per_layer_adv_counts=adv_counts,
        seed_flags={out.seed_id: any(t.adversarial for t in out.tests) for out in outcomes},
        stats=dict(stats),
    )


def random_run(
    model: NetworkModel,
    seeds: Sequence[Seed],
    n_per_seed: int,
    budget: GenBudget,
    *,
    model_name: str = "model",
) -> MethodRun:
    """Random-perturbation baseline over all seeds, same reporting shape as ct."""
    if not seeds:
        raise ValueError("need at least one seed")
    check_seeds(model, seeds)
    table = base_coverage_table(model, seeds, budget.t)
    tests: list[GeneratedTest] = []
    seed_flags: dict[str, bool] = {}
    for seed in seeds:
        rng = _seed_rng(budget.rng_seed, seed.id)
        batch = random_testgen(model, seed, n_per_seed, budget.d, rng)
        for t in batch:
            _, trace = forward_with_trace(model, t.input)
            table.update(signature_of(trace))
        tests.extend(batch)
        seed_flags[seed.id] = any(t.adversarial for t in batch)
    adversarial = [t for t in tests if t.adversarial]
    return MethodRun(
        method="random",
        model_name=model_name,
        tests=tests,
        adversarial=adversarial,
        layer_labels=[None],
        per_layer_tables=[table],
        per_layer_test_counts=[len(tests)],
        per_layer_adv_counts=[len(adversarial)],
        seed_flags=seed_flags,
        stats={},
    )


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


@dataclass
class ReportRow:
    model: str
    method: str
    layer: Optional[int]  # None = whole-net row (random baseline)
    sparse_pct: float
    dense_pct: float
    completeness_pct: dict[str, float]  # keyed by the p threshold as text
    accumulated_tests: int
    adversarial_ratio_pct: float
    per_layer: dict[str, dict]  # per-layer breakdown of this snapshot


@dataclass
class RobustnessReport:
    meta: dict
    rows: list[ReportRow]
    verdicts: list[dict]
    cross_model: Optional[dict]

    def to_dict(self) -> dict:
        rows = sorted(
            self.rows, key=lambda r: (r.model, r.method, -1 if r.layer is None else r.layer)
        )
        return {
            "meta": self.meta,
            "rows": [
                {
                    "model": r.model,
                    "method": r.method,
                    "layer": r.layer,
                    "sparse_pct": r.sparse_pct,
                    "dense_pct": r.dense_pct,
                    "completeness_pct": r.completeness_pct,
                    "accumulated_tests": r.accumulated_tests,
                    "adversarial_ratio_pct": r.adversarial_ratio_pct,
                    "per_layer": r.per_layer,
                }
                for r in rows
            ],
            "verdicts": sorted(self.verdicts, key=lambda v: (v["model"], v["method"])),
            "cross_model": self.cross_model,
        }


def table_metrics(table: CoverageTable, p_values: Sequence[float]) -> dict:
    return {
        "sparse_pct": 100.0 * table.aggregate_sparse(),
        "dense_pct": 100.0 * table.aggregate_dense(),
        "completeness_pct": {
            f"{p:g}": 100.0 * table.aggregate_completeness(p) for p in p_values
        },
    }


def layer_breakdown(table: CoverageTable, p_values: Sequence[float]) -> dict[str, dict]:
    out = {}
    for layer in range(len(table.widths)):
        out[str(layer + 1)] = {
            "sparse_pct": 100.0 * table.sparse_coverage(layer),
            "dense_pct": 100.0 * table.dense_coverage(layer),
            "completeness_pct": {
                f"{p:g}": 100.0 * table.completeness_coverage(layer, p) for p in p_values
            },
        }
    return out


def robustness_summary(
    runs: Sequence[MethodRun],
    p_values: Sequence[float] = (0.5, 0.75),
    meta: Optional[dict] = None,
) -> RobustnessReport:
    """Assemble the coverage/robustness report for one or more generation runs.

    With exactly two runs, also computes the unique and shared non-robust-seed
    counts across them; their seed sets must match.
    """
    if not runs:
        raise ValueError("need at least one run")
    rows = []
    verdicts = []
    for run in runs:
        for i, label in enumerate(run.layer_labels):
            table = run.per_layer_tables[i]
            n_tests = run.per_layer_test_counts[i]
            n_adv = run.per_layer_adv_counts[i]
            agg = table_metrics(table, p_values)
            rows.append(
                ReportRow(
                    model=run.model_name,
                    method=run.method,
                    layer=label,
                    sparse_pct=agg["sparse_pct"],
                    dense_pct=agg["dense_pct"],
                    completeness_pct=agg["completeness_pct"],
                    accumulated_tests=n_tests,
                    adversarial_ratio_pct=100.0 * n_adv / n_tests if n_tests else 0.0,
                    per_layer=layer_breakdown(table, p_values),
                )
            )
        non_robust = sorted(sid for sid, hit in run.seed_flags.items() if hit)
        verdicts.append(
            {
                "model": run.model_name,
                "method": run.method,
                "seed_count": len(run.seed_flags),
                "non_robust_count": len(non_robust),
                "non_robust_seed_ids": non_robust,
            }
        )
    cross = None
    if len(runs) == 2:
        ids_a, ids_b = (set(run.seed_flags) for run in runs)
        if ids_a != ids_b:
            raise ValueError("shared-issue computation needs identical seed sets")
        flagged_a = {s for s, hit in runs[0].seed_flags.items() if hit}
        flagged_b = {s for s, hit in runs[1].seed_flags.items() if hit}
        cross = {
            "unique_issues": len(flagged_a | flagged_b),
            "shared_issues": len(flagged_a & flagged_b),
        }
    return RobustnessReport(meta=dict(meta or {}), rows=rows, verdicts=verdicts, cross_model=cross)
