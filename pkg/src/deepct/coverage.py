"""t-way neuron-activation configuration coverage.

Each hidden neuron is binarized per input: activated when its pre-activation
is strictly positive, deactivated otherwise (the 0 boundary counts as
deactivated). For every within-layer combination of t neurons the table tracks
which of the 2^t activation configurations have been observed, one bitmask per
combination. All orderings are lexicographic so target lists and reports are
reproducible.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import ceil, comb

import numpy as np

__all__ = [
    "ActivationSignature",
    "CoverageTable",
    "signature_of",
    "enumerate_combinations",
]

# One uint8 bit vector per hidden layer; entry 1 = activated.
ActivationSignature = tuple[np.ndarray, ...]

MAX_T = 3
# Hard cap on per-layer combination count; one uint8 mask per combination.
MAX_COMBINATIONS_PER_LAYER = 8_000_000

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def signature_of(trace) -> ActivationSignature:
    """Binarize a pre-activation trace: bit 1 iff value > 0."""
    return tuple((np.asarray(pre) > 0.0).astype(np.uint8) for pre in trace)


def enumerate_combinations(layer_width: int, t: int) -> list[tuple[int, ...]]:
    """All t-element neuron-index combinations of a layer, lexicographic."""
    if not 1 <= t <= layer_width:
        raise ValueError(f"t must satisfy 1 <= t <= layer width, got t={t}, width={layer_width}")
    return list(itertools.combinations(range(layer_width), t))


@lru_cache(maxsize=None)
def _layer_geometry(width: int, t: int):
    """(combination index array of shape (C(width,t), t), combination -> rank map)."""
    combos = enumerate_combinations(width, t)
    index = np.array(combos, dtype=np.int64).reshape(len(combos), t)
    rank = {c: i for i, c in enumerate(combos)}
    return index, rank


def _config_int(config: tuple[int, ...]) -> int:
    # First neuron of the combination is the most significant bit, so ascending
    # integers enumerate configurations in lexicographic tuple order.
    value = 0
    for b in config:
        value = (value << 1) | int(b)
    return value


def _config_tuple(value: int, t: int) -> tuple[int, ...]:
    return tuple((value >> (t - 1 - i)) & 1 for i in range(t))


class CoverageTable:
    """Covered-configuration masks for every (layer, t-combination).

    Single-writer: `update` mutates; concurrent readers are fine between
    writes. Independent tables for the same geometry combine with `merge`.
    """

    def __init__(self, widths, t: int):
        if not 1 <= int(t) <= MAX_T:
            raise ValueError(f"t must be in 1..{MAX_T}, got {t}")
        widths = tuple(int(w) for w in widths)
        if not widths or any(w < 1 for w in widths):
            raise ValueError(f"layer widths must be positive, got {widths}")
        for w in widths:
            if t <= w and comb(w, t) > MAX_COMBINATIONS_PER_LAYER:
                raise ValueError(
                    f"layer of width {w} yields {comb(w, t)} {t}-way combinations "
                    f"(~{comb(w, t) / 2**20:.0f} MiB of masks); cap is {MAX_COMBINATIONS_PER_LAYER}"
                )
        self.t = int(t)
        self.widths = widths
        # Layers narrower than t contribute no combinations.
        self._masks = [
            np.zeros(comb(w, t) if t <= w else 0, dtype=np.uint8) for w in widths
        ]

    # -- construction helpers ------------------------------------------------

    def copy(self) -> "CoverageTable":
        dup = CoverageTable.__new__(CoverageTable)
        dup.t = self.t
        dup.widths = self.widths
        dup._masks = [m.copy() for m in self._masks]
        return dup

    def _check_compatible(self, other: "CoverageTable"):
        if self.t != other.t or self.widths != other.widths:
            raise ValueError(
                f"incompatible tables: t/widths ({self.t}, {self.widths}) vs "
                f"({other.t}, {other.widths})"
            )

    def merge(self, other: "CoverageTable") -> "CoverageTable":
        """Union of covered sets; commutative, associative, idempotent."""
        self._check_compatible(other)
        merged = self.copy()
        for mine, theirs in zip(merged._masks, other._masks):
            np.bitwise_or(mine, theirs, out=mine)
        return merged

    # -- updates ---------------------------------------------------------------

    def update(self, signature: ActivationSignature) -> int:
        """Mark every combination's configuration under `signature` covered.

        Returns the number of (combination, configuration) pairs that were not
        covered before; re-applying the same signature returns 0.
        """
        if len(signature) != len(self.widths):
            raise ValueError(
                f"signature has {len(signature)} layers, table expects {len(self.widths)}"
            )
        newly = 0
        shifts = (1 << np.arange(self.t - 1, -1, -1, dtype=np.int64))
        for layer, bits in enumerate(signature):
            bits = np.asarray(bits)
            if bits.shape != (self.widths[layer],):
                raise ValueError(
                    f"layer {layer}: signature width {bits.shape} != {self.widths[layer]}"
                )
            masks = self._masks[layer]
            if masks.size == 0:
                continue
            index, _ = _layer_geometry(self.widths[layer], self.t)
            cfg = (bits.astype(np.int64)[index] * shifts).sum(axis=1)
            bit = np.left_shift(1, cfg).astype(np.uint8)
            newly += int(np.count_nonzero(masks & bit == 0))
            np.bitwise_or(masks, bit, out=masks)
        return newly

    def update_many(self, signatures) -> int:
        return sum(self.update(sig) for sig in signatures)

    # -- raw counts ------------------------------------------------------------

    def combination_count(self, layer: int) -> int:
        return self._masks[layer].size

    def covered_pairs(self, layer: int) -> int:
        return int(_POPCOUNT8[self._masks[layer]].sum())

    def fully_covered_combinations(self, layer: int) -> int:
        full = (1 << (2**self.t)) - 1
        return int(np.count_nonzero(self._masks[layer] == full))

    def _combos_at_least(self, layer: int, p: float) -> int:
        # Exact-rational threshold: covered count >= p * 2^t, so p = 0.5
        # matches 2-of-4 exactly instead of tripping on binary rounding.
        cmin = ceil(Fraction(p) * 2**self.t)
        counts = _POPCOUNT8[self._masks[layer]]
        return int(np.count_nonzero(counts >= cmin))

    def is_covered(self, layer: int, combo: tuple[int, ...], config: tuple[int, ...]) -> bool:
        _, rank = _layer_geometry(self.widths[layer], self.t)
        mask = int(self._masks[layer][rank[tuple(combo)]])
        return bool(mask >> _config_int(tuple(config)) & 1)

    # -- per-layer metrics -------------------------------------------------------

    def sparse_coverage(self, layer: int) -> float:
        """Fraction of combinations with all 2^t configurations covered."""
        n = self.combination_count(layer)
        return self.fully_covered_combinations(layer) / n if n else 0.0

    def dense_coverage(self, layer: int) -> float:
        """Fraction of all (combination, configuration) pairs covered."""
        n = self.combination_count(layer)
        return self.covered_pairs(layer) / (2**self.t * n) if n else 0.0

    def completeness_coverage(self, layer: int, p: float) -> float:
        """Fraction of combinations whose own dense coverage is at least p."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        n = self.combination_count(layer)
        return self._combos_at_least(layer, p) / n if n else 0.0

    # -- pooled metrics over all layers -------------------------------------------

    def aggregate_sparse(self) -> float:
        total = sum(self.combination_count(l) for l in range(len(self.widths)))
        hit = sum(self.fully_covered_combinations(l) for l in range(len(self.widths)))
        return hit / total if total else 0.0

    def aggregate_dense(self) -> float:
        total = sum(2**self.t * self.combination_count(l) for l in range(len(self.widths)))
        hit = sum(self.covered_pairs(l) for l in range(len(self.widths)))
        return hit / total if total else 0.0

    def aggregate_completeness(self, p: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        total = sum(self.combination_count(l) for l in range(len(self.widths)))
        hit = sum(self._combos_at_least(l, p) for l in range(len(self.widths)))
        return hit / total if total else 0.0

    # -- targets ---------------------------------------------------------------

    def uncovered_targets(self, layer: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """Uncovered (combination, configuration) pairs, lexicographic order."""
        masks = self._masks[layer]
        if masks.size == 0:
            return []
        index, _ = _layer_geometry(self.widths[layer], self.t)
        n_cfg = 2**self.t
        out = []
        holes = np.nonzero(masks != (1 << n_cfg) - 1)[0]
        for i in holes:
            mask = int(masks[i])
            combo = tuple(int(v) for v in index[i])
            for cfg in range(n_cfg):
                if not mask >> cfg & 1:
                    out.append((combo, _config_tuple(cfg, self.t)))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoverageTable):
            return NotImplemented
        return (
            self.t == other.t
            and self.widths == other.widths
            and all(np.array_equal(a, b) for a, b in zip(self._masks, other._masks))
        )
