import itertools
from math import comb

import numpy as np
import pytest

from conftest import table1_signatures
from deepct.coverage import CoverageTable, enumerate_combinations, signature_of
from oracles import recount_metrics, recount_uncovered


def random_signatures(rng, widths, count):
    return [
        tuple(rng.integers(0, 2, w).astype(np.uint8) for w in widths) for _ in range(count)
    ]


class TestSignatureOf:
    def test_boundary_assignment(self):
        sig = signature_of((np.array([0.0, -1.0, 2.0]),))
        np.testing.assert_array_equal(sig[0], [0, 0, 1])

    def test_all_zero_trace(self):
        sig = signature_of((np.zeros(4),))
        np.testing.assert_array_equal(sig[0], np.zeros(4))

    def test_elementwise_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            trace = (rng.normal(size=5), rng.normal(size=3))
            sig = signature_of(trace)
            for bits, pre in zip(sig, trace):
                np.testing.assert_array_equal(bits, [1 if v > 0 else 0 for v in pre])


class TestEnumerateCombinations:
    def test_four_choose_two(self):
        assert enumerate_combinations(4, 2) == [
            (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3),
        ]

    def test_whole_layer(self):
        assert enumerate_combinations(4, 4) == [(0, 1, 2, 3)]

    def test_binomial_count(self):
        assert len(enumerate_combinations(84, 2)) == 3_486

    @pytest.mark.parametrize("k,t", [(4, 0), (4, 5), (3, -1)])
    def test_rejects_bad_t(self, k, t):
        with pytest.raises(ValueError):
            enumerate_combinations(k, t)


class TestUpdate:
    def test_first_signature_covers_one_config_per_combo(self):
        table = CoverageTable([4], 2)
        assert table.update((np.zeros(4, dtype=np.uint8),)) == 6

    def test_idempotent(self):
        table = CoverageTable([4], 2)
        sig = (np.array([0, 1, 0, 1], dtype=np.uint8),)
        table.update(sig)
        assert table.update(sig) == 0

    def test_table1_total_pairs(self):
        table = CoverageTable([4], 2)
        total = sum(table.update(sig) for sig in table1_signatures())
        assert total == 20
        assert table.covered_pairs(0) == 20

    def test_shape_mismatch(self):
        table = CoverageTable([4], 2)
        with pytest.raises(ValueError):
            table.update((np.zeros(3, dtype=np.uint8),))
        with pytest.raises(ValueError):
            table.update((np.zeros(4, dtype=np.uint8), np.zeros(4, dtype=np.uint8)))

    def test_t_out_of_range(self):
        with pytest.raises(ValueError):
            CoverageTable([4], 4)
        with pytest.raises(ValueError):
            CoverageTable([4], 0)

    def test_combination_cap(self):
        with pytest.raises(ValueError, match="cap"):
            CoverageTable([6000], 3)


class TestTable1Metrics:
    @pytest.fixture
    def table(self):
        table = CoverageTable([4], 2)
        for sig in table1_signatures():
            table.update(sig)
        return table

    def test_sparse(self, table):
        assert table.sparse_coverage(0) == pytest.approx(4 / 6, abs=0)

    def test_dense(self, table):
        assert table.dense_coverage(0) == pytest.approx(20 / 24, abs=0)

    def test_completeness_half(self, table):
        assert table.completeness_coverage(0, 0.5) == 1.0

    def test_completeness_one_equals_sparse(self, table):
        assert table.completeness_coverage(0, 1.0) == table.sparse_coverage(0)

    def test_completeness_zero(self, table):
        assert table.completeness_coverage(0, 0.0) == 1.0

    def test_uncovered_targets_exact(self, table):
        assert table.uncovered_targets(0) == [
            ((0, 2), (0, 1)),
            ((0, 2), (1, 0)),
            ((1, 3), (0, 1)),
            ((1, 3), (1, 0)),
        ]

    def test_is_covered_lookup(self, table):
        assert table.is_covered(0, (0, 1), (1, 1))
        assert not table.is_covered(0, (0, 2), (0, 1))


class TestEdgeCases:
    def test_empty_table_metrics(self):
        table = CoverageTable([4], 2)
        assert table.sparse_coverage(0) == 0.0
        assert table.dense_coverage(0) == 0.0

    def test_single_test_dense_is_one_config_per_combo(self):
        for t in (1, 2, 3):
            table = CoverageTable([5], t)
            table.update((np.array([1, 0, 1, 0, 1], dtype=np.uint8),))
            assert table.dense_coverage(0) == pytest.approx(1 / 2**t, abs=0)
            assert table.sparse_coverage(0) == 0.0

    def test_single_test_sparse_zero(self):
        table = CoverageTable([5], 2)
        table.update((np.ones(5, dtype=np.uint8),))
        assert table.sparse_coverage(0) == 0.0

    def test_empty_table_full_complement(self):
        table = CoverageTable([3], 2)
        assert len(table.uncovered_targets(0)) == 12

    def test_fully_covered_no_targets(self):
        table = CoverageTable([2], 1)
        table.update((np.array([0, 0], dtype=np.uint8),))
        table.update((np.array([1, 1], dtype=np.uint8),))
        assert table.uncovered_targets(0) == []

    def test_layer_narrower_than_t(self):
        table = CoverageTable([2, 4], 3)
        table.update((np.zeros(2, dtype=np.uint8), np.zeros(4, dtype=np.uint8)))
        assert table.combination_count(0) == 0
        assert table.combination_count(1) == comb(4, 3)

    def test_completeness_rejects_bad_p(self):
        table = CoverageTable([4], 2)
        with pytest.raises(ValueError):
            table.completeness_coverage(0, 1.5)


class TestAggregate:
    def test_single_layer_degenerate(self):
        table = CoverageTable([4], 2)
        for sig in table1_signatures():
            table.update(sig)
        assert table.aggregate_sparse() == table.sparse_coverage(0)
        assert table.aggregate_dense() == table.dense_coverage(0)

    def test_pooled_half(self):
        # Layer 0 fully covered, layer 1 stuck on one configuration.
        table = CoverageTable([4, 4], 2)
        frozen = np.zeros(4, dtype=np.uint8)
        for bits in itertools.product((0, 1), repeat=4):
            table.update((np.array(bits, dtype=np.uint8), frozen))
        assert table.sparse_coverage(0) == 1.0
        assert table.sparse_coverage(1) == 0.0
        assert table.aggregate_sparse() == 0.5

    def test_matches_recount(self):
        rng = np.random.default_rng(9)
        widths = (6, 3, 5)
        sigs = random_signatures(rng, widths, 30)
        table = CoverageTable(widths, 2)
        for sig in sigs:
            table.update(sig)
        _, agg = recount_metrics(sigs, widths, 2)
        assert table.aggregate_sparse() == agg["sparse"]
        assert table.aggregate_dense() == agg["dense"]
        for p in (0.5, 0.75, 1.0):
            assert table.aggregate_completeness(p) == agg["completeness"][p]


class TestBruteForceEquivalence:
    def test_randomized_instances(self):
        rng = np.random.default_rng(123)
        for _ in range(60):
            n_layers = int(rng.integers(1, 4))
            widths = tuple(int(rng.integers(1, 11)) for _ in range(n_layers))
            t = int(rng.integers(1, 4))
            count = int(rng.integers(1, 51))
            sigs = random_signatures(rng, widths, count)
            table = CoverageTable(widths, t)
            for sig in sigs:
                table.update(sig)
            per_layer, _ = recount_metrics(sigs, widths, t)
            for layer, ref in enumerate(per_layer):
                assert table.sparse_coverage(layer) == ref["sparse"]
                assert table.dense_coverage(layer) == ref["dense"]
                for p in (0.5, 0.75, 1.0):
                    assert table.completeness_coverage(layer, p) == ref["completeness"][p]

    def test_uncovered_targets_match_recount(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            width = int(rng.integers(2, 8))
            t = int(rng.integers(1, min(3, width) + 1))
            sigs = random_signatures(rng, (width,), int(rng.integers(1, 10)))
            table = CoverageTable((width,), t)
            for sig in sigs:
                table.update(sig)
            assert table.uncovered_targets(0) == recount_uncovered(sigs, width, t, 0)


class TestInvariants:
    def test_metric_inequalities_randomized(self):
        rng = np.random.default_rng(55)
        for _ in range(200):
            widths = (int(rng.integers(2, 9)),)
            t = int(rng.integers(1, min(3, widths[0]) + 1))
            table = CoverageTable(widths, t)
            for sig in random_signatures(rng, widths, int(rng.integers(1, 20))):
                table.update(sig)
            sparse = table.sparse_coverage(0)
            dense = table.dense_coverage(0)
            assert 0.0 <= sparse <= dense <= 1.0
            assert table.completeness_coverage(0, 1.0) == sparse
            last = 1.0
            for p in (0.0, 0.25, 0.5, 0.75, 1.0):
                cur = table.completeness_coverage(0, p)
                assert cur <= last + 1e-15
                last = cur

    def test_monotone_under_updates(self):
        rng = np.random.default_rng(56)
        widths = (6,)
        table = CoverageTable(widths, 2)
        prev = (0.0, 0.0, 0.0)
        for sig in random_signatures(rng, widths, 40):
            table.update(sig)
            cur = (
                table.sparse_coverage(0),
                table.dense_coverage(0),
                table.completeness_coverage(0, 0.5),
            )
            assert all(c >= p for c, p in zip(cur, prev))
            prev = cur

    def test_config_count_bounded_by_distinct_signatures(self):
        rng = np.random.default_rng(57)
        widths = (5,)
        t = 2
        sigs = random_signatures(rng, widths, 12)
        table = CoverageTable(widths, t)
        for sig in sigs:
            table.update(sig)
        distinct = len({tuple(s[0].tolist()) for s in sigs})
        counts = [bin(int(m)).count("1") for m in table._masks[0]]
        assert max(counts) <= min(distinct, 2**t)


class TestMerge:
    def test_identity_and_idempotence(self):
        rng = np.random.default_rng(20)
        widths = (5, 3)
        table = CoverageTable(widths, 2)
        for sig in random_signatures(rng, widths, 10):
            table.update(sig)
        empty = CoverageTable(widths, 2)
        assert table.merge(empty) == table
        assert table.merge(table) == table

    def test_commutative_associative(self):
        rng = np.random.default_rng(21)
        widths = (6,)
        tables = []
        for _ in range(3):
            t = CoverageTable(widths, 2)
            for sig in random_signatures(rng, widths, 5):
                t.update(sig)
            tables.append(t)
        a, b, c = tables
        assert a.merge(b) == b.merge(a)
        assert a.merge(b).merge(c) == a.merge(b.merge(c))

    def test_merge_equals_concatenated_updates(self):
        rng = np.random.default_rng(22)
        widths = (7, 4)
        batch_a = random_signatures(rng, widths, 8)
        batch_b = random_signatures(rng, widths, 8)
        ta = CoverageTable(widths, 2)
        tb = CoverageTable(widths, 2)
        for sig in batch_a:
            ta.update(sig)
        for sig in batch_b:
            tb.update(sig)
        combined = CoverageTable(widths, 2)
        for sig in batch_a + batch_b:
            combined.update(sig)
        assert ta.merge(tb) == combined

    def test_rejects_mismatched_tables(self):
        with pytest.raises(ValueError, match="incompatible"):
            CoverageTable([4], 2).merge(CoverageTable([5], 2))
        with pytest.raises(ValueError, match="incompatible"):
            CoverageTable([4], 2).merge(CoverageTable([4], 1))
