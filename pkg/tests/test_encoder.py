import numpy as np
import pytest

from conftest import model_from, random_model
from deepct.coverage import signature_of
from deepct.encoder import EncodingParams, encode_target, input_box, propagate_affine, verify_target
from deepct.lp import LPStatus, solve
from deepct.model import forward_with_trace
from oracles import grid_min_radius


def sig_for(model, x):
    _, trace = forward_with_trace(model, x)
    return signature_of(trace)


def naive_forward_adapter(model, x):
    return forward_with_trace(model, x)


class TestPropagateAffine:
    def test_first_layer_is_raw_rows(self):
        rng = np.random.default_rng(0)
        model = random_model(rng, [5, 4, 3, 2])
        for pattern_bit in (0, 1):
            pattern = tuple(np.full(w, pattern_bit, dtype=np.uint8) for w in model.hidden_widths)
            forms = propagate_affine(model, pattern, 0)
            np.testing.assert_array_equal(forms[0].coeffs, model.layers[0].weights)
            np.testing.assert_array_equal(forms[0].consts, model.layers[0].bias)

    def test_all_deactivated_pattern_zeroes_downstream(self):
        rng = np.random.default_rng(1)
        model = random_model(rng, [5, 4, 3, 2])
        pattern = tuple(np.zeros(w, dtype=np.uint8) for w in model.hidden_widths)
        forms = propagate_affine(model, pattern, 1)
        np.testing.assert_array_equal(forms[1].coeffs, np.zeros_like(forms[1].coeffs))
        np.testing.assert_array_equal(forms[1].consts, model.layers[1].bias)

    def test_layer_out_of_range(self):
        rng = np.random.default_rng(2)
        model = random_model(rng, [4, 3, 2])
        pattern = (np.zeros(3, dtype=np.uint8),)
        with pytest.raises(ValueError, match="out of range"):
            propagate_affine(model, pattern, 1)

    def test_forms_reproduce_forward_pass(self):
        rng = np.random.default_rng(3)
        model = random_model(rng, [6, 4, 3, 2], scale=2.0)
        for _ in range(50):
            x = rng.uniform(0, 1, 6)
            _, trace = forward_with_trace(model, x)
            forms = propagate_affine(model, signature_of(trace), len(trace) - 1)
            for pre, form in zip(trace, forms):
                np.testing.assert_allclose(form.coeffs @ x + form.consts, pre, atol=1e-9)


class TestEncodeTarget:
    def test_seed_own_configuration_costs_nothing(self, toy_model):
        seed = np.array([0.1, 0.0])
        sig = sig_for(toy_model, seed)
        own = tuple(int(b) for b in sig[0])
        lp = encode_target(
            toy_model, seed, sig, 0, (0, 1), own, EncodingParams(d=0.15)
        )
        sol = solve(lp)
        assert sol.status is LPStatus.OPTIMAL
        assert sol.objective == pytest.approx(0.0, abs=1e-7)

    def test_optimum_matches_grid_search(self, toy_model):
        seed = np.array([0.1, 0.0])
        sig = sig_for(toy_model, seed)
        params = EncodingParams(d=0.15, epsilon=1e-4)
        lp = encode_target(toy_model, seed, sig, 0, (0, 1), (1, 1), params)
        sol = solve(lp)
        assert sol.status is LPStatus.OPTIMAL
        steps = 201
        ref = grid_min_radius(
            toy_model, naive_forward_adapter, seed, 0, (0, 1), (1, 1), 0.15, steps
        )
        grid_step = 0.15 / (steps - 1)
        assert ref is not None
        assert abs(sol.objective - ref) <= grid_step + params.epsilon
        # The binding coordinate must move just past the 0.05 threshold.
        assert sol.objective == pytest.approx(0.05 + params.epsilon, abs=1e-6)

    def test_unreachable_bit_is_infeasible(self):
        # Neuron 0 pre-activation is x0 - 1, never positive inside the box.
        model = model_from(
            [np.eye(2), np.eye(2)],
            [np.array([-1.0, -0.05]), np.zeros(2)],
        )
        seed = np.array([0.1, 0.0])
        sig = sig_for(model, seed)
        lp = encode_target(model, seed, sig, 0, (0, 1), (1, 1), EncodingParams(d=0.15))
        assert solve(lp).status is LPStatus.INFEASIBLE
        ref = grid_min_radius(model, naive_forward_adapter, seed, 0, (0, 1), (1, 1), 0.15)
        assert ref is None

    def test_rejects_misplaced_combo(self, toy_model):
        seed = np.array([0.1, 0.0])
        sig = sig_for(toy_model, seed)
        with pytest.raises(ValueError, match="does not fit"):
            encode_target(toy_model, seed, sig, 0, (0, 5), (1, 1), EncodingParams(d=0.15))

    def test_monotone_in_budget(self):
        rng = np.random.default_rng(10)
        model = random_model(rng, [4, 5, 3, 2], scale=2.0)
        hits = 0
        for _ in range(40):
            seed = rng.uniform(0, 1, 4)
            sig = sig_for(model, seed)
            layer = int(rng.integers(0, 2))
            width = model.hidden_widths[layer]
            combo = tuple(sorted(rng.choice(width, size=2, replace=False).tolist()))
            config = tuple(int(v) for v in rng.integers(0, 2, 2))
            small = solve(encode_target(model, seed, sig, layer, combo, config, EncodingParams(d=0.08)))
            large = solve(encode_target(model, seed, sig, layer, combo, config, EncodingParams(d=0.2)))
            if small.status is LPStatus.OPTIMAL:
                hits += 1
                assert large.status is LPStatus.OPTIMAL
                assert large.objective <= small.objective + 1e-9
        assert hits >= 5

    def test_box_respects_unit_interval(self, toy_model):
        lo, hi = input_box(np.array([0.05, 0.95]), 0.15)
        np.testing.assert_allclose(lo, [0.0, 0.8])
        np.testing.assert_allclose(hi, [0.2, 1.0])


class TestVerifyTarget:
    def test_seed_satisfies_own_restriction(self, toy_model):
        seed = np.array([0.1, 0.0])
        sig = sig_for(toy_model, seed)
        own = tuple(int(b) for b in sig[0])
        assert verify_target(toy_model, seed, 0, (0, 1), own)

    def test_exact_zero_preactivation_fails_activated_bit(self):
        model = model_from([np.eye(2), np.eye(2)], [np.zeros(2), np.zeros(2)])
        candidate = np.array([0.0, 0.5])
        assert not verify_target(model, candidate, 0, (0,), (1,))
        assert verify_target(model, candidate, 0, (0,), (0,))

    def test_mismatch_detected(self, toy_model):
        # Seed activates neither neuron; (1, 1) cannot verify at the seed itself.
        seed = np.array([0.0, 0.0])
        assert not verify_target(toy_model, seed, 0, (0, 1), (1, 1))


class TestEncoderSoundness:
    def test_sampled_optimal_solutions(self):
        rng = np.random.default_rng(2024)
        model = random_model(rng, [6, 5, 4, 3, 3], scale=2.0)
        params = EncodingParams(d=0.15, epsilon=1e-4)
        checked = 0
        attempts = 0
        while checked < 60 and attempts < 600:
            attempts += 1
            seed = rng.uniform(0, 1, 6)
            sig = sig_for(model, seed)
            layer = int(rng.integers(0, 3))
            width = model.hidden_widths[layer]
            combo = tuple(sorted(rng.choice(width, size=2, replace=False).tolist()))
            config = tuple(int(v) for v in rng.integers(0, 2, 2))
            lp = encode_target(model, seed, sig, layer, combo, config, params)
            sol = solve(lp)
            if sol.status is not LPStatus.OPTIMAL:
                continue
            lo, hi = input_box(seed, params.d)
            x_new = np.clip(sol.x[:6], lo, hi)
            _, trace = forward_with_trace(model, x_new)
            real = signature_of(trace)
            pinned = _pattern_with_target(sig, layer, combo, config)
            if any(
                not np.array_equal(real[i], pinned[i]) for i in range(layer + 1)
            ):
                continue  # margin artifact: the LP left the seed's region
            checked += 1
            assert verify_target(model, x_new, layer, combo, config)
            forms = propagate_affine(model, sig, layer)
            for li in range(layer + 1):
                np.testing.assert_allclose(
                    forms[li].coeffs @ x_new + forms[li].consts, trace[li], atol=1e-6
                )
            assert sol.objective == pytest.approx(
                float(np.max(np.abs(x_new - seed))), abs=1e-7
            )
        assert checked >= 30


def _pattern_with_target(sig, layer, combo, config):
    pinned = [bits.copy() for bits in sig]
    for k, b in zip(combo, config):
        pinned[layer][k] = b
    return tuple(pinned)
