"""Encode coverage targets as linear programs over a seed's activation region.

Within one ReLU activation pattern the network is affine in the input, so
"make combination theta in layer l take configuration c, staying within an
L-inf budget d of seed x" becomes a pure LP: pin every non-target neuron in
layers 1..l to the seed's activation bit, require the target bits on the
combination, and minimize the perturbation radius. Pinning sacrifices targets
reachable only outside the seed's region (reported Infeasible); strict
activation is relaxed to a margin epsilon, so `verify_target` must confirm
candidates against the real forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .coverage import ActivationSignature, signature_of
from .lp import LinearProgram
from .model import NetworkModel, forward_with_trace

__all__ = [
    "EncodingParams",
    "LayerAffine",
    "propagate_affine",
    "affine_range_over_box",
    "encode_target",
    "verify_target",
]


@dataclass(frozen=True)
class EncodingParams:
    """d: L-inf budget (hard box constraint); epsilon: strict-activation margin."""

    d: float
    epsilon: float = 1e-4

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"budget d must be positive, got {self.d}")
        if not 0 < self.epsilon < self.d:
            raise ValueError(f"epsilon must satisfy 0 < epsilon < d, got {self.epsilon}")


class LayerAffine(NamedTuple):
    """Affine pre-activations of one layer: row k maps x to coeffs[k].x + consts[k]."""

    coeffs: np.ndarray  # (width, input_dim)
    consts: np.ndarray  # (width,)


def propagate_affine(
    model: NetworkModel, pattern: ActivationSignature, up_to_layer: int
) -> list[LayerAffine]:
    """Affine form of every hidden pre-activation in layers 0..up_to_layer.

    Layer 0 forms are the raw first-layer rows; deeper layers compose through
    the pattern: a deactivated neuron contributes zero downstream regardless of
    its form.
    """
    hidden = model.hidden_layers
    if not 0 <= up_to_layer < len(hidden):
        raise ValueError(f"layer {up_to_layer} out of range for {len(hidden)} hidden layers")
    forms: list[LayerAffine] = []
    for i in range(up_to_layer + 1):
        w, b = hidden[i].weights, hidden[i].bias
        if i == 0:
            forms.append(LayerAffine(w.copy(), b.copy()))
            continue
        gate = np.asarray(pattern[i - 1], dtype=np.float64)
        prev = forms[i - 1]
        coeffs = w @ (gate[:, None] * prev.coeffs)
        consts = w @ (gate * prev.consts) + b
        forms.append(LayerAffine(coeffs, consts))
    return forms


def input_box(seed: np.ndarray, d: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-component feasible interval: [0,1] intersected with the L-inf ball."""
    seed = np.asarray(seed, dtype=np.float64)
    return np.maximum(0.0, seed - d), np.minimum(1.0, seed + d)


def affine_range_over_box(
    form: LayerAffine, lo: np.ndarray, hi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact per-neuron (min, max) of affine pre-activations over the input box."""
    pos = np.clip(form.coeffs, 0.0, None)
    neg = np.clip(form.coeffs, None, 0.0)
    mins = form.consts + pos @ lo + neg @ hi
    maxs = form.consts + pos @ hi + neg @ lo
    return mins, maxs


def encode_target(
    model: NetworkModel,
    seed: np.ndarray,
    seed_sig: ActivationSignature,
    layer: int,
    combo: tuple[int, ...],
    config: tuple[int, ...],
    params: EncodingParams,
) -> LinearProgram:
    """Build the LP for one (layer, combination, configuration) target.

    Variables are x' (input_dim of them) plus one radius variable m.
    Constraints: the [0,1]-clipped budget box as variable bounds, the L-inf
    link rows -m <= x'_j - x_j <= m, pattern pins for every non-target neuron
    in layers 0..layer, and the target bits on the combination. Objective:
    minimize m. An activated bit requires form >= epsilon; a deactivated bit
    requires form <= 0.
    """
    n_hidden = len(model.hidden_layers)
    if not 0 <= layer < n_hidden:
        raise ValueError(f"layer {layer} out of range for {n_hidden} hidden layers")
    width = model.hidden_widths[layer]
    combo = tuple(int(k) for k in combo)
    if len(combo) != len(config):
        raise ValueError("combination and configuration lengths differ")
    if any(not 0 <= k < width for k in combo):
        raise ValueError(f"combination {combo} does not fit layer {layer} of width {width}")

    seed = np.asarray(seed, dtype=np.float64)
    n_in = model.input_dim
    forms = propagate_affine(model, seed_sig, layer)
    eps = params.epsilon

    rows = []
    rhs = []

    def add(coeffs_x: np.ndarray, coeff_m: float, bound: float):
        rows.append(np.concatenate([coeffs_x, [coeff_m]]))
        rhs.append(bound)

    # L-inf link: x'_j - m <= x_j and -x'_j - m <= -x_j.
    for j in range(n_in):
        e = np.zeros(n_in)
        e[j] = 1.0
        add(e, -1.0, seed[j])
        add(-e, -1.0, -seed[j])

    def pin(form_c: np.ndarray, form_b: float, bit: int):
        if bit:
            add(-form_c, 0.0, form_b - eps)  # form >= eps
        else:
            add(form_c, 0.0, -form_b)  # form <= 0

    targeted = dict(zip(combo, (int(b) for b in config)))
    for li in range(layer + 1):
        coeffs, consts = forms[li]
        bits = np.asarray(seed_sig[li])
        for k in range(coeffs.shape[0]):
            if li == layer and k in targeted:
                pin(coeffs[k], float(consts[k]), targeted[k])
            else:
                pin(coeffs[k], float(consts[k]), int(bits[k]))

    lo_box, hi_box = input_box(seed, params.d)
    lo = np.concatenate([lo_box, [0.0]])
    hi = np.concatenate([hi_box, [np.inf]])
    c = np.zeros(n_in + 1)
    c[-1] = 1.0
    return LinearProgram(c=c, a_ub=np.array(rows), b_ub=np.array(rhs), lo=lo, hi=hi)


def verify_target(
    model: NetworkModel,
    candidate: np.ndarray,
    layer: int,
    combo: tuple[int, ...],
    config: tuple[int, ...],
) -> bool:
    """True iff the real forward pass realizes the configuration on the combination.

    The LP's epsilon relaxation and pattern pinning can disagree with reality;
    a pre-activation of exactly 0 at an activated-bit neuron fails here.
    """
    _, trace = forward_with_trace(model, candidate)
    bits = signature_of(trace)[layer]
    return all(int(bits[k]) == int(b) for k, b in zip(combo, config))
