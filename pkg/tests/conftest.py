from __future__ import annotations

import numpy as np
import pytest

from deepct.model import LayerSpec, build_model


def model_from(weight_mats, biases):
    """Assemble a model from raw arrays; last layer linear, others ReLU."""
    layers = []
    for i, (w, b) in enumerate(zip(weight_mats, biases)):
        layers.append(
            LayerSpec(
                weights=np.asarray(w, dtype=np.float64),
                bias=np.asarray(b, dtype=np.float64),
                activation="linear" if i == len(weight_mats) - 1 else "relu",
            )
        )
    return build_model(int(np.asarray(weight_mats[0]).shape[1]), layers)


def random_model(rng, widths, scale=1.0):
    """Random dense net, weights scaled so activations stay near the ReLU boundary."""
    mats, biases = [], []
    for fan_in, out in zip(widths[:-1], widths[1:]):
        mats.append(rng.uniform(-0.5, 0.5, size=(out, fan_in)) * scale / np.sqrt(fan_in))
        biases.append(rng.uniform(-0.5, 0.5, size=out) * scale / np.sqrt(fan_in))
    return model_from(mats, biases)


def two_neuron_toy(bias=(-0.05, -0.05)):
    """2 inputs, one 2-neuron hidden layer (identity weights), identity output."""
    return model_from(
        [np.eye(2), np.eye(2)],
        [np.asarray(bias, dtype=np.float64), np.zeros(2)],
    )


@pytest.fixture
def toy_model():
    return two_neuron_toy()


TABLE1_ROWS = [
    (0, 0, 0, 0),
    (0, 1, 0, 1),
    (1, 0, 1, 0),
    (1, 1, 1, 1),
]


def table1_signatures():
    return [(np.array(row, dtype=np.uint8),) for row in TABLE1_ROWS]
