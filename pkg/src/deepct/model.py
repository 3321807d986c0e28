"""Dense feedforward ReLU classifiers: loading, validation, traced inference.

The network is the system under test. Hidden layers apply ReLU, the output
layer is affine; classification is argmax over logits (first index wins ties).
Per-neuron pre-activation values are recorded for every hidden layer so the
coverage machinery can binarize activation states.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, TextIO, Union

import numpy as np

__all__ = [
    "LayerSpec",
    "NetworkModel",
    "ModelFormatError",
    "load_model",
    "load_model_file",
    "dump_model",
    "param_count",
    "forward_with_trace",
    "classify",
    "validate_input",
]

# Pre-activation values for each hidden layer, in layer order.
PreActivationTrace = tuple[np.ndarray, ...]

ModelSource = Union[str, Path, bytes, BinaryIO, TextIO]


class ModelFormatError(ValueError):
    """Raised when a model document is malformed or violates an invariant."""


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: row i of `weights` holds the incoming weights of output neuron i."""

    weights: np.ndarray  # shape (out, in)
    bias: np.ndarray  # shape (out,)
    activation: str  # "relu" | "linear"

    @property
    def width(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class NetworkModel:
    """Validated feedforward net. Immutable; safe to share across workers."""

    layers: tuple[LayerSpec, ...]
    input_dim: int
    class_count: int

    @property
    def hidden_layers(self) -> tuple[LayerSpec, ...]:
        return self.layers[:-1]

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return tuple(layer.width for layer in self.hidden_layers)

    def describe(self) -> str:
        widths = [self.input_dim] + [layer.width for layer in self.layers]
        return "-".join(str(w) for w in widths)


def _as_matrix(rows, where: str) -> np.ndarray:
    try:
        mat = np.asarray(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"{where}: weights are not a rectangular numeric matrix") from exc
    if mat.ndim != 2 or mat.size == 0:
        raise ModelFormatError(f"{where}: weights must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(mat)):
        raise ModelFormatError(f"{where}: non-finite weight entry")
    return mat


def _as_vector(values, where: str) -> np.ndarray:
    try:
        vec = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"{where}: bias is not a numeric vector") from exc
    if vec.ndim != 1 or vec.size == 0:
        raise ModelFormatError(f"{where}: bias must be a non-empty vector")
    if not np.all(np.isfinite(vec)):
        raise ModelFormatError(f"{where}: non-finite bias entry")
    return vec


def _reject_constant(token: str):
    raise ModelFormatError(f"forbidden token {token!r} in model document")


def build_model(input_dim: int, layers: list[LayerSpec]) -> NetworkModel:
    """Assemble and validate a NetworkModel from already-parsed layers."""
    if not isinstance(input_dim, int) or input_dim < 1:
        raise ModelFormatError("input_dim must be a positive integer")
    if len(layers) < 2:
        raise ModelFormatError("need at least one hidden layer plus the output layer")
    prev = input_dim
    for i, layer in enumerate(layers):
        rows, cols = layer.weights.shape
        if cols != prev:
            raise ModelFormatError(
                f"layer {i}: weight column count {cols} does not match previous width {prev}"
            )
        if layer.bias.shape[0] != rows:
            raise ModelFormatError(
                f"layer {i}: bias length {layer.bias.shape[0]} != row count {rows}"
            )
        expect = "linear" if i == len(layers) - 1 else "relu"
        if layer.activation != expect:
            raise ModelFormatError(
                f"layer {i}: activation must be {expect!r}, got {layer.activation!r}"
            )
        prev = rows
    return NetworkModel(tuple(layers), input_dim=input_dim, class_count=prev)


def load_model(source: ModelSource) -> NetworkModel:
    """Parse and validate a model document (see FORMATS.md for the schema)."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    for field in ("input_dim", "layers"):
        if field not in doc:
            raise ModelFormatError(f"missing field {field!r}")
    raw_layers = doc["layers"]
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ModelFormatError("'layers' must be a non-empty array")
    layers = []
    for i, entry in enumerate(raw_layers):
        if not isinstance(entry, dict):
            raise ModelFormatError(f"layer {i}: entry must be an object")
        for field in ("weights", "bias", "activation"):
            if field not in entry:
                raise ModelFormatError(f"layer {i}: missing field {field!r}")
        layers.append(
            LayerSpec(
                weights=_as_matrix(entry["weights"], f"layer {i}"),
                bias=_as_vector(entry["bias"], f"layer {i}"),
                activation=entry["activation"],
            )
        )
    return build_model(doc["input_dim"], layers)


def load_model_file(path: str | Path) -> NetworkModel:
    return load_model(path)


def dump_model(model: NetworkModel) -> dict:
    """Plain-dict form of a model, ready for canonical JSON serialization."""
    return {
        "input_dim": model.input_dim,
        "layers": [
            {
                "weights": [[float(v) for v in row] for row in layer.weights],
                "bias": [float(v) for v in layer.bias],
                "activation": layer.activation,
            }
            for layer in model.layers
        ],
    }


def param_count(model: NetworkModel) -> int:
    """Total trainable scalars: per layer, rows*cols weights plus rows biases."""
    return sum(layer.weights.size + layer.bias.size for layer in model.layers)


def validate_input(model: NetworkModel, x: np.ndarray, *, where: str = "input") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ValueError(f"{where}: expected shape ({model.input_dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{where}: non-finite component")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"{where}: components must lie in [0, 1]")
    return x


def forward_with_trace(model: NetworkModel, x: np.ndarray) -> tuple[np.ndarray, PreActivationTrace]:
    """Run the net on one input, returning logits and all hidden pre-activations."""
    a = np.asarray(x, dtype=np.float64)
    if a.shape != (model.input_dim,):
        raise ValueError(f"input shape {a.shape} does not match input_dim {model.input_dim}")
    trace = []
    for layer in model.hidden_layers:
        pre = layer.weights @ a + layer.bias
        trace.append(pre)
        a = np.maximum(pre, 0.0)
    out = model.layers[-1]
    logits = out.weights @ a + out.bias
    return logits, tuple(trace)


def classify(model: NetworkModel, x: np.ndarray) -> int:
    """Predicted class: argmax over logits, lowest index on ties."""
    logits, _ = forward_with_trace(model, x)
    return int(np.argmax(logits))
