"""Writers for the coverage tool's on-disk formats, plus a reference evaluator.

This package talks to the coverage tool only through its documented files
(model JSON, dataset JSON lines), so the format semantics are reimplemented
here from the format description: per layer `W @ a + b`, ReLU between hidden
layers, final layer affine, class = argmax with the lowest index winning ties.
The reference evaluator is what exported artifacts are validated against.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = [
    "layers_from_torch",
    "write_model_file",
    "read_model_file",
    "write_dataset_file",
    "format_forward",
    "format_classify",
    "analytic_param_count",
    "file_param_count",
]


def layers_from_torch(model) -> list[dict]:
    """Extract dense layers from a torch Sequential of Linear/ReLU modules."""
    import torch

    layers = []
    linears = [m for m in model.modules() if isinstance(m, torch.nn.Linear)]
    for i, lin in enumerate(linears):
        layers.append(
            {
                "weights": [[float(v) for v in row] for row in lin.weight.detach().cpu().numpy()],
                "bias": [float(v) for v in lin.bias.detach().cpu().numpy()],
                "activation": "linear" if i == len(linears) - 1 else "relu",
            }
        )
    return layers


def write_model_file(input_dim: int, layers: list[dict], path) -> None:
    doc = {"input_dim": int(input_dim), "layers": layers}
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, allow_nan=False), encoding="utf-8"
    )


def read_model_file(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_dataset_file(records, path) -> None:
    """records: iterable of (id, x vector in [0,1], label)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rid, x, label in records:
            doc = {"id": str(rid), "x": [float(v) for v in x], "label": int(label)}
            fh.write(json.dumps(doc, sort_keys=True, allow_nan=False) + "\n")


def _doc_arrays(doc: dict):
    return [
        (np.asarray(layer["weights"], dtype=np.float64), np.asarray(layer["bias"], dtype=np.float64))
        for layer in doc["layers"]
    ]


def format_forward(doc: dict, x: np.ndarray) -> np.ndarray:
    """Logits of one input under the documented file semantics (float64)."""
    a = np.asarray(x, dtype=np.float64)
    arrays = _doc_arrays(doc)
    for w, b in arrays[:-1]:
        a = np.maximum(w @ a + b, 0.0)
    w, b = arrays[-1]
    return w @ a + b


def format_classify(doc: dict, x: np.ndarray) -> int:
    logits = format_forward(doc, x)
    return int(np.argmax(logits))


def analytic_param_count(input_dim: int, hidden: tuple[int, ...], classes: int) -> int:
    widths = [input_dim, *hidden, classes]
    return sum(o * i + o for i, o in zip(widths[:-1], widths[1:]))


def file_param_count(doc: dict) -> int:
    total = 0
    for layer in doc["layers"]:
        rows = len(layer["weights"])
        cols = len(layer["weights"][0])
        total += rows * cols + len(layer["bias"])
    return total
