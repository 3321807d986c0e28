"""Seed export: correctly-classified test items in the coverage tool's dataset format."""

from __future__ import annotations

import logging

import numpy as np
import torch

from .formats import format_classify, format_forward, read_model_file, write_dataset_file

__all__ = ["cross_check_forward", "export_seeds"]

logger = logging.getLogger(__name__)


def _torch_from_doc(doc: dict) -> torch.nn.Sequential:
    modules: list[torch.nn.Module] = []
    layers = doc["layers"]
    for i, layer in enumerate(layers):
        w = torch.tensor(layer["weights"], dtype=torch.float32)
        b = torch.tensor(layer["bias"], dtype=torch.float32)
        lin = torch.nn.Linear(w.shape[1], w.shape[0])
        with torch.no_grad():
            lin.weight.copy_(w)
            lin.bias.copy_(b)
        modules.append(lin)
        if i < len(layers) - 1:
            modules.append(torch.nn.ReLU())
    return torch.nn.Sequential(*modules)


@torch.no_grad()
def cross_check_forward(doc: dict, xs: np.ndarray, tol: float = 1e-4) -> float:
    """Max |logit difference| between the framework pass and the file semantics.

    Raises when the two evaluations drift beyond `tol`; float32 framework
    arithmetic vs float64 file semantics stays orders of magnitude below it.
    """
    model = _torch_from_doc(doc)
    model.eval()
    worst = 0.0
    for x in xs:
        framework = model(torch.from_numpy(np.asarray(x)).float().unsqueeze(0))[0].numpy()
        reference = format_forward(doc, x)
        worst = max(worst, float(np.max(np.abs(framework - reference))))
    if worst > tol:
        raise RuntimeError(
            f"framework and file-format forward passes disagree by {worst:.3e} (tol {tol:.0e})"
        )
    return worst


def export_seeds(
    model_file,
    images: np.ndarray,
    labels: np.ndarray,
    count: int,
    out_path,
    rng_seed: int = 0,
    cross_check_samples: int = 100,
) -> list[str]:
    """Sample `count` test items the exported model classifies correctly.

    The file-format semantics decide correctness (that is what downstream
    tooling will recompute), and the framework forward pass is cross-checked
    against it on a sample first. Returns the exported ids.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    doc = read_model_file(model_file)
    rng = np.random.default_rng(rng_seed)
    if len(images) and cross_check_samples:
        sample = images[rng.choice(len(images), size=min(cross_check_samples, len(images)), replace=False)]
        worst = cross_check_forward(doc, sample)
        logger.info("forward cross-check on %d samples: max diff %.3e", len(sample), worst)

    order = rng.permutation(len(images))
    records = []
    for idx in order:
        if len(records) >= count:
            break
        x = images[idx]
        label = int(labels[idx])
        if format_classify(doc, x) == label:
            records.append((f"mnist-{idx}", x, label))
    if len(records) < count:
        raise RuntimeError(
            f"only {len(records)} of the requested {count} items are classified correctly"
        )
    write_dataset_file(records, out_path)
    logger.info("wrote %d seeds to %s", len(records), out_path)
    return [rid for rid, _, _ in records]
