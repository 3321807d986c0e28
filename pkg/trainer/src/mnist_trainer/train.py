"""Training: plain SGD on a dense ReLU MLP, exported to the coverage tool's format."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .formats import analytic_param_count, layers_from_torch, write_model_file

__all__ = ["TrainSpec", "build_mlp", "evaluate", "train_model", "train_and_export"]

logger = logging.getLogger(__name__)

# The two architectures studied with this tool (hidden widths only).
ARCH_SMALL = (64, 32, 64)
ARCH_LARGE = (84, 42, 64, 42, 84)


@dataclass
class TrainSpec:
    hidden: tuple[int, ...] = ARCH_SMALL
    input_dim: int = 784
    classes: int = 10
    epochs: int = 30
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 128
    rng_seed: int = 0
    target_test_acc: float = 0.97  # stop early once reached

    def __post_init__(self):
        if not self.hidden or any(w < 1 for w in self.hidden):
            raise ValueError("hidden widths must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be positive")


def build_mlp(input_dim: int, hidden: tuple[int, ...], classes: int) -> nn.Sequential:
    dims = [input_dim, *hidden]
    modules: list[nn.Module] = []
    for i in range(len(hidden)):
        modules.append(nn.Linear(dims[i], dims[i + 1]))
        modules.append(nn.ReLU())
    modules.append(nn.Linear(dims[-1], classes))
    return nn.Sequential(*modules)


def _tensor_split(x: np.ndarray, y: np.ndarray):
    return torch.from_numpy(np.ascontiguousarray(x)).float(), torch.from_numpy(
        np.ascontiguousarray(y)
    ).long()


@torch.no_grad()
def evaluate(model: nn.Sequential, x: np.ndarray, y: np.ndarray, batch: int = 1024) -> float:
    model.eval()
    tx, ty = _tensor_split(x, y)
    hits = 0
    for i in range(0, len(ty), batch):
        logits = model(tx[i : i + batch])
        hits += int((logits.argmax(dim=1) == ty[i : i + batch]).sum())
    return hits / len(ty)


def train_model(
    spec: TrainSpec,
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    test_y: np.ndarray,
) -> tuple[nn.Sequential, dict]:
    torch.manual_seed(spec.rng_seed)
    model = build_mlp(spec.input_dim, spec.hidden, spec.classes)
    optim = torch.optim.SGD(model.parameters(), lr=spec.lr, momentum=spec.momentum)
    # Mild step decay stabilizes the tail epochs without tuning.
    scheduler = torch.optim.lr_scheduler.StepLR(optim, step_size=10, gamma=0.5)
    loss_fn = nn.CrossEntropyLoss()
    tx, ty = _tensor_split(train_x, train_y)
    order_rng = torch.Generator().manual_seed(spec.rng_seed)

    test_acc = 0.0
    epochs_run = 0
    for epoch in range(1, spec.epochs + 1):
        model.train()
        perm = torch.randperm(len(ty), generator=order_rng)
        for i in range(0, len(ty), spec.batch_size):
            idx = perm[i : i + spec.batch_size]
            optim.zero_grad()
            loss = loss_fn(model(tx[idx]), ty[idx])
            loss.backward()
            optim.step()
        scheduler.step()
        epochs_run = epoch
        test_acc = evaluate(model, test_x, test_y)
        logger.info("epoch %d: test accuracy %.4f", epoch, test_acc)
        if test_acc >= spec.target_test_acc:
            break

    metrics = {
        "epochs_run": epochs_run,
        "train_acc": evaluate(model, train_x, train_y),
        "test_acc": test_acc,
        "param_count": sum(p.numel() for p in model.parameters()),
    }
    return model, metrics


def train_and_export(
    spec: TrainSpec,
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    test_y: np.ndarray,
    out_model,
) -> dict:
    """Train, sanity-check the parameter count, and write the model file."""
    model, metrics = train_model(spec, train_x, train_y, test_x, test_y)
    expected = analytic_param_count(spec.input_dim, spec.hidden, spec.classes)
    if metrics["param_count"] != expected:
        raise RuntimeError(
            f"parameter accounting mismatch: torch {metrics['param_count']}, "
            f"architecture implies {expected}"
        )
    write_model_file(spec.input_dim, layers_from_torch(model), out_model)
    logger.info(
        "exported %s (%d parameters) train_acc=%.4f test_acc=%.4f",
        out_model, expected, metrics["train_acc"], metrics["test_acc"],
    )
    return metrics
