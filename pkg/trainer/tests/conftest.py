from __future__ import annotations

import numpy as np
import pytest

from mnist_trainer.data import find_mnist_dir


def synthetic_task(rng_seed=0, input_dim=20, classes=3, n_train=600, n_test=300):
    """Linearly-generated labels; easy for a small MLP, no dataset needed."""
    rng = np.random.default_rng(rng_seed)
    teacher = rng.normal(size=(classes, input_dim))
    x = rng.uniform(0.0, 1.0, size=(n_train + n_test, input_dim))
    y = np.argmax(x @ teacher.T, axis=1).astype(np.int64)
    return (x[:n_train], y[:n_train]), (x[n_train:], y[n_train:])


@pytest.fixture(scope="session")
def mnist_dir():
    base = find_mnist_dir()
    if base is None:
        pytest.skip(
            "MNIST IDX files are not available in this environment (no network "
            "access to fetch them); set MNIST_DIR to run the MNIST acceptance tests"
        )
    return base
