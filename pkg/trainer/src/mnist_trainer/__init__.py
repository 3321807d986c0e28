"""Train dense ReLU MLPs on MNIST and export them in the coverage tool's formats."""

__version__ = "0.1.0"

from .data import MnistSplit, find_mnist_dir, load_mnist
from .export import cross_check_forward, export_seeds
from .formats import (
    analytic_param_count,
    file_param_count,
    format_classify,
    format_forward,
    layers_from_torch,
    read_model_file,
    write_dataset_file,
    write_model_file,
)
from .train import ARCH_LARGE, ARCH_SMALL, TrainSpec, build_mlp, train_and_export, train_model

__all__ = [
    "__version__",
    "MnistSplit",
    "find_mnist_dir",
    "load_mnist",
    "cross_check_forward",
    "export_seeds",
    "analytic_param_count",
    "file_param_count",
    "format_classify",
    "format_forward",
    "layers_from_torch",
    "read_model_file",
    "write_dataset_file",
    "write_model_file",
    "ARCH_LARGE",
    "ARCH_SMALL",
    "TrainSpec",
    "build_mlp",
    "train_and_export",
    "train_model",
]
