"""Combinatorial activation-configuration coverage and robustness test generation
for dense feedforward ReLU classifiers."""

__version__ = "0.1.0"

from .coverage import ActivationSignature, CoverageTable, enumerate_combinations, signature_of
from .encoder import EncodingParams, LayerAffine, encode_target, propagate_affine, verify_target
from .generation import (
    GenBudget,
    GeneratedTest,
    MethodRun,
    RobustnessReport,
    Seed,
    ct_testgen,
    is_adversarial,
    random_run,
    random_testgen,
    robustness_summary,
)
from .lp import LinearProgram, LPSolution, LPStatus, SimplexError, solve
from .model import (
    LayerSpec,
    ModelFormatError,
    NetworkModel,
    classify,
    forward_with_trace,
    load_model,
    param_count,
)
from .report_io import (
    DatasetRecord,
    FormatError,
    read_dataset,
    read_report,
    read_signatures,
    read_suite,
    write_dataset,
    write_model,
    write_report,
    write_signatures,
    write_suite,
)

__all__ = [
    "__version__",
    "ActivationSignature",
    "CoverageTable",
    "enumerate_combinations",
    "signature_of",
    "EncodingParams",
    "LayerAffine",
    "encode_target",
    "propagate_affine",
    "verify_target",
    "GenBudget",
    "GeneratedTest",
    "MethodRun",
    "RobustnessReport",
    "Seed",
    "ct_testgen",
    "is_adversarial",
    "random_run",
    "random_testgen",
    "robustness_summary",
    "LinearProgram",
    "LPSolution",
    "LPStatus",
    "SimplexError",
    "solve",
    "LayerSpec",
    "ModelFormatError",
    "NetworkModel",
    "classify",
    "forward_with_trace",
    "load_model",
    "param_count",
    "DatasetRecord",
    "FormatError",
    "read_dataset",
    "read_report",
    "read_signatures",
    "read_suite",
    "write_dataset",
    "write_model",
    "write_report",
    "write_signatures",
    "write_suite",
]
