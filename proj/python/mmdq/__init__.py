"""MMD-optimal quantization of one-dimensional distributions."""

from ._mmdq import (
    EmbeddingModel,
    KernelSpec,
    TargetDistribution,
    check,
    closed_mmd_sq,
    deterministic_optimize,
    gram,
    kernel,
    mmd_sq,
    project_simplex,
    quantize,
    simplex_weights,
    sum_to_one_weights,
)

__all__ = [
    "EmbeddingModel",
    "KernelSpec",
    "TargetDistribution",
    "check",
    "closed_mmd_sq",
    "deterministic_optimize",
    "gram",
    "kernel",
    "mmd_sq",
    "project_simplex",
    "quantize",
    "simplex_weights",
    "sum_to_one_weights",
]
