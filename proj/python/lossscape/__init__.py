"""Loss-landscape tools backed by the C++ core."""

from ._core import (
    Error,
    NetworkSpec,
    component_stats,
    init_params,
    kpca,
    load_mnist,
    loss,
    loss_and_grad,
    normalize_config,
    read_solutions,
    run_synth,
    shell_stats,
    synthetic_gradient,
    synthetic_minima,
    synthetic_path,
    synthetic_value,
    write_solutions,
)

__all__ = [
    "Error",
    "NetworkSpec",
    "component_stats",
    "init_params",
    "kpca",
    "load_mnist",
    "loss",
    "loss_and_grad",
    "normalize_config",
    "read_solutions",
    "run_synth",
    "shell_stats",
    "synthetic_gradient",
    "synthetic_minima",
    "synthetic_path",
    "synthetic_value",
    "write_solutions",
]
