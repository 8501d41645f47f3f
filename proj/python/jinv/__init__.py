"""Joint regularization and PDE-constrained inversion (C++ core)."""

from ._jinv import (
    ConfigError,
    P1Space,
    Regularizer,
    SolverError,
    check_config,
    fd_checks,
    hessian_spectrum,
    run_experiment,
)

__all__ = [
    "ConfigError",
    "P1Space",
    "Regularizer",
    "SolverError",
    "check_config",
    "fd_checks",
    "hessian_spectrum",
    "run_experiment",
]
