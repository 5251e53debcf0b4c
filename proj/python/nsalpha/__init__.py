"""Spectral-Galerkin Navier-Stokes / NS-alpha solver in the Stokes eigenbasis."""

from ._core import (
    ArgumentError,
    Basis,
    ConfigError,
    NumericalError,
    __version__,
    config_hash,
    convection,
    fit_rate,
    integrate,
    read_basis,
    run_cli,
    square_basis,
    torus_basis,
    validate_basis,
    write_basis,
)

__all__ = [
    "ArgumentError",
    "Basis",
    "ConfigError",
    "NumericalError",
    "__version__",
    "config_hash",
    "convection",
    "fit_rate",
    "integrate",
    "read_basis",
    "run_cli",
    "square_basis",
    "torus_basis",
    "validate_basis",
    "write_basis",
]
