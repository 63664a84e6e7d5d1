"""Python access to the steam generator ensemble controller."""

from ._core import (
    ConfigError,
    ContractError,
    Error,
    InfeasibleError,
    IoError,
    RunReport,
    default_config_json,
    emit_outputs,
    identify,
    run,
    saturation,
    solve_qp,
    validate_config,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "Error",
    "InfeasibleError",
    "IoError",
    "RunReport",
    "default_config_json",
    "emit_outputs",
    "identify",
    "run",
    "saturation",
    "solve_qp",
    "validate_config",
]
