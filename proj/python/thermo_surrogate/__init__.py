"""Thermal surrogate toolkit for machine tools."""

from ._core import (
    ModelSpec,
    ThermoError,
    build_plan,
    error_kind_names,
    format_cell,
    init_parameters,
    load_csv,
    parameter_count,
    pearson_matrix,
    predict,
    reconstruct,
    run_cli,
    simulate,
    tcp_drift,
    thermal_strain,
    thermal_stress,
)

__all__ = [
    "ModelSpec",
    "ThermoError",
    "build_plan",
    "error_kind_names",
    "format_cell",
    "init_parameters",
    "load_csv",
    "parameter_count",
    "pearson_matrix",
    "predict",
    "reconstruct",
    "run_cli",
    "simulate",
    "tcp_drift",
    "thermal_strain",
    "thermal_stress",
]
