"""Thin exporter bridging trained classifiers into sedkit prediction logs."""

__version__ = "0.1.0"

from .adapter import (
    AdapterConfig,
    AdapterError,
    export_log,
    format_header,
    parse_matrix_names,
    sigmoid,
)

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "export_log",
    "format_header",
    "parse_matrix_names",
    "sigmoid",
]
