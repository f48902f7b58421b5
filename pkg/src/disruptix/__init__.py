"""Disruption (CD) index computation with zero-reference artefact diagnostics."""

from .cdindex import CdConfig, CdResult, cd, cd_all, yearly_mean
from .errors import DisruptixError, NumericError, SchemaError
from .graph import CitationGraph, Schema, load_graph, validate_temporal

__version__ = "0.1.0"

__all__ = [
    "CdConfig",
    "CdResult",
    "CitationGraph",
    "DisruptixError",
    "NumericError",
    "Schema",
    "SchemaError",
    "cd",
    "cd_all",
    "load_graph",
    "validate_temporal",
    "yearly_mean",
]
