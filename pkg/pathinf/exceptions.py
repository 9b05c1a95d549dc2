"""Exceptions raised by the PathInf package."""

from __future__ import annotations


class PathInfError(Exception):
    """Base exception for PathInf errors."""


class DimensionError(PathInfError):
    """Exception for mismatched widths, node counts or out-of-range indices."""


class CapacityError(PathInfError):
    """Exception for candidate state sets exceeding the configured cap."""


class ConfigurationError(PathInfError):
    """Exception for invalid or infeasible configuration."""


class ParseError(PathInfError):
    """Exception for unparseable input files."""


class DegenerateResultError(PathInfError):
    """Exception for results with no usable content, e.g. everything pruned."""


class ContractViolationError(PathInfError):
    """Exception for calls made outside an operation's precondition."""
