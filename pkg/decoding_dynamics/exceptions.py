"""Exceptions raised by the ``decoding-dynamics`` package."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header


class DecodingDynamicsError(Exception):
    """Base class of all the errors of the package.

    Args:
        msg (str): The error message.
        module (str): (Optional) The name of the module that raised the error, used by the CLI.
    """

    default_module = "decoding-dynamics"

    def __init__(self, msg, module=None):
        super().__init__(msg)
        self.module = module or self.default_module


class TraceParseError(DecodingDynamicsError, ValueError):
    """A line of a trace file could not be parsed."""

    default_module = "trace-model"

    def __init__(self, msg, line_number=None):
        if line_number is not None:
            msg = f"Line {line_number}: {msg}"
        super().__init__(msg)
        self.line_number = line_number


class TraceValidationError(DecodingDynamicsError, ValueError):
    """A trace does not satisfy its invariants."""

    default_module = "trace-model"

    def __init__(self, msg, sample_id=None, field=None):
        prefix = []
        if sample_id is not None:
            prefix.append(f"sample '{sample_id}'")
        if field is not None:
            prefix.append(f"field '{field}'")
        if prefix:
            msg = f"Invalid {', '.join(prefix)}: {msg}"
        super().__init__(msg)
        self.sample_id = sample_id
        self.field = field


class DomainError(DecodingDynamicsError, ValueError):
    """An argument is outside the domain of an operation."""


class UndefinedMetricError(DecodingDynamicsError, ValueError):
    """A metric is undefined for the given input."""

    default_module = "metrics"


class ResourceLimitError(DecodingDynamicsError, ValueError):
    """The requested state space exceeds the enumeration cap."""

    default_module = "dist-lab"


class ConvergenceError(DecodingDynamicsError, RuntimeError):
    """An iterative procedure did not converge within its iteration cap."""

    default_module = "editing-chain"

    def __init__(self, msg, last_gap=None, iterations=None):
        super().__init__(msg)
        self.last_gap = last_gap
        self.iterations = iterations


class UnsupportedConfigurationError(DecodingDynamicsError, ValueError):
    """A configuration does not satisfy the preconditions of an operation."""

    default_module = "runtime-model"


class NoSolutionError(DecodingDynamicsError, ValueError):
    """A puzzle has no solution."""

    default_module = "puzzles"


class GenerationError(DecodingDynamicsError, RuntimeError):
    """A random construction exhausted its retry budget."""

    default_module = "puzzles"

    def __init__(self, msg, attempts=None):
        super().__init__(msg)
        self.attempts = attempts


class DecodingStalledError(DecodingDynamicsError, RuntimeError):
    """A threshold decode selected nothing while forced progress was disabled."""

    default_module = "decoder-sim"
