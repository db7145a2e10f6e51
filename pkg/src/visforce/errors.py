# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Exception hierarchy for visforce.

Every error carries the CLI exit code it maps to:

- ``1`` contract violation (bad shapes, bad configuration, unsupported call)
- ``2`` I/O error (dataset or checkpoint files)
- ``3`` numerical failure (non-finite values, failed gradient checks)
"""

from __future__ import annotations

from typing import Dict, Mapping, Optional


class VisforceError(Exception):
    """Base class for all visforce errors."""

    exit_code: int = 1


class ShapeError(VisforceError, ValueError):
    """Tensor shapes are incompatible with the requested operation."""


class ContractViolation(VisforceError, ValueError):
    """A documented precondition was not met by the caller."""


class ConfigurationError(VisforceError, ValueError):
    """Invalid configuration value."""


class UnsupportedOperationError(VisforceError):
    """The operation is not defined for this model variant."""


class NumericalError(VisforceError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""

    exit_code = 3

    def __init__(self, message: str, parameter: Optional[str] = None) -> None:
        super().__init__(message)
        self.parameter = parameter


class GradientCheckError(NumericalError):
    """Finite-difference verification could not be carried out."""


class CheckpointError(VisforceError):
    """A checkpoint file is unreadable or does not fit the model."""

    exit_code = 2

    def __init__(self, message: str, parameter: Optional[str] = None) -> None:
        super().__init__(message)
        self.parameter = parameter


class DatasetError(VisforceError, OSError):
    """One or more recording sets could not be loaded.

    ``errors`` maps set id to the reason it was rejected.
    """

    exit_code = 2

    def __init__(self, message: str, errors: Optional[Mapping[str, str]] = None) -> None:
        super().__init__(message)
        self.errors: Dict[str, str] = dict(errors or {})

    def __str__(self) -> str:
        base = super().__str__()
        if not self.errors:
            return base
        listing = "; ".join(f"{set_id}: {reason}" for set_id, reason in sorted(self.errors.items()))
        return f"{base} ({listing})"
