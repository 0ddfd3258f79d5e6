"""Exception hierarchy.

The CLI maps :class:`InputError` subclasses to exit code 2 and
:class:`CheckFailed` subclasses to exit code 1.
"""

from __future__ import annotations


class SolvSchwartzError(Exception):
    """Base class for all package errors."""


class InputError(SolvSchwartzError, ValueError):
    """Malformed input: bad shapes, schema violations, unknown labels."""


class GroupDefinitionError(InputError):
    """A group-definition file could not be parsed or violates the schema."""


class UnsupportedDimensionError(InputError):
    """Quadrature requested in a dimension the tensor rule does not support."""


class UnsupportedDirectionError(InputError):
    """Pure exponential requested for a direction mixing 𝔠 and 𝔫."""


class DepthExceededError(InputError):
    """Total derivative order would exceed the finite-difference limit."""


class CheckFailed(SolvSchwartzError):
    """A mathematical check failed; ``witness`` holds the offending data."""

    def __init__(self, message: str, witness: object | None = None):
        super().__init__(message)
        self.witness = witness


class AlgebraValidationError(CheckFailed, ValueError):
    """Structure constants violate antisymmetry or the Jacobi identity."""


class NilradicalError(CheckFailed, ValueError):
    """The declared nilradical fails one of the required axioms."""

    def __init__(self, axiom: str, message: str, witness: object | None = None):
        super().__init__(f"{axiom}: {message}", witness)
        self.axiom = axiom


class ConstructionError(CheckFailed):
    """The realization could not be built (rank deficiency, inconsistency)."""


class ContractViolation(CheckFailed):
    """An internal consistency check failed (e.g. CBH outside a nilpotent context)."""


class RefusalError(CheckFailed):
    """An operation refused to run because its preconditions cannot be certified."""


class SlowGrowthError(CheckFailed):
    """A function failed the slowly-increasing test."""


class NonMemberError(CheckFailed):
    """A function failed the membership diagnostic where membership is required."""
