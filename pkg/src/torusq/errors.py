"""Exception types raised by torusq.

Two families: ValueError subclasses signal that the *input* violates a
documented precondition, RuntimeError subclasses signal that a *computation*
exceeded its budget or tripped an internal consistency check.
"""

from __future__ import annotations


class NotSaturated(ValueError):
    """A queue deployment fails the saturation requirement (some w_e < psi)."""


class ThresholdViolated(ValueError):
    """Inputs to the unsaturated optimizer fail a precondition.

    Covers non-uniform road totals, odd round length, and a round length
    at or below the feasibility threshold.
    """


class EmptyCycleSet(ValueError):
    """An operation that needs at least one conflict cycle received none."""


class SlackExceeded(ValueError):
    """A requested shift update would push some |s_e| beyond psi/2."""


class BudgetExceeded(RuntimeError):
    """An exhaustive search hit its configured work cap before finishing."""


class NoCycleFound(RuntimeError):
    """Cycle extraction failed to locate a binding conflict cycle."""


class NonTermination(RuntimeError):
    """An iterative optimizer exceeded its round cap without converging."""


class InternalInvariantViolation(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""
