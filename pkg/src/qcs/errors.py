"""Exceptions and run-wide limits shared by every module."""

import os

DEFAULT_BUDGET = 10**8
DEFAULT_DIGIT_CAP = 10**6


class QCSError(Exception):
    pass


class BudgetError(QCSError):
    """An enumeration would visit more candidates than the configured budget."""

    def __init__(self, message="budget", partial=None):
        super().__init__(message)
        self.partial = partial


class PrecisionError(QCSError):
    """A certified quantity could not be resolved at the available precision."""


class CheckFailed(QCSError):
    """The computation ran, but a mathematical check did not hold."""


def resolve_budget(budget=None):
    """Explicit budget, else the QCS_BUDGET environment variable, else 1e8."""
    if budget is not None:
        return int(budget)
    env = os.environ.get("QCS_BUDGET")
    if env:
        return int(float(env))
    return DEFAULT_BUDGET
