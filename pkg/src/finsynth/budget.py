"""Element budget shared by all builders.

Every builder that can blow up (exponentials, hom enumeration, free
algebras, sieve enumeration) predicts or bounds its output size and calls
:func:`check` before doing the work.
"""
from __future__ import annotations

import contextlib
import contextvars

from .errors import BudgetExceeded

DEFAULT_BUDGET = 10**6

_budget: contextvars.ContextVar[int] = contextvars.ContextVar("finsynth_budget", default=DEFAULT_BUDGET)


def get_budget() -> int:
    return _budget.get()


def set_budget(n: int) -> None:
    _budget.set(int(n))


@contextlib.contextmanager
def budget(n: int):
    token = _budget.set(int(n))
    try:
        yield
    finally:
        _budget.reset(token)


def check(predicted: int, what: str) -> None:
    limit = _budget.get()
    if predicted > limit:
        raise BudgetExceeded(what, predicted, limit)
