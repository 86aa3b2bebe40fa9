"""Exception types shared across the package."""


class CasgepError(Exception):
    """Base class for all package errors."""


class UnknownIdError(CasgepError, KeyError):
    """An entity, interaction or location id does not resolve."""

    def __str__(self):
        return Exception.__str__(self)


class EmptyPrefixError(CasgepError, ValueError):
    """A restriction time precedes the first grid time."""


class MissingSlotError(CasgepError, KeyError):
    """An entity state layout lacks a requested slot."""

    def __str__(self):
        return Exception.__str__(self)


class DimensionError(CasgepError, ValueError):
    """Array or mapping shapes disagree."""


class ProbabilityError(CasgepError, ValueError):
    """A vector that should be a probability is not one."""


class OffGridError(CasgepError, ValueError):
    """A time is not on the trace grid."""


class NonConvergenceError(CasgepError, RuntimeError):
    """An optimizer exhausted its iteration budget.

    ``best`` holds the best iterate found and ``grad_norm`` its projected
    gradient norm.
    """

    def __init__(self, message, best=None, grad_norm=None):
        super().__init__(message)
        self.best = best
        self.grad_norm = grad_norm


class BoundaryCollapseError(NonConvergenceError):
    """Iterates were driven onto the boundary of the simplex."""


class HypothesisError(CasgepError, ValueError):
    """Hypotheses of the power-law result do not hold at the given point."""


class ConstraintError(CasgepError, ValueError):
    """Parameters violate a constructor's stated constraints."""


class NoGoodLocationError(CasgepError, ValueError):
    """No grid location is good for the requested commodity."""


class NonConstantLifeCostError(CasgepError, ValueError):
    """Life cost depends on location where it must not."""


class SmallnessError(CasgepError, ValueError):
    """A minimum cost or loss is too large for the representable rents."""


class BudgetExceededError(CasgepError, RuntimeError):
    """An enumeration would exceed its configured size budget."""


class ScenarioError(CasgepError, ValueError):
    """Malformed scenario input; ``pointer`` is a JSON pointer to the field."""

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer

    def __str__(self):
        where = self.pointer or "/"
        return f"{where}: {self.args[0]}"
