"""Exception hierarchy for convecon.

Everything raised on purpose by this package derives from :class:`EconError`,
so callers can catch one type at the boundary and still discriminate the
failure mode when they need to.
"""

from __future__ import annotations


class EconError(Exception):
    """Base class for all convecon errors."""


class DomainError(EconError):
    """A parameter, strategy, or input file is outside the model's domain."""


class NoInteriorOptimum(EconError):
    """A closed form has no finite interior solution for these parameters.

    Typical trigger: assessment elasticity at least as large as the gain
    exponent it trades off against (for the baseline model, ``beta >= alpha``),
    which makes the first-order condition unsolvable for a positive depth.
    """


class Diverged(EconError):
    """A fixed-point iteration failed to converge within its iteration cap."""


class Unbounded(EconError):
    """The oracle's incumbent ran into the search box's upper bound.

    Raised when the brute-force search finds the cost still decreasing at the
    top edge of the grid on some axis, meaning the true optimum lies outside
    the box (or does not exist at all, e.g. super-linear feedback returns).
    """


class Infeasible(EconError):
    """No candidate satisfied the gain constraint (integer rounding search)."""


class InsufficientDesign(EconError):
    """Session logs do not span enough distinct strategies to identify fits."""
