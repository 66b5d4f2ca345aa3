"""
Alpha-cut fuzzy numbers and the interval arithmetic they are built on.

A fuzzy number is stored as its cuts on a uniform alpha grid.  Each cut is an
``Interval`` and arithmetic between fuzzy numbers is performed levelwise with
the standard interval rules:

    [a, b] + [c, d] = [a + c, b + d]
    [a, b] - [c, d] = [a - d, b - c]
    k [a, b]        = [ka, kb] (k >= 0) or [kb, ka] (k < 0)
    [a, b] * [c, d] = [min(P), max(P)],  P = {ac, ad, bc, bd}
    [a, b] / [c, d] = [min(Q), max(Q)],  Q = {a/c, a/d, b/c, b/d},  0 not in [c, d]

Interval endpoints may be numpy arrays, in which case every operation is
applied elementwise.  This is how whole sample grids are propagated at once.
"""
import logging
from dataclasses import dataclass

import numpy as np

from fuzzyheat.errors import FuzzyDomainError, UsageError

logger = logging.getLogger(__name__)

TOLERANCE = 1e-12
DEFAULT_LEVEL_COUNT = 11


def _unwrap(value):
    if np.ndim(value) == 0:
        return float(value)
    return np.asarray(value, dtype=float)


def alpha_grid(level_count=DEFAULT_LEVEL_COUNT):
    """ uniform alpha levels 0, 1/(n-1), ..., 1 """
    if level_count < 2:
        raise UsageError(f"level_count must be at least 2, got {level_count}")
    return np.linspace(0.0, 1.0, int(level_count))


@dataclass(frozen=True, eq=False)
class Interval:
    """
    Closed interval [lo, hi]

    Parameters
    ----------
    lo : float or ndarray
        Lower endpoint
    hi : float or ndarray
        Upper endpoint, must not lie below ``lo`` by more than ``TOLERANCE``
    """

    lo: object
    hi: object

    def __post_init__(self):
        lo, hi = _unwrap(self.lo), _unwrap(self.hi)
        if np.any(lo > hi + TOLERANCE):
            raise FuzzyDomainError(
                f"interval lower endpoint exceeds upper endpoint ({np.max(lo - hi):.3g})",
                offending=(lo, hi),
            )
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, value):
        return cls(value, value)

    @staticmethod
    def _coerce(other):
        if isinstance(other, Interval):
            return other
        return Interval.point(other)

    @property
    def width(self):
        return _unwrap(self.hi - self.lo)

    @property
    def midpoint(self):
        return _unwrap(0.5 * (self.lo + self.hi))

    def contains(self, value, tol=TOLERANCE):
        return bool(np.all((self.lo - tol <= value) & (value <= self.hi + tol)))

    def issubset(self, other, tol=TOLERANCE):
        return bool(np.all((other.lo - tol <= self.lo) & (self.hi <= other.hi + tol)))

    def straddles_zero(self):
        return bool(np.any((self.lo <= 0.0) & (self.hi >= 0.0)))

    def __add__(self, other):
        other = self._coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def scale(self, k):
        """ multiply by the crisp number k, swapping endpoints when k < 0 """
        if np.ndim(k) == 0:
            if k >= 0:
                return Interval(k * self.lo, k * self.hi)
            return Interval(k * self.hi, k * self.lo)
        k = np.asarray(k, dtype=float)
        a, b = k * self.lo, k * self.hi
        return Interval(np.minimum(a, b), np.maximum(a, b))

    def __mul__(self, other):
        if not isinstance(other, Interval):
            return self.scale(other)
        candidates = np.stack(
            np.broadcast_arrays(
                self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi
            )
        )
        return Interval(candidates.min(axis=0), candidates.max(axis=0))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.straddles_zero():
            raise FuzzyDomainError(
                "division by an interval containing zero", offending=(other.lo, other.hi)
            )
        candidates = np.stack(
            np.broadcast_arrays(
                self.lo / other.lo, self.lo / other.hi, self.hi / other.lo, self.hi / other.hi
            )
        )
        return Interval(candidates.min(axis=0), candidates.max(axis=0))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def power(self, exponent):
        """ range of v**exponent for v in the interval (constant exponent) """
        lo, hi = np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)
        if float(exponent).is_integer():
            n = int(exponent)
            if n == 0:
                return Interval.point(np.ones_like(lo) if lo.ndim else 1.0)
            if n < 0:
                return Interval.point(1.0) / self.power(-n)
            a, b = lo**n, hi**n
            if n % 2:
                return Interval(a, b)
            low = np.where((lo <= 0.0) & (hi >= 0.0), 0.0, np.minimum(a, b))
            return Interval(low, np.maximum(a, b))
        if np.any(lo < 0.0) or (exponent < 0 and np.any(lo <= 0.0)):
            raise FuzzyDomainError(
                f"fractional power {exponent} of an interval reaching below zero",
                offending=(self.lo, self.hi),
            )
        a, b = lo**exponent, hi**exponent
        return Interval(np.minimum(a, b), np.maximum(a, b))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


@dataclass(frozen=True)
class FuzzyValidity:
    """
    Verdict of ``validate_fuzzy``

    Attributes
    ----------
    valid : bool
        True when the levels form a fuzzy number
    alpha : float or None
        First alpha level at which a violation was found
    reason : str
        ``"crossing"`` (lo > hi), ``"lower decreased"``, ``"upper increased"``
        or ``""`` when valid
    """

    valid: bool
    alpha: float = None
    reason: str = ""

    def __bool__(self):
        return self.valid


class FuzzyRejection(FuzzyDomainError):
    """ candidate endpoint samples do not form a fuzzy number """

    def __init__(self, verdict):
        super().__init__(f"not a fuzzy number: {verdict.reason} at alpha={verdict.alpha:g}")
        self.verdict = verdict


def validate_fuzzy(candidate, tol=TOLERANCE):
    """
    Check that alpha-indexed intervals form a fuzzy number.

    Parameters
    ----------
    candidate : list of (float, Interval) or (float, (lo, hi))
        Levels sorted by alpha
    tol : float
        Absolute slack on every comparison

    Returns
    -------
    FuzzyValidity
    """
    if not candidate:
        raise UsageError("validate_fuzzy needs at least one level")
    previous = None
    for alpha, cut in candidate:
        lo, hi = (cut.lo, cut.hi) if isinstance(cut, Interval) else cut
        if lo > hi + tol:
            return FuzzyValidity(False, float(alpha), "crossing")
        if previous is not None:
            if lo < previous[0] - tol:
                return FuzzyValidity(False, float(alpha), "lower decreased")
            if hi > previous[1] + tol:
                return FuzzyValidity(False, float(alpha), "upper increased")
        previous = (lo, hi)
    return FuzzyValidity(True)


class AlphaLevelFuzzyNumber(object):
    """
    Fuzzy number discretized on an alpha grid

    Parameters
    ----------
    alphas : array_like
        Strictly increasing levels, first 0 and last 1
    lower : array_like
        Lower cut endpoints, nondecreasing in alpha
    upper : array_like
        Upper cut endpoints, nonincreasing in alpha

    Attributes
    ----------
    levels : list of (float, Interval)
        The stored cuts
    """

    def __init__(self, alphas, lower, upper):
        alphas = np.asarray(alphas, dtype=float)
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if alphas.ndim != 1 or alphas.size < 2 or lower.shape != alphas.shape or upper.shape != alphas.shape:
            raise UsageError("alphas, lower and upper must be 1-d arrays of equal length >= 2")
        if alphas[0] != 0.0 or alphas[-1] != 1.0 or np.any(np.diff(alphas) <= 0.0):
            raise UsageError("alpha levels must increase strictly from 0 to 1")
        verdict = validate_fuzzy(list(zip(alphas, zip(lower, upper))))
        if not verdict:
            raise FuzzyRejection(verdict)
        self.alphas = alphas
        self.lower = lower
        self.upper = upper
        for array in (self.alphas, self.lower, self.upper):
            array.setflags(write=False)

    @classmethod
    def crisp(cls, value, level_count=DEFAULT_LEVEL_COUNT):
        alphas = alpha_grid(level_count)
        return cls(alphas, np.full_like(alphas, value), np.full_like(alphas, value))

    @property
    def levels(self):
        return [(float(a), Interval(lo, hi)) for a, lo, hi in zip(self.alphas, self.lower, self.upper)]

    @property
    def level_count(self):
        return self.alphas.size

    @property
    def support(self):
        return Interval(self.lower[0], self.upper[0])

    @property
    def core(self):
        return Interval(self.lower[-1], self.upper[-1])

    def is_crisp(self, tol=TOLERANCE):
        return bool(np.all(self.upper - self.lower <= tol))

    def is_positive(self):
        return bool(self.lower[0] > 0.0)

    def is_negative(self):
        return bool(self.upper[0] < 0.0)

    def is_nonnegative(self):
        return bool(self.lower[0] >= 0.0)

    def is_nonpositive(self):
        return bool(self.upper[0] <= 0.0)

    def cut(self, alpha):
        """ alpha-cut, interpolated linearly between stored levels """
        if not 0.0 <= alpha <= 1.0:
            raise UsageError(f"alpha must lie in [0, 1], got {alpha}")
        return Interval(
            float(np.interp(alpha, self.alphas, self.lower)),
            float(np.interp(alpha, self.alphas, self.upper)),
        )

    def as_interval(self):
        """ all levels as one array-valued Interval """
        return Interval(self.lower, self.upper)

    def _same_grid(self, other):
        if not np.array_equal(self.alphas, other.alphas):
            raise UsageError(
                f"alpha grids differ ({self.level_count} vs {other.level_count} levels)"
            )

    def _from_interval(self, interval):
        return AlphaLevelFuzzyNumber(
            self.alphas,
            np.broadcast_to(interval.lo, self.alphas.shape),
            np.broadcast_to(interval.hi, self.alphas.shape),
        )

    def __add__(self, other):
        return fuzzy_arithmetic("add", self, other)

    def __sub__(self, other):
        return fuzzy_arithmetic("sub", self, other)

    def __mul__(self, other):
        if isinstance(other, AlphaLevelFuzzyNumber):
            return fuzzy_arithmetic("mul", self, other)
        return fuzzy_arithmetic("scale", self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return fuzzy_arithmetic("div", self, other)

    def __neg__(self):
        return fuzzy_arithmetic("scale", self, -1.0)

    def __repr__(self):
        return (
            f"AlphaLevelFuzzyNumber(support=[{self.lower[0]:g}, {self.upper[0]:g}], "
            f"core=[{self.lower[-1]:g}, {self.upper[-1]:g}], levels={self.level_count})"
        )


def fuzzy_arithmetic(op, a, b):
    """
    Levelwise interval arithmetic between fuzzy numbers.

    Parameters
    ----------
    op : {"add", "sub", "scale", "mul", "div"}
        The operation.  ``"scale"`` takes a crisp number as ``b``.
    a : AlphaLevelFuzzyNumber
    b : AlphaLevelFuzzyNumber or float

    Returns
    -------
    AlphaLevelFuzzyNumber
    """
    if op == "scale":
        if isinstance(b, AlphaLevelFuzzyNumber):
            raise UsageError("scale takes a crisp factor")
        return a._from_interval(a.as_interval().scale(float(b)))
    if not isinstance(b, AlphaLevelFuzzyNumber):
        raise UsageError(f"{op} takes two fuzzy numbers")
    a._same_grid(b)
    if op == "add":
        result = a.as_interval() + b.as_interval()
    elif op == "sub":
        result = a.as_interval() - b.as_interval()
    elif op == "mul":
        result = a.as_interval() * b.as_interval()
    elif op == "div":
        if b.lower[0] <= 0.0 <= b.upper[0]:
            raise FuzzyDomainError(
                f"divisor support [{b.lower[0]:g}, {b.upper[0]:g}] contains zero",
                offending=(b.lower[0], b.upper[0]),
            )
        result = a.as_interval() / b.as_interval()
    else:
        raise UsageError(f"unknown fuzzy operation {op!r}")
    return a._from_interval(result)


@dataclass(frozen=True)
class TriangularFuzzy:
    """
    Triangular fuzzy number (u1, u2, u3)

    Parameters
    ----------
    u1 : float
        Left foot
    u2 : float
        Peak
    u3 : float
        Right foot
    """

    u1: float
    u2: float
    u3: float

    def __post_init__(self):
        for left, right in (("u1", "u2"), ("u2", "u3")):
            a, b = getattr(self, left), getattr(self, right)
            if a > b:
                raise FuzzyDomainError(
                    f"triangular number needs {left} <= {right}, got {a:g} > {b:g}",
                    offending=(left, right),
                )

    @property
    def is_crisp(self):
        return self.u1 == self.u3

    @property
    def left_slope(self):
        return self.u2 - self.u1

    @property
    def right_slope(self):
        return self.u2 - self.u3

    def lower(self, alpha):
        return self.u1 + np.multiply(alpha, self.u2 - self.u1)

    def upper(self, alpha):
        return self.u3 - np.multiply(alpha, self.u3 - self.u2)

    def cut(self, alpha):
        return Interval(self.lower(alpha), self.upper(alpha))

    def membership(self, value):
        """ membership grade of a crisp value """
        value = np.asarray(value, dtype=float)
        grade = np.zeros_like(value)
        if self.is_crisp:
            grade = np.where(value == self.u2, 1.0, 0.0)
            return _unwrap(grade)
        with np.errstate(divide="ignore", invalid="ignore"):
            rising = np.where(self.u2 > self.u1, (value - self.u1) / (self.u2 - self.u1), 1.0)
            falling = np.where(self.u3 > self.u2, (self.u3 - value) / (self.u3 - self.u2), 1.0)
        grade = np.where((value >= self.u1) & (value <= self.u2), rising, grade)
        grade = np.where((value > self.u2) & (value <= self.u3), falling, grade)
        return _unwrap(np.clip(grade, 0.0, 1.0))

    def discretize(self, level_count=DEFAULT_LEVEL_COUNT):
        return make_triangular(self.u1, self.u2, self.u3, level_count)


def make_triangular(u1, u2, u3, level_count=DEFAULT_LEVEL_COUNT):
    """
    Discretize the triangular number (u1, u2, u3) on a uniform alpha grid.

    The cut at alpha is [u1 + alpha (u2 - u1), u3 - alpha (u3 - u2)].
    """
    shape = TriangularFuzzy(float(u1), float(u2), float(u3))
    alphas = alpha_grid(level_count)
    return AlphaLevelFuzzyNumber(alphas, shape.lower(alphas), shape.upper(alphas))


def from_endpoint_samples(lower, upper, level_count=DEFAULT_LEVEL_COUNT):
    """
    Promote endpoint functions of alpha to a fuzzy number.

    Parameters
    ----------
    lower, upper : callable or array_like
        Endpoint functions of alpha, or their samples on the alpha grid
    level_count : int
        Number of alpha levels

    Returns
    -------
    AlphaLevelFuzzyNumber

    Raises
    ------
    FuzzyRejection
        When the samples are not nested intervals; ``verdict`` locates the
        first violating level
    """
    alphas = alpha_grid(level_count)
    lo = np.array([lower(a) for a in alphas], dtype=float) if callable(lower) else np.asarray(lower, dtype=float)
    hi = np.array([upper(a) for a in alphas], dtype=float) if callable(upper) else np.asarray(upper, dtype=float)
    verdict = validate_fuzzy(list(zip(alphas, zip(lo, hi))))
    if not verdict:
        logger.debug("endpoint samples rejected: %s at alpha=%g", verdict.reason, verdict.alpha)
        raise FuzzyRejection(verdict)
    return AlphaLevelFuzzyNumber(alphas, lo, hi)


if __name__ == "__main__":

    k = make_triangular(0.5, 1.0, 1.5)
    c = make_triangular(-1.5, -1.0, -0.5)

    print("K: {}".format(k))
    print("K * C: {}".format(k * c))
    print("(K * C) at alpha 0.5: {}".format((k * c).cut(0.5)))
