"""Helpers for switching structural checks to exact rational arithmetic."""

from fractions import Fraction
from numbers import Integral, Rational

import numpy as np

_MAX_DENOMINATOR = 10**6


def to_fraction(x):
    """Return ``x`` as a Fraction when it is (or is a short decimal for) a rational.

    Floats are accepted when they round-trip through a small-denominator
    fraction, so ``0.1`` or ``2/3`` typed into a config are treated exactly
    while ``np.pi`` is not. Returns None when no exact value is available.
    """
    if isinstance(x, (bool, np.bool_)):
        return Fraction(int(x))
    if isinstance(x, (Integral, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, (float, np.floating)):
        xf = float(x)
        if not np.isfinite(xf):
            return None
        fr = Fraction(repr(xf)).limit_denominator(_MAX_DENOMINATOR)
        return fr if float(fr) == xf else None
    return None


def all_exact(values):
    """Convert an iterable to Fractions, or return None if any entry is not rational."""
    out = []
    for v in values:
        fr = to_fraction(v)
        if fr is None:
            return None
        out.append(fr)
    return out
