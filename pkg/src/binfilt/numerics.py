"""Dual-mode arithmetic helpers: float64 with tolerances, or exact rationals.

Exact mode represents every weight, price and kernel entry as a
`fractions.Fraction`, which makes null-set logic (equality with zero) and the
risk-neutral identities bit-exact. Decimal literals are converted through
their string form, so 0.3 means 3/10, not the binary float.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Number = Union[int, float, Fraction]

FLOAT_NULL_TOL = 1e-12
FLOAT_NORM_TOL = 1e-9
FLOAT_CHECK_TOL = 1e-9


def to_number(x, exact: bool) -> Number:
    """Coerce a scalar from config/user input into the active mode."""
    if exact:
        if isinstance(x, Fraction):
            return x
        if isinstance(x, int):
            return Fraction(x)
        if isinstance(x, float):
            return Fraction(str(x))
        if isinstance(x, str):
            return Fraction(x)
        raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")
    if isinstance(x, str):
        if "/" in x:
            return float(Fraction(x))
        return float(x)
    return float(x)


def zero(exact: bool) -> Number:
    return Fraction(0) if exact else 0.0


def one(exact: bool) -> Number:
    return Fraction(1) if exact else 1.0


def as_float(x: Number) -> float:
    return float(x)


def number_str(x: Number) -> str:
    """Serialize for CSV/JSON: rationals as 'p/q', floats as repr."""
    if isinstance(x, Fraction):
        return str(x)
    return repr(float(x))


@dataclass(frozen=True)
class Tolerances:
    """Tolerance policy; exact mode uses hard zero everywhere."""

    null_tol: Number = FLOAT_NULL_TOL
    norm_tol: Number = FLOAT_NORM_TOL
    check_tol: Number = FLOAT_CHECK_TOL

    @classmethod
    def for_mode(cls, exact: bool, check_tol=None) -> "Tolerances":
        if exact:
            z = Fraction(0)
            return cls(z, z, z if check_tol is None else to_number(check_tol, True))
        return cls(
            FLOAT_NULL_TOL,
            FLOAT_NORM_TOL,
            FLOAT_CHECK_TOL if check_tol is None else float(check_tol),
        )
