"""Exponents in ``[1, inf]`` and the matching l^p norms.

Finite exponents are stored as :class:`fractions.Fraction` so that ``3/2``
stays ``3/2``; infinity is the float sentinel :data:`INF`, which is compared by
identity of meaning (``p == INF``) and never approximated by a large number.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import DomainError

INF = math.inf

Exponent = Union[Fraction, float]


def as_exponent(p) -> Exponent:
    """Normalize ``p`` to a Fraction >= 1 or the ``INF`` sentinel."""
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        p = Fraction(p)
    if isinstance(p, float) and math.isinf(p):
        if p < 0:
            raise DomainError("exponent must be >= 1")
        return INF
    try:
        frac = Fraction(p)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"not an exponent: {p!r}") from exc
    if frac < 1:
        raise DomainError(f"exponent must be >= 1, got {p!r}")
    return frac


def is_inf(p: Exponent) -> bool:
    return isinstance(p, float) and math.isinf(p)


def conjugate(p) -> Exponent:
    """Return q with 1/p + 1/q = 1."""
    p = as_exponent(p)
    if is_inf(p):
        return Fraction(1)
    if p == 1:
        return INF
    return p / (p - 1)


def fmt_exponent(p) -> str:
    p = as_exponent(p)
    if is_inf(p):
        return "inf"
    return str(p)


def to_json_exponent(p):
    p = as_exponent(p)
    if is_inf(p):
        return "inf"
    if p.denominator == 1:
        return int(p)
    return str(p)


def lp_norm(x, p) -> float:
    """``(sum |x_i|^p)^(1/p)``, or ``max |x_i|`` for ``p = INF``."""
    p = as_exponent(p)
    x = np.abs(np.asarray(x, dtype=float))
    if x.size == 0:
        return 0.0
    if is_inf(p):
        return float(x.max())
    if p == 1:
        return float(x.sum())
    scale = x.max()
    if scale == 0.0:
        return 0.0
    pf = float(p)
    return float(scale * np.sum((x / scale) ** pf) ** (1.0 / pf))


def volume_power(n_sites: int, p) -> float:
    """``n^(1/p)`` with ``n^(1/inf) = 1``."""
    p = as_exponent(p)
    if is_inf(p):
        return 1.0
    return float(n_sites) ** (1.0 / float(p))
