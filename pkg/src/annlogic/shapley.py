"""Exact Shapley values of the attributes from a cell's minterm weights.

A coalition ``S`` of attributes is identified with the minterm whose
non-negated attributes are exactly ``S``, using the same bit order as the
minterm encoding (attribute 1 is the most significant bit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import StructuralError
from .minterms import MAX_ATTRIBUTES, check_attribute_count


@dataclass(frozen=True)
class ShapleyResult:
    values: tuple
    cell: int | None = None
    variant: str = "global"


def coalition_index(S, n: int) -> int:
    k = 0
    for j in S:
        k |= 1 << (n - 1 - j)
    return k


def _shapley(v: Sequence, n: int, exact: bool) -> tuple:
    size = 1 << n
    if exact:
        fact = [math.factorial(i) for i in range(n + 1)]
        w = [Fraction(fact[s] * fact[n - 1 - s], fact[n]) for s in range(n)]
        vals = []
        for j in range(n):
            bit = 1 << (n - 1 - j)
            total = Fraction(0)
            for k in range(size):
                if not k & bit:
                    total += w[bin(k).count("1")] * (Fraction(v[k | bit]) - Fraction(v[k]))
            vals.append(total)
        return tuple(vals)
    v = np.asarray(v, dtype=float)
    ks = np.arange(size)
    popcount = np.array([bin(k).count("1") for k in range(size)])
    w = np.array([math.factorial(s) * math.factorial(n - 1 - s) / math.factorial(n)
                  for s in range(n)])
    vals = []
    for j in range(n):
        bit = 1 << (n - 1 - j)
        without = ks[(ks & bit) == 0]
        vals.append(float(np.sum(w[popcount[without]] * (v[without | bit] - v[without]))))
    return tuple(vals)


def _check(mw, n: int | None, max_n: int) -> int:
    size = len(mw)
    if n is None:
        n = size.bit_length() - 1
    check_attribute_count(n, max_n)
    if size != 1 << n:
        raise StructuralError(f"expected {1 << n} minterm weights, got {size}")
    return n


def shapley_global(mw: Sequence, n: int | None = None, cell: int | None = None,
                   exact: bool = False, max_n: int = MAX_ATTRIBUTES) -> ShapleyResult:
    """Shapley values with ``v(S) = mw[k(S)]``.

    ``exact=True`` computes in rationals (pass ``Fraction`` or integer weights).
    """
    n = _check(mw, n, max_n)
    return ShapleyResult(_shapley(mw, n, exact), cell, "global")


def shapley_object(mw: Sequence, mt: Sequence, cell: int | None = None,
                   exact: bool = False, max_n: int = MAX_ATTRIBUTES) -> ShapleyResult:
    """Object-dependent variant with ``v(S) = mt[k(S)] * mw[k(S)]``."""
    n = _check(mw, None, max_n)
    if len(mt) != len(mw):
        raise StructuralError("minterm values and weights differ in length")
    if exact:
        v = [Fraction(a) * Fraction(b) for a, b in zip(mt, mw)]
    else:
        v = np.asarray(mt, dtype=float) * np.asarray(mw, dtype=float)
    return ShapleyResult(_shapley(v, n, exact), cell, "object")
