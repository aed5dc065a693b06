"""Minterm encoding of attribute vectors.

Attribute ``a_1`` is always the most significant bit of a minterm index:
for ``n = 2`` minterm 2 has bit code ``10``, i.e. ``a_1 AND NOT a_2``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

MAX_ATTRIBUTES = 16


def check_attribute_count(n: int, max_n: int = MAX_ATTRIBUTES) -> None:
    if n < 1:
        raise ConfigurationError(f"need at least one attribute, got {n}")
    if n > max_n:
        raise ConfigurationError(
            f"{n} attributes exceed the configured cap of {max_n} (2^n minterms)"
        )


def validate_attributes(x: Sequence[float]) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"attribute vector must be one-dimensional, got shape {arr.shape}")
    for j, v in enumerate(arr):
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"attribute {j} has value {v!r} outside [0, 1]")
    return arr


def to_minterms(x: Sequence[float], max_n: int = MAX_ATTRIBUTES) -> np.ndarray:
    """Return the ``2^n`` minterm values of an attribute vector.

    ``result[k]`` is the product over all attributes of ``x[j]`` when bit
    ``j`` of ``k`` is set and ``1 - x[j]`` otherwise.
    """
    arr = validate_attributes(x)
    check_attribute_count(arr.size, max_n)
    mt = np.ones(1)
    for v in arr:
        mt = np.kron(mt, np.array([1.0 - v, v]))
    return mt


def to_minterms_batch(X: np.ndarray, max_n: int = MAX_ATTRIBUTES) -> np.ndarray:
    """Row-wise :func:`to_minterms` for a ``(m, n)`` matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DomainError(f"expected a 2-D attribute matrix, got shape {X.shape}")
    m, n = X.shape
    check_attribute_count(n, max_n)
    bad = np.argwhere((X < 0.0) | (X > 1.0) | np.isnan(X))
    if bad.size:
        i, j = bad[0]
        raise DomainError(f"object {i}: attribute {j} has value {X[i, j]!r} outside [0, 1]")
    mt = np.ones((m, 1))
    for j in range(n):
        col = X[:, j : j + 1]
        # new index = old * 2 + bit, as np.kron does for a single vector
        mt = np.stack([mt * (1.0 - col), mt * col], axis=2).reshape(m, -1)
    return mt


def bitcode_of(k: int, n: int) -> tuple[int, ...]:
    """Bits ``(b_1, ..., b_n)`` of minterm ``k``; ``b_1`` is most significant."""
    if not 0 <= k < (1 << n):
        raise DomainError(f"minterm index {k} out of range for n={n}")
    return tuple((k >> (n - 1 - j)) & 1 for j in range(n))


def index_of(bits: Sequence[int]) -> int:
    k = 0
    for b in bits:
        if b not in (0, 1):
            raise DomainError(f"bit code entries must be 0 or 1, got {b!r}")
        k = (k << 1) | int(b)
    return k


def attribute_bit(j: int, n: int) -> int:
    """Mask of attribute ``j`` (0-based) inside a minterm index."""
    return 1 << (n - 1 - j)


def bitcode_str(k: int, n: int) -> str:
    return "".join(str(b) for b in bitcode_of(k, n))
