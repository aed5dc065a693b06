"""Bit-tensor quantization of per-cell minterm weights.

A weight ``v`` in ``[a, b]`` is mapped by the increasing linear function

    f(v) = (v - a) / (b - a) * 2**n_bits / (1 + epsilon)

and truncated to an ``n_bits`` integer. The ``1 + epsilon`` denominator
keeps ``f(b)`` strictly below ``2**n_bits``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateRangeError, DomainError, StructuralError, UncoveredCellError
from .network import PartitionCell


def default_epsilon(n_bits: int) -> float:
    return 2.0 ** -(n_bits + 4)


@dataclass(frozen=True)
class QuantizationParams:
    a: float
    b: float
    n_bits: int = 7
    epsilon: float | None = None

    def __post_init__(self):
        if self.n_bits < 1:
            raise DomainError(f"n_bits must be >= 1, got {self.n_bits}")
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", default_epsilon(self.n_bits))
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not self.a < self.b:
            raise DegenerateRangeError(f"degenerate weight range [{self.a}, {self.b}]")

    @property
    def levels(self) -> int:
        return 1 << self.n_bits

    @property
    def scale(self) -> float:
        """Slope of ``f``."""
        return self.levels / ((self.b - self.a) * (1.0 + self.epsilon))


def fit_params(cells: Sequence[PartitionCell], n_bits: int = 7,
               epsilon: float | None = None) -> QuantizationParams:
    if not cells:
        raise DegenerateRangeError("no cells to derive a weight range from")
    a = min(float(np.min(c.mw)) for c in cells)
    b = max(float(np.max(c.mw)) for c in cells)
    return QuantizationParams(a, b, n_bits, epsilon)


def linear_map(v, params: QuantizationParams):
    """The un-floored map ``f``."""
    return (np.asarray(v, dtype=float) - params.a) / (params.b - params.a) * (
        params.levels / (1.0 + params.epsilon)
    )


def quantize(v, params: QuantizationParams, clamp: bool = False):
    """``floor(f(v))``; scalars give an ``int``, arrays an integer array."""
    arr = np.asarray(v, dtype=float)
    if clamp:
        arr = np.clip(arr, params.a, params.b)
    elif np.any(arr < params.a) or np.any(arr > params.b):
        raise DomainError(f"value outside quantization range [{params.a}, {params.b}]")
    q = np.floor(linear_map(arr, params)).astype(np.int64)
    # guard against one-ulp overshoot at the upper end
    q = np.clip(q, 0, params.levels - 1)
    return int(q) if q.ndim == 0 else q


def reconstruct(v_prime, params: QuantizationParams):
    vp = np.asarray(v_prime)
    if np.any(vp < 0) or np.any(vp >= params.levels):
        raise DomainError(f"quantized value outside [0, {params.levels - 1}]")
    out = (vp * (1.0 + params.epsilon) / params.levels + 2.0 ** -(params.n_bits + 1)) * (
        params.b - params.a
    ) + params.a
    return float(out) if np.ndim(out) == 0 else out


def map_threshold(tau: float, params: QuantizationParams) -> float:
    """Threshold for quantized scores: ``f(tau) - 1/2``.

    Truncation lowers each weight by 1/2 on average, and minterm values sum
    to one, so scores drop by about 1/2 as well.
    """
    return float(linear_map(tau, params)) - 0.5


@dataclass(frozen=True)
class BitTensor:
    """``bits[i, k, bl]`` is bit ``bl`` of the quantized weight of minterm ``k`` in ``cells[i]``."""

    cells: tuple[int, ...]
    n: int
    n_bits: int
    bits: np.ndarray
    params: QuantizationParams | None = None
    tau_prime: float | None = None
    supports: tuple[int, ...] | None = None

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        expected = (len(self.cells), 1 << self.n, self.n_bits)
        if bits.shape != expected:
            raise StructuralError(f"bit array shape {bits.shape}, expected {expected}")
        if len(set(self.cells)) != len(self.cells):
            raise StructuralError("duplicate partition numbers in bit tensor")
        if self.supports is not None and len(self.supports) != len(self.cells):
            raise StructuralError("one support count per cell required")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))

    @classmethod
    def from_integers(cls, cells: Sequence[int], values: np.ndarray, n_bits: int, **kw) -> "BitTensor":
        values = np.asarray(values, dtype=np.int64)
        n = int(math.log2(values.shape[1]))
        levels = np.arange(n_bits)
        bits = (values[:, :, None] >> levels) & 1
        return cls(tuple(cells), n, n_bits, bits.astype(bool), **kw)

    def integers(self) -> np.ndarray:
        """Recompose the bits into ``(|P|, 2^n)`` integers."""
        return (self.bits.astype(np.int64) << np.arange(self.n_bits)).sum(axis=2)

    def index(self, p: int) -> int:
        try:
            return self.cells.index(p)
        except ValueError:
            raise UncoveredCellError(p) from None

    def with_bits(self, bits: np.ndarray) -> "BitTensor":
        return BitTensor(self.cells, self.n, self.n_bits, bits, self.params, self.tau_prime,
                         self.supports)


def build_bit_tensor(cells: Sequence[PartitionCell], params: QuantizationParams,
                     tau: float | None = None, clamp: bool = False) -> BitTensor:
    """Quantize the weights of ``cells`` (in the given order) into a bit tensor."""
    if not cells:
        raise StructuralError("bit tensor needs at least one cell")
    values = np.stack([quantize(c.mw, params, clamp=clamp) for c in cells])
    return BitTensor.from_integers(
        [c.number for c in cells],
        values,
        params.n_bits,
        params=params,
        tau_prime=None if tau is None else map_threshold(tau, params),
        supports=tuple(c.support for c in cells),
    )


def power(bt: BitTensor) -> int:
    """Energy of the tensor: sum of all quantized weights."""
    return int(bt.integers().sum())


def weighted_power(bt: BitTensor) -> int:
    """Energy with every cell counted by its number of training objects."""
    if bt.supports is None:
        raise StructuralError("bit tensor carries no support counts")
    return int((bt.integers().sum(axis=1) * np.asarray(bt.supports, dtype=np.int64)).sum())


def bit_tensor_score(bt: BitTensor, p: int, mt) -> float:
    """``sum_bl 2^bl * sum_k mt[k] * bits[p, k, bl]``.

    Raises :class:`UncoveredCellError` if ``p`` is not a tensor cell.
    """
    i = bt.index(p)
    mt = np.asarray(mt, dtype=float)
    if mt.shape != (1 << bt.n,):
        raise StructuralError(f"expected {1 << bt.n} minterm values, got {mt.shape}")
    per_level = mt @ bt.bits[i].astype(float)
    return float(per_level @ (2.0 ** np.arange(bt.n_bits)))
