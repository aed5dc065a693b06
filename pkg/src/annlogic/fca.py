"""Dyadic and triadic concept analysis on small bit contexts.

Sets are handled as Python ``int`` bitsets over carrier positions; the
public types expose ``frozenset`` of carrier labels.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, StructuralError
from .network import best_threshold
from .quantizer import BitTensor, power as tensor_power, weighted_power


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _mask(positions: Iterable[int]) -> int:
    m = 0
    for i in positions:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class DyadicConcept:
    extent: frozenset
    intent: frozenset


class DyadicContext:
    """Cross table ``(G, M, I)``."""

    def __init__(self, objects: Sequence[Hashable], attributes: Sequence[Hashable],
                 incidence: Iterable[tuple[Hashable, Hashable]]):
        self.objects = list(objects)
        self.attributes = list(attributes)
        self._g = {g: i for i, g in enumerate(self.objects)}
        self._m = {m: i for i, m in enumerate(self.attributes)}
        if len(self._g) != len(self.objects) or len(self._m) != len(self.attributes):
            raise StructuralError("duplicate object or attribute labels")
        self.rows = [0] * len(self.objects)
        self.cols = [0] * len(self.attributes)
        for g, m in incidence:
            if g not in self._g or m not in self._m:
                raise DomainError(f"incidence ({g!r}, {m!r}) outside G x M")
            gi, mi = self._g[g], self._m[m]
            self.rows[gi] |= 1 << mi
            self.cols[mi] |= 1 << gi

    @classmethod
    def from_matrix(cls, matrix, objects=None, attributes=None) -> "DyadicContext":
        arr = np.asarray(matrix, dtype=bool)
        objects = list(range(arr.shape[0])) if objects is None else objects
        attributes = list(range(arr.shape[1])) if attributes is None else attributes
        pairs = [(objects[i], attributes[j]) for i, j in zip(*np.nonzero(arr))]
        return cls(objects, attributes, pairs)

    @property
    def incidence(self) -> set[tuple]:
        return {(self.objects[g], self.attributes[m])
                for g, row in enumerate(self.rows) for m in _bits(row)}

    def _intent_mask(self, gmask: int) -> int:
        out = (1 << len(self.attributes)) - 1
        for g in _bits(gmask):
            out &= self.rows[g]
        return out

    def _extent_mask(self, mmask: int) -> int:
        out = (1 << len(self.objects)) - 1
        for m in _bits(mmask):
            out &= self.cols[m]
        return out

    def _gmask(self, A) -> int:
        try:
            return _mask(self._g[g] for g in A)
        except KeyError as e:
            raise DomainError(f"{e.args[0]!r} is not an object of the context") from None

    def _mmask(self, B) -> int:
        try:
            return _mask(self._m[m] for m in B)
        except KeyError as e:
            raise DomainError(f"{e.args[0]!r} is not an attribute of the context") from None

    def derive_intent(self, A: Iterable) -> frozenset:
        """``A'``: attributes shared by every object of ``A``."""
        return frozenset(self.attributes[i] for i in _bits(self._intent_mask(self._gmask(A))))

    def derive_extent(self, B: Iterable) -> frozenset:
        """``B'``: objects having every attribute of ``B``."""
        return frozenset(self.objects[i] for i in _bits(self._extent_mask(self._mmask(B))))

    def _pairs_from_singletons(self) -> list[tuple[int, int]]:
        seen = {}
        for g, row in enumerate(self.rows):
            seen.setdefault((self._extent_mask(row), row), None)
        for m, col in enumerate(self.cols):
            seen.setdefault((col, self._intent_mask(col)), None)
        return list(seen)

    def concepts_from_singletons(self) -> list[DyadicConcept]:
        """Concepts generated by closing every single object and attribute.

        At most ``|G| + |M|`` concepts; together they cover every cross.
        """
        return [
            DyadicConcept(
                frozenset(self.objects[i] for i in _bits(e)),
                frozenset(self.attributes[i] for i in _bits(n)),
            )
            for e, n in self._pairs_from_singletons()
        ]

    def is_concept(self, A, B) -> bool:
        return self.derive_intent(A) == frozenset(B) and self.derive_extent(B) == frozenset(A)


def concepts_from_singletons(ctx: DyadicContext) -> list[DyadicConcept]:
    return ctx.concepts_from_singletons()


# -- Burmeister CXT interchange -------------------------------------------------

def write_cxt(ctx: DyadicContext) -> str:
    lines = ["B", "", str(len(ctx.objects)), str(len(ctx.attributes)), ""]
    lines += [str(g) for g in ctx.objects]
    lines += [str(m) for m in ctx.attributes]
    for row in ctx.rows:
        lines.append("".join("X" if row >> j & 1 else "." for j in range(len(ctx.attributes))))
    return "\n".join(lines) + "\n"


def read_cxt(text: str) -> DyadicContext:
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    if not lines or lines[0].strip() != "B":
        raise StructuralError("CXT data must start with 'B'")
    pos = 1
    while pos < len(lines) and not lines[pos].strip():
        pos += 1
    n_g, n_m = int(lines[pos]), int(lines[pos + 1])
    pos += 2
    while pos < len(lines) and not lines[pos].strip():
        pos += 1
    objects = lines[pos : pos + n_g]
    attributes = lines[pos + n_g : pos + n_g + n_m]
    rows = lines[pos + n_g + n_m : pos + 2 * n_g + n_m]
    if len(rows) != n_g:
        raise StructuralError("CXT data ends before all rows were read")
    pairs = []
    for g, row in zip(objects, rows):
        if len(row) < n_m:
            raise StructuralError(f"row for {g!r} is too short")
        pairs += [(g, m) for m, ch in zip(attributes, row) if ch in "Xx"]
    return DyadicContext(objects, attributes, pairs)


# -- triadic contexts -------------------------------------------------------------

@dataclass(frozen=True)
class TriadicConcept:
    X1: frozenset
    X2: frozenset
    X3: frozenset
    power: int | None = None
    relpower: Fraction | None = None

    @property
    def powersum(self) -> int:
        return sum(1 << int(b) for b in self.X3)

    def key(self) -> tuple:
        return (tuple(sorted(self.X1)), tuple(sorted(self.X2)), tuple(sorted(self.X3)))

    def cuboid(self) -> set[tuple]:
        return {(a, b, c) for a in self.X1 for b in self.X2 for c in self.X3}


@dataclass(frozen=True)
class TriadicContext:
    """``(K1, K2, K3, Y)`` with ``Y`` stored as a boolean array over positions."""

    K1: tuple
    K2: tuple
    K3: tuple
    Y: np.ndarray

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=bool)
        if Y.shape != (len(self.K1), len(self.K2), len(self.K3)):
            raise StructuralError(f"relation shape {Y.shape} does not match carriers")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "K1", tuple(self.K1))
        object.__setattr__(self, "K2", tuple(self.K2))
        object.__setattr__(self, "K3", tuple(self.K3))

    @classmethod
    def from_bit_tensor(cls, bt: BitTensor) -> "TriadicContext":
        return cls(bt.cells, tuple(range(1 << bt.n)), tuple(range(bt.n_bits)), bt.bits)

    @classmethod
    def from_triples(cls, K1, K2, K3, Y: Iterable[tuple]) -> "TriadicContext":
        i1 = {v: i for i, v in enumerate(K1)}
        i2 = {v: i for i, v in enumerate(K2)}
        i3 = {v: i for i, v in enumerate(K3)}
        arr = np.zeros((len(K1), len(K2), len(K3)), dtype=bool)
        for a, b, c in Y:
            arr[i1[a], i2[b], i3[c]] = True
        return cls(tuple(K1), tuple(K2), tuple(K3), arr)

    def _idx(self, carrier, values):
        pos = {v: i for i, v in enumerate(carrier)}
        return [pos[v] for v in values]

    def derive1(self, X2, X3) -> frozenset:
        sub = self.Y[:, self._idx(self.K2, X2)][:, :, self._idx(self.K3, X3)]
        return frozenset(self.K1[i] for i in np.flatnonzero(sub.all(axis=(1, 2))))

    def derive2(self, X1, X3) -> frozenset:
        sub = self.Y[self._idx(self.K1, X1)][:, :, self._idx(self.K3, X3)]
        return frozenset(self.K2[i] for i in np.flatnonzero(sub.all(axis=(0, 2))))

    def derive3(self, X1, X2) -> frozenset:
        sub = self.Y[self._idx(self.K1, X1)][:, self._idx(self.K2, X2)]
        return frozenset(self.K3[i] for i in np.flatnonzero(sub.all(axis=(0, 1))))

    def is_concept(self, c: TriadicConcept) -> bool:
        return (c.X1 == self.derive1(c.X2, c.X3) and c.X2 == self.derive2(c.X1, c.X3)
                and c.X3 == self.derive3(c.X1, c.X2))

    def triconcepts(self) -> list[TriadicConcept]:
        """Triadic concepts grown from the singleton concepts of every ``K1`` slice.

        Concepts with an empty minterm or bit-level set cover no crosses and
        are dropped. Output is sorted by the canonical sorted-triple form.
        """
        Y = self.Y
        found: dict[tuple, TriadicConcept] = {}
        for i in range(len(self.K1)):
            slice_ = Y[i]
            rows = [_mask(np.flatnonzero(r)) for r in slice_]
            cols = [_mask(np.flatnonzero(c)) for c in slice_.T]
            full2 = (1 << len(self.K2)) - 1
            full3 = (1 << len(self.K3)) - 1
            pairs = set()
            for r in rows:
                ext = full2
                for m in _bits(r):
                    ext &= cols[m]
                pairs.add((ext, r))
            for c in cols:
                inn = full3
                for g in _bits(c):
                    inn &= rows[g]
                pairs.add((c, inn))
            for e2, e3 in pairs:
                if not e2 or not e3:
                    continue
                p2, p3 = _bits(e2), _bits(e3)
                x1 = np.flatnonzero(Y[:, p2][:, :, p3].all(axis=(1, 2)))
                c = TriadicConcept(
                    frozenset(self.K1[j] for j in x1),
                    frozenset(self.K2[j] for j in p2),
                    frozenset(self.K3[j] for j in p3),
                )
                found.setdefault(c.key(), c)
        return [found[k] for k in sorted(found)]


def triconcepts(tctx: TriadicContext | BitTensor) -> list[TriadicConcept]:
    if isinstance(tctx, BitTensor):
        tctx = TriadicContext.from_bit_tensor(tctx)
    return tctx.triconcepts()


# -- concept energy and selection -----------------------------------------------

class SelectionMethod(str, enum.Enum):
    M1 = "M1"  # relative power
    M2 = "M2"  # number of cells * power sum
    M3 = "M3"  # power sum
    M4 = "M4"  # accuracy over the objects of the covered cells

    @classmethod
    def parse(cls, value) -> "SelectionMethod":
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigurationError(f"unknown selection method {value!r}") from None


@dataclass
class ObjectTable:
    """Training objects as seen by concept scoring: minterms, cells and targets."""

    mt: np.ndarray
    cells: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.mt = np.atleast_2d(np.asarray(self.mt, dtype=float))
        self.cells = np.asarray(self.cells, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=int)

    def support(self, cells: Iterable[int]) -> int:
        return int(np.isin(self.cells, list(cells)).sum())


def _cell_weight(c: TriadicConcept, supports: dict | None) -> int:
    if supports is None:
        return len(c.X1)
    return sum(supports[p] for p in c.X1)


def concept_power(c: TriadicConcept, supports: dict | None = None) -> int:
    """``|X1| * |X2| * powersum``; with ``supports`` cells count by their objects."""
    return _cell_weight(c, supports) * len(c.X2) * c.powersum


def _supports_of(bt: BitTensor, weighted: bool) -> dict | None:
    if not weighted:
        return None
    if bt.supports is None:
        raise StructuralError("support-weighted energy needs cell supports in the bit tensor")
    return dict(zip(bt.cells, bt.supports))


def relpower(c: TriadicConcept, bt: BitTensor, weighted: bool = False) -> Fraction:
    total = weighted_power(bt) if weighted else tensor_power(bt)
    if total == 0:
        raise DomainError("relative power undefined for a tensor without energy")
    return Fraction(concept_power(c, _supports_of(bt, weighted)), total)


def concept_accuracy(c: TriadicConcept, data: ObjectTable) -> tuple[Fraction, float | None]:
    """Best-threshold accuracy of ``powersum * [tree]`` over objects in ``X1``.

    The tree evaluation equals the sum of the object's minterm values over
    ``X2``, which is what gets thresholded here. Returns the accuracy and
    the threshold (``None`` when no object falls into the cells).
    """
    sel = np.isin(data.cells, list(c.X1))
    m = int(sel.sum())
    if m == 0:
        return Fraction(0), None
    scores = c.powersum * data.mt[sel][:, sorted(c.X2)].sum(axis=1)
    thr, acc = best_threshold(scores, data.y[sel])
    return Fraction(round(acc * m), m), thr


def score_concept(c: TriadicConcept, method, bt: BitTensor | None = None,
                  data: ObjectTable | None = None, weighted: bool = False):
    method = SelectionMethod.parse(method)
    supports = _supports_of(bt, weighted) if bt is not None else None
    if method is SelectionMethod.M1:
        if bt is None:
            raise ConfigurationError("M1 needs the bit tensor")
        return relpower(c, bt, weighted)
    if method is SelectionMethod.M2:
        return _cell_weight(c, supports) * c.powersum
    if method is SelectionMethod.M3:
        return c.powersum
    if data is None:
        raise ConfigurationError("selection method M4 requires training data")
    return concept_accuracy(c, data)[0]


def excl_triconcepts(bt: BitTensor, method="M1", data: ObjectTable | None = None,
                     weighted: bool = False) -> list[TriadicConcept]:
    """Greedy partition of the set bits into exclusive triadic concepts.

    Each round recomputes the triconcepts of the remaining tensor, keeps the
    best one under ``method`` and clears its cuboid. Ties are broken by the
    sorted cell, minterm and bit-level tuples. Returned concepts carry
    ``power`` and ``relpower`` relative to the original tensor.
    """
    method = SelectionMethod.parse(method)
    if method is SelectionMethod.M4 and data is None:
        raise ConfigurationError("selection method M4 requires training data")
    supports = _supports_of(bt, weighted)
    total = weighted_power(bt) if weighted else tensor_power(bt)
    cell_pos = {p: i for i, p in enumerate(bt.cells)}
    bits = bt.bits.copy()
    result = []
    while bits.any():
        current = bt.with_bits(bits)
        candidates = triconcepts(current)
        # M1 ranks by relative power; the current tensor only rescales it
        best = min(
            candidates,
            key=lambda c: (-_selection_score(c, method, supports, data), c.key()),
        )
        i1 = [cell_pos[p] for p in sorted(best.X1)]
        i2 = sorted(best.X2)
        i3 = sorted(best.X3)
        bits[np.ix_(i1, i2, i3)] = False
        pw = concept_power(best, supports)
        result.append(replace(best, power=pw, relpower=Fraction(pw, total)))
    return result


def _selection_score(c, method, supports, data):
    if method is SelectionMethod.M1:
        return concept_power(c, supports)
    if method is SelectionMethod.M2:
        return _cell_weight(c, supports) * c.powersum
    if method is SelectionMethod.M3:
        return c.powersum
    return concept_accuracy(c, data)[0]


def concept_implications(concepts: Sequence[TriadicConcept]) -> list[tuple[int, int]]:
    """Edges ``(i, j)`` where concept ``i`` implies concept ``j``.

    ``i`` implies ``j`` when its minterms are a subset of ``j``'s and its
    cells a superset. Equal concepts give edges in both directions.
    """
    edges = []
    for i, c in enumerate(concepts):
        for j, d in enumerate(concepts):
            if i != j and c.X2 <= d.X2 and c.X1 >= d.X1:
                edges.append((i, j))
    return edges
